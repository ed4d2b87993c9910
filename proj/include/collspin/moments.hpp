#pragma once

#include <Eigen/Dense>

#include "collspin/ode.hpp"
#include "collspin/timeseries.hpp"

namespace collspin {

// The four closure variables <J1z>, <J2z>, <A12>, <J1z J2z>.
struct MomentState {
    double jz1 = 0.0;
    double jz2 = 0.0;
    double a12 = 0.0;
    double jz1jz2 = 0.0;

    Eigen::Vector4d to_vector() const { return {jz1, jz2, a12, jz1jz2}; }
    static MomentState from_vector(const Eigen::Vector4d& v)
    {
        return {v(0), v(1), v(2), v(3)};
    }

    // 2<J1.J2>, conserved along every closure trajectory.
    double spin_correlation_invariant() const { return a12 + 2.0 * jz1jz2; }
};

// Moment state of the product initial configurations: extremal m values
// give a12 = 0 and jz1jz2 = m1*m2 exactly.
MomentState initial_moments(const InitialState& init, SpinDomain d1, SpinDomain d2);

// Time derivative (in s^-1) of the closed moment system.
MomentState closure_rhs(const MomentState& s, SpinDomain d1, SpinDomain d2,
                        const ReservoirSpec& res);

// Analytic Jacobian of closure_rhs, in the (jz1, jz2, a12, jz1jz2) order.
Eigen::Matrix4d closure_jacobian(const MomentState& s, SpinDomain d1, SpinDomain d2,
                                 const ReservoirSpec& res);

struct ClosureEvolveOptions {
    double t_max_s = 0.0;
    int sample_count = 2000;
    Tolerances tol;
    int steady_window = 32;
    double steady_eps = 1e-6;
    bool stop_at_steady = true;
};

// Integrates the moment system; TimeSeries uses the same schema as the
// exact solver with trace and jtot2 left absent.
TimeSeries evolve_closure(const MomentState& s0, SpinDomain d1, SpinDomain d2,
                          const ReservoirSpec& res, const ClosureEvolveOptions& opt);

} // namespace collspin
