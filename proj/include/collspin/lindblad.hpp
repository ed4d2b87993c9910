#pragma once

#include "collspin/blocked_density.hpp"
#include "collspin/ode.hpp"
#include "collspin/timeseries.hpp"

namespace collspin {

// Generator of the collective emission/absorption dynamics,
//   drho/dt = gamma(nbar+1) L(J-_tot) rho + gamma nbar L(J+_tot) rho,
// with L(A) rho = 2 A rho A+ - A+A rho - rho A+A. The coherent
// -i omega_s [Jz_tot, rho] rotation is dropped: every reported observable
// commutes with Jz_tot, so working in the rotating frame changes nothing
// that this solver outputs. rotating_frame() records the choice.
class LindbladPropagator {
public:
    LindbladPropagator(std::shared_ptr<const DomainPairOperators> ops,
                       const ReservoirSpec& res);
    LindbladPropagator(SpinDomain d1, SpinDomain d2, const ReservoirSpec& res)
        : LindbladPropagator(std::make_shared<DomainPairOperators>(d1, d2), res)
    {
    }

    static constexpr bool rotating_frame() { return true; }

    const DomainPairOperators& ops() const { return *ops_; }
    const ReservoirSpec& reservoir() const { return res_; }

    // d rho/dt in s^-1; throws if the state was built over a different
    // domain pair.
    BlockedDensityMatrix rhs(const BlockedDensityMatrix& rho) const;

    // RHS in dimensionless time tau = gamma*t, on the flattened state.
    void rhs_flat(const Eigen::VectorXcd& x, Eigen::VectorXcd& dxdt) const;

    // The generator splits as A = A_em + A_abs: the emission dissipator
    // (nbar+1) L(J-) feeds each magnetization block only from the one
    // above, the absorption dissipator nbar L(J+) only from the one
    // below. Each part is block-triangular, so its implicit stage
    // (I - alpha*A_part) x = b is solved exactly by one directional
    // sweep with the per-block eigendecomposition of its K operator.
    void rhs_emission_flat(const Eigen::VectorXcd& x, Eigen::VectorXcd& dxdt) const;
    void rhs_absorption_flat(const Eigen::VectorXcd& x, Eigen::VectorXcd& dxdt) const;
    void solve_emission_stage(const Eigen::VectorXcd& b, double alpha,
                              Eigen::VectorXcd& x) const;
    void solve_absorption_stage(const Eigen::VectorXcd& b, double alpha,
                                Eigen::VectorXcd& x) const;

    // Integrator choice; auto_select picks the implicit path when the
    // generator's spectral radius makes explicit stepping uneconomical.
    enum class Stepper { auto_select, dopri5, trapezoidal };

    struct EvolveOptions {
        double t_max_s = 0.0;
        int sample_count = 2000;
        Tolerances tol;
        int steady_window = 32;
        double steady_eps = 1e-6;
        bool stop_at_steady = true;
        Stepper stepper = Stepper::auto_select;
    };

    TimeSeries evolve(const BlockedDensityMatrix& rho0, const EvolveOptions& opt) const;

    // Safe upper bound on the spectral radius of the generator in
    // tau = gamma*t units; drives the integrator choice in evolve().
    double spectral_radius_bound() const { return rho_bound_; }

private:
    // Two matrix elements per column/row of a lowering operator; r1 < 0
    // marks an absent second entry.
    struct BandEntry {
        int r0 = -1, r1 = -1;
        double v0 = 0.0, v1 = 0.0;
    };

    std::shared_ptr<const DomainPairOperators> ops_;
    ReservoirSpec res_;
    double nbar_;
    // K_b = (nbar+1) J+J- + nbar J-J+ restricted to block b is symmetric
    // tridiagonal in the m1-ordered basis; stored as diagonal +
    // offdiagonal, split into the emission ((nbar+1) J+J-) and
    // absorption (nbar J-J+) parts plus their sum for the full RHS.
    std::vector<Eigen::VectorXd> kdiag_, koff_;
    std::vector<Eigen::VectorXd> kdiag_em_, koff_em_, kdiag_abs_, koff_abs_;
    // lowering(b) by columns and by rows (<= 2 entries each).
    std::vector<std::vector<BandEntry>> lcols_, lrows_;
    // Eigendecompositions K = V diag(w) V^T per block and per part; the
    // implicit stage (1 + alpha(K (+) K)) inverts elementwise in this
    // basis. The absorption set is only built when nbar > 0.
    std::vector<Eigen::MatrixXd> kvecs_em_, kvecs_abs_;
    std::vector<Eigen::VectorXd> kvals_em_, kvals_abs_;
    double rho_bound_ = 0.0;

    // Shared scratch for the stage solves, owned by the caller.
    struct StageWork {
        Eigen::MatrixXcd beff, feed;
        Eigen::MatrixXd tr, ti, xr, xi;
    };
    void rhs_impl(const Eigen::VectorXcd& x, Eigen::VectorXcd& dxdt,
                  bool emission, bool absorption) const;
    void stage_block_solve(int b, double alpha, const Eigen::MatrixXd& V,
                           const Eigen::VectorXd& w, StageWork& ws,
                           Eigen::Map<Eigen::MatrixXcd> out) const;

    // target += coeff * L X_up L^T with L = lowering(b+1) (emission into
    // block b), and target += coeff * L^T X_dn L with L = lowering(b)
    // (absorption into block b). work is a caller-owned scratch matrix.
    void add_emission_feed(int b, Eigen::Ref<const Eigen::MatrixXcd> x_up,
                           double coeff, Eigen::Ref<Eigen::MatrixXcd> target,
                           Eigen::MatrixXcd& work) const;
    void add_absorption_feed(int b, Eigen::Ref<const Eigen::MatrixXcd> x_dn,
                             double coeff, Eigen::Ref<Eigen::MatrixXcd> target,
                             Eigen::MatrixXcd& work) const;
};

} // namespace collspin
