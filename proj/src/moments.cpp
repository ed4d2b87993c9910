#include "collspin/moments.hpp"

namespace collspin {

MomentState initial_moments(const InitialState& init, SpinDomain d1, SpinDomain d2)
{
    const auto [m1, m2] = init.resolve(d1, d2);
    MomentState s;
    s.jz1 = m1.value();
    s.jz2 = m2.value();
    s.a12 = 0.0;
    s.jz1jz2 = m1.value() * m2.value();
    return s;
}

namespace {

// RHS in tau = gamma*t units (gamma scaled out).
Eigen::Vector4d rhs_tau(const Eigen::Vector4d& v, double n1, double n2, double u)
{
    const double x1 = v(0), x2 = v(1), a = v(2), z = v(3);
    const double c1 = n1 * (n1 + 2.0);
    const double c2 = n2 * (n2 + 2.0);
    Eigen::Vector4d f;
    f(0) = -2.0 * u * x1 + 0.5 * (-c1 + 4.0 * x1 * x1 - 2.0 * a);
    f(1) = -2.0 * u * x2 + 0.5 * (-c2 + 4.0 * x2 * x2 - 2.0 * a);
    f(2) = -2.0 * u * (a - 4.0 * z) + 2.0 * (x1 + x2) * (a - 2.0 * z) +
           (c2 * x1 + c1 * x2);
    f(3) = -0.5 * f(2);
    return f;
}

} // namespace

MomentState closure_rhs(const MomentState& s, SpinDomain d1, SpinDomain d2,
                        const ReservoirSpec& res)
{
    const double u = 2.0 * res.nbar() + 1.0;
    const Eigen::Vector4d f =
        res.damping_rate * rhs_tau(s.to_vector(), d1.n_spins, d2.n_spins, u);
    return MomentState::from_vector(f);
}

Eigen::Matrix4d closure_jacobian(const MomentState& s, SpinDomain d1, SpinDomain d2,
                                 const ReservoirSpec& res)
{
    const double u = 2.0 * res.nbar() + 1.0;
    const double n1 = d1.n_spins, n2 = d2.n_spins;
    const double c1 = n1 * (n1 + 2.0);
    const double c2 = n2 * (n2 + 2.0);
    const double x1 = s.jz1, x2 = s.jz2, a = s.a12, z = s.jz1jz2;

    Eigen::Matrix4d J = Eigen::Matrix4d::Zero();
    J(0, 0) = -2.0 * u + 4.0 * x1;
    J(0, 2) = -1.0;
    J(1, 1) = -2.0 * u + 4.0 * x2;
    J(1, 2) = -1.0;
    J(2, 0) = 2.0 * (a - 2.0 * z) + c2;
    J(2, 1) = 2.0 * (a - 2.0 * z) + c1;
    J(2, 2) = -2.0 * u + 2.0 * (x1 + x2);
    J(2, 3) = 8.0 * u - 4.0 * (x1 + x2);
    J.row(3) = -0.5 * J.row(2);
    return res.damping_rate * J;
}

TimeSeries evolve_closure(const MomentState& s0, SpinDomain d1, SpinDomain d2,
                          const ReservoirSpec& res, const ClosureEvolveOptions& opt)
{
    if (opt.t_max_s <= 0.0) throw std::domain_error("t_max must be > 0");
    res.validate();
    const double gamma = res.damping_rate;
    const double u = 2.0 * res.nbar() + 1.0;
    const double tau_max = gamma * opt.t_max_s;
    const double n1 = d1.n_spins, n2 = d2.n_spins;

    TimeSeries series;
    series.method = "closure";
    series.scenario.n1 = d1.n_spins;
    series.scenario.n2 = d2.n_spins;

    std::vector<double> sample_tau(static_cast<std::size_t>(opt.sample_count));
    for (int i = 0; i < opt.sample_count; ++i) {
        sample_tau[static_cast<std::size_t>(i)] =
            tau_max * static_cast<double>(i) / static_cast<double>(opt.sample_count - 1);
    }

    SteadyStateDetector detector(gamma, d1.n_spins, d2.n_spins, opt.steady_window,
                                 opt.steady_eps);

    OdeOptions ode;
    ode.rel_tol = opt.tol.rel;
    ode.abs_tol = opt.tol.abs;
    ode.initial_step = 1e-3 / ((n1 + n2 + 1.0) * u);

    auto on_sample = [&](double tau, const Eigen::Vector4d& v) -> bool {
        const double t_s = tau / gamma;
        series.t_s.push_back(t_s);
        series.jz1.push_back(v(0));
        series.jz2.push_back(v(1));
        series.jz_sum.push_back(v(0) + v(1));
        series.a12.push_back(v(2));
        series.jz1jz2.push_back(v(3));
        if (detector.feed(t_s, v(0), v(1))) {
            series.converged = true;
            series.t_converged_s = t_s;
            return !opt.stop_at_steady;
        }
        return true;
    };

    try {
        integrate_dopri5(
            [&](const Eigen::Vector4d& v, Eigen::Vector4d& dv) {
                dv = rhs_tau(v, n1, n2, u);
            },
            s0.to_vector(), 0.0, tau_max, sample_tau, on_sample,
            [](Eigen::Vector4d&) {}, ode);
    } catch (const IntegrationError& e) {
        throw IntegrationError(e.what(), e.t_last_good / gamma);
    }

    return series;
}

} // namespace collspin
