#include "collspin/experiments.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <future>
#include <thread>

namespace collspin {

std::uint64_t memory_budget_bytes()
{
    if (const char* env = std::getenv("COLLSPIN_MEMORY_BUDGET_BYTES")) {
        char* end = nullptr;
        const unsigned long long v = std::strtoull(env, &end, 10);
        if (end && *end == '\0' && v > 0) return v;
    }
    return std::uint64_t{1} << 30;
}

std::uint64_t exact_memory_estimate_bytes(int n1, int n2)
{
    // One dense complex block per M, times ~12 working copies held by the
    // Runge-Kutta stages and the operator cache.
    std::uint64_t entries = 0;
    const int tj1 = n1, tj2 = n2;  // twice-j equals N
    for (int tm = -(tj1 + tj2); tm <= tj1 + tj2; tm += 2) {
        const int hi = std::min(tj1, tm + tj2);
        const int lo = std::max(-tj1, tm - tj2);
        const std::uint64_t dim = static_cast<std::uint64_t>((hi - lo) / 2 + 1);
        entries += dim * dim;
    }
    return entries * 16u * 12u;
}

void validate(const Scenario& sc)
{
    if (sc.n1 < 0) throw ScenarioError("n1: must be >= 0");
    if (sc.n2 < 0) throw ScenarioError("n2: must be >= 0");
    if (sc.n1 + sc.n2 < 1) throw ScenarioError("n1: n1 + n2 must be >= 1");
    if (sc.temperature_mk < 0.0) throw ScenarioError("temperature_mk: must be >= 0");
    if (sc.gamma_hz <= 0.0) throw ScenarioError("gamma_hz: must be > 0");
    if (sc.spin_frequency_hz <= 0.0) throw ScenarioError("spin_frequency_hz: must be > 0");
    if (sc.t_max_s <= 0.0) throw ScenarioError("t_max_s: must be > 0");
    if (sc.sample_count < 2) throw ScenarioError("sample_count: must be >= 2");
    if (sc.tol.rel <= 0.0) throw ScenarioError("rel_tol: must be > 0");
    if (sc.tol.abs <= 0.0) throw ScenarioError("abs_tol: must be > 0");
    try {
        sc.init.resolve(sc.domain1(), sc.domain2());
    } catch (const std::domain_error& e) {
        throw ScenarioError(std::string("m1: ") + e.what());
    }
    if (sc.method == Method::exact || sc.method == Method::both) {
        const std::uint64_t need = exact_memory_estimate_bytes(sc.n1, sc.n2);
        const std::uint64_t budget = memory_budget_bytes();
        if (need > budget) {
            throw ScenarioError(
                "method: exact solver would need about " + std::to_string(need) +
                " bytes for n1=" + std::to_string(sc.n1) + ", n2=" +
                std::to_string(sc.n2) + ", above the budget of " +
                std::to_string(budget) + " (set COLLSPIN_MEMORY_BUDGET_BYTES or "
                "use method = closure)");
        }
    }
}

namespace {

TimeSeries run_exact(const Scenario& sc)
{
    auto ops = std::make_shared<DomainPairOperators>(sc.domain1(), sc.domain2());
    const LindbladPropagator prop(ops, sc.reservoir());
    const auto rho0 = BlockedDensityMatrix::build_initial(sc.init, ops);
    LindbladPropagator::EvolveOptions opt;
    opt.t_max_s = sc.t_max_s;
    opt.sample_count = sc.sample_count;
    opt.tol = sc.tol;
    TimeSeries series = prop.evolve(rho0, opt);
    series.scenario = sc;
    return series;
}

TimeSeries run_closure(const Scenario& sc)
{
    const MomentState s0 = initial_moments(sc.init, sc.domain1(), sc.domain2());
    ClosureEvolveOptions opt;
    opt.t_max_s = sc.t_max_s;
    opt.sample_count = sc.sample_count;
    opt.tol = sc.tol;
    TimeSeries series =
        evolve_closure(s0, sc.domain1(), sc.domain2(), sc.reservoir(), opt);
    series.scenario = sc;
    return series;
}

} // namespace

std::vector<TimeSeries> run(const Scenario& sc)
{
    validate(sc);
    std::vector<TimeSeries> out;
    if (sc.method == Method::exact || sc.method == Method::both) {
        out.push_back(run_exact(sc));
    }
    if (sc.method == Method::closure || sc.method == Method::both) {
        out.push_back(run_closure(sc));
    }
    return out;
}

double relaxation_time(const TimeSeries& series, std::optional<double> steady_jz1)
{
    if (series.size() < 2) {
        throw std::invalid_argument("relaxation_time: series too short");
    }
    if (!series.converged && !steady_jz1) {
        throw std::runtime_error(
            "relaxation_time: series not converged; increase t_max_s");
    }
    const double ss = steady_jz1.value_or(series.jz1.back());
    const double gap0 = std::abs(series.jz1.front() - ss);
    const double threshold = gap0 / std::exp(1.0);
    if (gap0 == 0.0) return 0.0;

    double prev_gap = gap0;
    for (std::size_t i = 1; i < series.size(); ++i) {
        const double gap = std::abs(series.jz1[i] - ss);
        if (gap <= threshold) {
            // Linear interpolation between the straddling samples.
            const double t0 = series.t_s[i - 1], t1 = series.t_s[i];
            const double frac =
                (prev_gap - threshold) / std::max(prev_gap - gap, 1e-300);
            return t0 + frac * (t1 - t0);
        }
        prev_gap = gap;
    }
    throw std::runtime_error("relaxation_time: trajectory never crossed the "
                             "e-folding threshold; increase t_max_s");
}

double tail_relaxation_time(const TimeSeries& series)
{
    constexpr double kWindowHi = 2e-2;  // tail starts below this fraction of peak
    constexpr double kWindowLo = 3e-4;  // ...and ends at the noise floor
    constexpr std::size_t kMinPoints = 8;

    if (series.size() < 2) {
        throw std::invalid_argument("tail_relaxation_time: series too short");
    }
    if (!series.converged) {
        throw std::runtime_error(
            "tail_relaxation_time: series not converged; increase t_max_s");
    }
    const double steady = series.a12.back();
    std::vector<double> dist(series.size());
    double peak = 0.0;
    for (std::size_t i = 0; i < series.size(); ++i) {
        dist[i] = std::abs(series.a12[i] - steady);
        peak = std::max(peak, dist[i]);
    }
    if (peak == 0.0) {
        throw std::runtime_error("tail_relaxation_time: <A12> is constant");
    }

    // Last sample still above the window: everything after it is pure tail.
    std::size_t last_above = 0;
    for (std::size_t i = 0; i < series.size(); ++i) {
        if (dist[i] > kWindowHi * peak) last_above = i;
    }

    double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
    std::size_t count = 0;
    for (std::size_t i = last_above + 1; i < series.size(); ++i) {
        if (dist[i] <= kWindowLo * peak) continue;
        const double t = series.t_s[i];
        const double y = std::log(dist[i]);
        st += t;
        sy += y;
        stt += t * t;
        sty += t * y;
        ++count;
    }
    if (count < kMinPoints) {
        throw std::runtime_error(
            "tail_relaxation_time: too few tail samples; increase sample_count");
    }
    const double denom = static_cast<double>(count) * stt - st * st;
    const double slope = (static_cast<double>(count) * sty - st * sy) / denom;
    if (!(slope < 0.0)) {
        throw std::runtime_error("tail_relaxation_time: tail is not decaying");
    }
    return -1.0 / slope;
}

RelaxationFit fit_inverse_n(const std::vector<std::pair<int, double>>& taus)
{
    if (taus.size() < 3) {
        throw std::invalid_argument("fit_inverse_n: need at least 3 points");
    }
    bool distinct = false;
    for (const auto& [n, tau] : taus) {
        if (n <= 0) throw std::invalid_argument("fit_inverse_n: N must be positive");
        if (n != taus.front().first) distinct = true;
    }
    if (!distinct) {
        throw std::invalid_argument("fit_inverse_n: degenerate design matrix, "
                                    "all N equal");
    }

    const Eigen::Index m = static_cast<Eigen::Index>(taus.size());
    Eigen::MatrixXd A(m, 2);
    Eigen::VectorXd y(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        A(i, 0) = 1.0 / static_cast<double>(taus[static_cast<std::size_t>(i)].first);
        A(i, 1) = 1.0;
        y(i) = taus[static_cast<std::size_t>(i)].second;
    }
    const Eigen::Vector2d coef = A.colPivHouseholderQr().solve(y);

    RelaxationFit fit;
    fit.a = coef(0);
    fit.b = coef(1);
    fit.n_points = static_cast<int>(m);
    const Eigen::VectorXd resid = y - A * coef;
    fit.residual_norm = resid.norm();
    const double ss_tot = (y.array() - y.mean()).square().sum();
    fit.r_squared = (ss_tot > 0.0) ? 1.0 - resid.squaredNorm() / ss_tot : 1.0;
    return fit;
}

SweepResult sweep(const Scenario& base, const std::vector<int>& n_values)
{
    if (n_values.empty()) throw std::invalid_argument("sweep: empty N list");
    std::vector<int> ns = n_values;
    std::sort(ns.begin(), ns.end());

    auto run_one = [&base](int n) {
        Scenario sc = base;
        sc.n1 = n;
        sc.n2 = n;
        sc.method = Method::closure;
        validate(sc);
        const TimeSeries series = run(sc).front();
        return tail_relaxation_time(series);
    };

    const unsigned workers =
        std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(),
                                        static_cast<unsigned>(ns.size())));
    SweepResult result;
    result.taus.resize(ns.size());
    if (workers <= 1) {
        for (std::size_t i = 0; i < ns.size(); ++i) {
            result.taus[i] = {ns[i], run_one(ns[i])};
        }
    } else {
        std::vector<std::future<double>> jobs;
        jobs.reserve(ns.size());
        for (int n : ns) {
            jobs.push_back(std::async(std::launch::async, run_one, n));
        }
        // Merge by index, never by completion order.
        for (std::size_t i = 0; i < ns.size(); ++i) {
            result.taus[i] = {ns[i], jobs[i].get()};
        }
    }
    result.fit = fit_inverse_n(result.taus);
    return result;
}

} // namespace collspin
