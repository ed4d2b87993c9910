#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "collspin/lindblad.hpp"
#include "collspin/moments.hpp"
#include "collspin/timeseries.hpp"

namespace collspin {

// Raised when a scenario fails validation; message names the offending key.
class ScenarioError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Memory budget for the exact solver, from COLLSPIN_MEMORY_BUDGET_BYTES
// (default 1 GiB).
std::uint64_t memory_budget_bytes();

// Estimated working-set size of an exact run.
std::uint64_t exact_memory_estimate_bytes(int n1, int n2);

// Throws ScenarioError on invalid or oversize scenarios.
void validate(const Scenario& sc);

// Runs the scenario with its configured method(s); method=both returns the
// exact series first, sharing the sample grid with the closure series.
std::vector<TimeSeries> run(const Scenario& sc);

// e-folding time of |<J1z>(t) - steady|; steady defaults to the final
// sample of a converged series. Throws on unconverged input.
double relaxation_time(const TimeSeries& series,
                       std::optional<double> steady_jz1 = std::nullopt);

// Asymptotic relaxation time of the cross-domain correlator: the e-folding
// time of |<A12>(t) - <A12>_steady| from a log-linear least-squares fit over
// the trailing stretch where the deviation lies between 2e-2 and 3e-4 of its
// peak. Unlike the first-crossing time above, this is insensitive to the
// shape of the initial burst. Throws on unconverged or too-coarse input.
double tail_relaxation_time(const TimeSeries& series);

struct RelaxationFit {
    double a = 0.0;         // seconds * count
    double b = 0.0;         // seconds
    double residual_norm = 0.0;
    double r_squared = 1.0;
    int n_points = 0;
};

// Least squares of tau_N against a/N + b.
RelaxationFit fit_inverse_n(const std::vector<std::pair<int, double>>& taus);

struct SweepResult {
    std::vector<std::pair<int, double>> taus;  // (N, tau_s), ascending N
    RelaxationFit fit;
};

inline const char* tau_definition()
{
    return "asymptotic e-folding of |<A12>(t) - <A12>_steady| "
           "(log-linear fit over the 2e-2..3e-4 tail of the peak deviation)";
}

// Balanced antiparallel relaxation-time sweep over the given N values,
// run with the closure solver on a work pool; results merged in N order.
SweepResult sweep(const Scenario& base, const std::vector<int>& n_values);

} // namespace collspin
