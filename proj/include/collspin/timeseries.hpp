#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "collspin/scenario.hpp"

namespace collspin {

// Sampled observable trajectories. trace and jtot2 are empty for the
// closure method, which does not model them.
struct TimeSeries {
    std::vector<double> t_s;
    std::vector<double> jz1;
    std::vector<double> jz2;
    std::vector<double> jz_sum;
    std::vector<double> a12;
    std::vector<double> jz1jz2;
    std::vector<double> trace;
    std::vector<double> jtot2;

    std::string method;
    bool converged = false;
    double t_converged_s = -1.0;
    double min_block_eigenvalue = 0.0;  // most negative block eigenvalue seen
    Scenario scenario;                  // snapshot of the run configuration

    std::size_t size() const { return t_s.size(); }
};

struct SteadyDetection {
    bool converged = false;
    double t_star_s = -1.0;
    double jz1_value = 0.0;
    double jz2_value = 0.0;
};

// Trailing-window steady-state criterion: converged once the discrete
// derivatives of both <Jz_a> stay below eps*gamma*max(N1,N2)/2 over
// `window` consecutive samples.
class SteadyStateDetector {
public:
    SteadyStateDetector(double gamma, int n1, int n2,
                        int window = 32, double eps = 1e-6)
        : threshold_(eps * gamma * static_cast<double>(std::max(n1, n2)) / 2.0),
          window_(window)
    {
    }

    // Feeds one sample; returns true once the criterion fires.
    bool feed(double t_s, double jz1, double jz2)
    {
        if (has_prev_) {
            const double dt = t_s - prev_t_;
            const double d1 = std::abs(jz1 - prev_jz1_) / dt;
            const double d2 = std::abs(jz2 - prev_jz2_) / dt;
            quiet_ = (d1 < threshold_ && d2 < threshold_) ? quiet_ + 1 : 0;
        }
        prev_t_ = t_s;
        prev_jz1_ = jz1;
        prev_jz2_ = jz2;
        has_prev_ = true;
        return quiet_ >= window_;
    }

    double threshold() const { return threshold_; }

private:
    double threshold_;
    int window_;
    int quiet_ = 0;
    bool has_prev_ = false;
    double prev_t_ = 0.0, prev_jz1_ = 0.0, prev_jz2_ = 0.0;
};

// Post-hoc detection over a recorded series; t_star is the earliest sample
// at which the trailing window condition holds.
SteadyDetection detect_steady(const TimeSeries& series, int window = 32,
                              double eps = 1e-6);

} // namespace collspin
