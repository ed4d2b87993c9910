#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace collspin {

struct OdeOptions {
    double rel_tol = 1e-8;
    double abs_tol = 1e-10;
    double initial_step = 1e-3;
    double max_step = 0.0;  // 0 = unlimited
};

struct OdeStatus {
    bool completed = true;     // reached t_end (or the sampler stopped early)
    bool stopped_early = false;
    double t_reached = 0.0;
    std::size_t accepted_steps = 0;
    std::size_t rejected_steps = 0;
};

// Raised when the embedded error estimate forces the step below the
// representable floor; carries the last good time.
class IntegrationError : public std::runtime_error {
public:
    IntegrationError(const std::string& what, double t_last)
        : std::runtime_error(what), t_last_good(t_last)
    {
    }
    double t_last_good;
};

// Dormand-Prince 5(4) with step clamping onto the sample grid. Vec must be
// an Eigen vector type (real or complex); Rhs is rhs(const Vec&, Vec&);
// on_sample(t, y) -> bool (false stops the integration); post_step(Vec&)
// runs after every accepted step.
template <typename Vec, typename Rhs, typename SampleFn, typename PostStep>
OdeStatus integrate_dopri5(Rhs&& rhs, Vec y, double t0, double t_end,
                           std::span<const double> sample_times,
                           SampleFn&& on_sample, PostStep&& post_step,
                           const OdeOptions& opt)
{
    // clang-format off
    constexpr double a21 = 1.0/5;
    constexpr double a31 = 3.0/40,       a32 = 9.0/40;
    constexpr double a41 = 44.0/45,      a42 = -56.0/15,      a43 = 32.0/9;
    constexpr double a51 = 19372.0/6561, a52 = -25360.0/2187, a53 = 64448.0/6561, a54 = -212.0/729;
    constexpr double a61 = 9017.0/3168,  a62 = -355.0/33,     a63 = 46732.0/5247, a64 = 49.0/176,   a65 = -5103.0/18656;
    constexpr double b1  = 35.0/384,     b3  = 500.0/1113,    b4  = 125.0/192,    b5  = -2187.0/6784, b6 = 11.0/84;
    constexpr double e1  = b1 - 5179.0/57600, e3 = b3 - 7571.0/16695, e4 = b4 - 393.0/640,
                     e5  = b5 + 92097.0/339200, e6 = b6 - 187.0/2100, e7 = -1.0/40;
    // clang-format on

    OdeStatus status;
    double t = t0;
    double h = opt.initial_step;
    const double span = t_end - t0;
    const double h_min = std::max(1e-14 * span, 1e-13);

    Vec k1 = y, k2 = y, k3 = y, k4 = y, k5 = y, k6 = y, k7 = y, ytmp = y, ynew = y;

    std::size_t next_sample = 0;
    while (next_sample < sample_times.size() && sample_times[next_sample] <= t0) {
        if (!on_sample(sample_times[next_sample], y)) {
            status.stopped_early = true;
            status.t_reached = t;
            return status;
        }
        ++next_sample;
    }

    rhs(y, k1);
    bool fsal_valid = true;

    while (t < t_end) {
        if (opt.max_step > 0.0) h = std::min(h, opt.max_step);
        double target = t_end;
        if (next_sample < sample_times.size()) {
            target = std::min(target, sample_times[next_sample]);
        }
        bool hit_target = false;
        if (t + h >= target) {
            h = target - t;
            hit_target = true;
        }

        if (!fsal_valid) {
            rhs(y, k1);
            fsal_valid = true;
        }

        ytmp = y + h * (a21 * k1);
        rhs(ytmp, k2);
        ytmp = y + h * (a31 * k1 + a32 * k2);
        rhs(ytmp, k3);
        ytmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
        rhs(ytmp, k4);
        ytmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
        rhs(ytmp, k5);
        ytmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
        rhs(ytmp, k6);
        ynew = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        rhs(ynew, k7);

        // Scaled RMS of the embedded 4th/5th order difference.
        const auto err_vec =
            (h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7)).eval();
        const auto scale = (opt.abs_tol +
                            opt.rel_tol * y.cwiseAbs().cwiseMax(ynew.cwiseAbs()).array())
                               .eval();
        const double err =
            std::sqrt((err_vec.cwiseAbs().array() / scale).square().sum() /
                      static_cast<double>(y.size()));

        if (err <= 1.0 || h <= h_min) {
            t += h;
            y.swap(ynew);
            post_step(y);
            k1.swap(k7);
            // post_step may have nudged y; k1 stays the pre-nudge slope,
            // which is within the embedded error of the true one.
            ++status.accepted_steps;

            if (hit_target && next_sample < sample_times.size() &&
                t >= sample_times[next_sample]) {
                if (!on_sample(sample_times[next_sample], y)) {
                    status.stopped_early = true;
                    status.t_reached = t;
                    return status;
                }
                ++next_sample;
            }
            const double grow =
                (err <= 0.0) ? 5.0
                             : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
            h = std::max(h * grow, h_min);
        } else {
            ++status.rejected_steps;
            h = std::max(h * std::clamp(0.9 * std::pow(err, -0.2), 0.1, 1.0), h_min);
            if (h <= h_min && err > 1e6) {
                throw IntegrationError("step size underflow at t = " + std::to_string(t), t);
            }
        }
    }

    status.t_reached = t;
    return status;
}

} // namespace collspin
