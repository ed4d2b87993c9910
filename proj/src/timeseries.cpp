#include "collspin/timeseries.hpp"

namespace collspin {

SteadyDetection detect_steady(const TimeSeries& series, int window, double eps)
{
    SteadyDetection out;
    if (series.size() < static_cast<std::size_t>(window) + 1) return out;

    SteadyStateDetector det(series.scenario.gamma_hz, series.scenario.n1,
                            series.scenario.n2, window, eps);
    for (std::size_t i = 0; i < series.size(); ++i) {
        if (det.feed(series.t_s[i], series.jz1[i], series.jz2[i])) {
            out.converged = true;
            out.t_star_s = series.t_s[i];
            out.jz1_value = series.jz1[i];
            out.jz2_value = series.jz2[i];
            return out;
        }
    }
    return out;
}

} // namespace collspin
