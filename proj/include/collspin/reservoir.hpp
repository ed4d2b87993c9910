#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

namespace collspin {

namespace constants {
inline constexpr double planck_j_per_hz = 6.62607015e-34;
inline constexpr double boltzmann_j_per_k = 1.380649e-23;
} // namespace constants

// Shared bosonic reservoir: temperature, spin transition frequency and the
// collective damping rate.
struct ReservoirSpec {
    double temperature_k = 0.0;     // >= 0; 0 means an exactly empty reservoir
    double spin_frequency_hz = 1e10;  // omega_s / 2pi
    double damping_rate = 0.01;     // gamma, s^-1

    void validate() const
    {
        if (temperature_k < 0.0) throw std::domain_error("temperature must be >= 0");
        if (spin_frequency_hz <= 0.0) throw std::domain_error("spin frequency must be > 0");
        if (damping_rate <= 0.0) throw std::domain_error("damping rate must be > 0");
    }

    // hbar*omega_s / (kB*T); +inf at T = 0.
    double beta_hbar_omega() const
    {
        if (temperature_k == 0.0) return std::numeric_limits<double>::infinity();
        return constants::planck_j_per_hz * spin_frequency_hz /
               (constants::boltzmann_j_per_k * temperature_k);
    }

    // Bose-Einstein occupation of the resonant reservoir mode; exactly 0 at T = 0.
    double nbar() const
    {
        if (temperature_k == 0.0) return 0.0;
        return 1.0 / std::expm1(beta_hbar_omega());
    }
};

} // namespace collspin
