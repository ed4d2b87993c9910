#pragma once

#include <optional>
#include <stdexcept>
#include <string>

#include "collspin/half_integer.hpp"
#include "collspin/reservoir.hpp"
#include "collspin/spin_algebra.hpp"

namespace collspin {

enum class InitialConfig { parallel, antiparallel, custom };

// Product initial configuration |j1,m1> (x) |j2,m2>. For parallel and
// antiparallel the m values are implied by the domain sizes.
struct InitialState {
    InitialConfig kind = InitialConfig::antiparallel;
    HalfInt m1;  // custom only
    HalfInt m2;  // custom only

    static InitialState parallel() { return {InitialConfig::parallel, {}, {}}; }
    static InitialState antiparallel() { return {InitialConfig::antiparallel, {}, {}}; }
    static InitialState custom(HalfInt m1, HalfInt m2)
    {
        return {InitialConfig::custom, m1, m2};
    }

    // Resolved m-values for given domains; range-checks custom input.
    std::pair<HalfInt, HalfInt> resolve(SpinDomain d1, SpinDomain d2) const
    {
        const HalfInt j1 = d1.j(), j2 = d2.j();
        switch (kind) {
        case InitialConfig::parallel:
            return {j1, j2};
        case InitialConfig::antiparallel:
            return {j1, -j2};
        case InitialConfig::custom:
            if (std::abs(m1.twice()) > j1.twice() || ((j1 - m1).twice() % 2) != 0) {
                throw std::domain_error("custom m1 out of range for domain 1");
            }
            if (std::abs(m2.twice()) > j2.twice() || ((j2 - m2).twice() % 2) != 0) {
                throw std::domain_error("custom m2 out of range for domain 2");
            }
            return {m1, m2};
        }
        throw std::logic_error("unreachable");
    }
};

enum class Method { exact, closure, both };

std::string to_string(InitialConfig c);
std::string to_string(Method m);

struct Tolerances {
    double rel = 1e-8;
    double abs = 1e-10;
};

// N sweep attached to a scenario (used by the sweep command).
struct SweepRange {
    int n_start = 100;
    int n_stop = 1000;
    int n_step = 100;
};

// Full experiment description; maps 1:1 onto the scenario file schema.
struct Scenario {
    int schema_version = 1;
    int n1 = 0;
    int n2 = 0;
    InitialState init;
    double temperature_mk = 0.0;
    double gamma_hz = 0.01;           // s^-1 prefactor of the dissipators
    double spin_frequency_hz = 1e10;  // omega_s / 2pi
    Method method = Method::exact;
    double t_max_s = 0.0;
    int sample_count = 2000;
    Tolerances tol;
    std::optional<SweepRange> sweep;

    SpinDomain domain1() const { return SpinDomain::of(n1); }
    SpinDomain domain2() const { return SpinDomain::of(n2); }

    ReservoirSpec reservoir() const
    {
        return ReservoirSpec{temperature_mk * 1e-3, spin_frequency_hz, gamma_hz};
    }
};

} // namespace collspin
