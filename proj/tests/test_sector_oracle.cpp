#include <doctest.h>

#include <cmath>
#include <vector>

#include "collspin/experiments.hpp"
#include "collspin/sector_oracle.hpp"

using namespace collspin;

namespace {

HalfInt hv(double v) { return HalfInt::from_double(v); }

ReservoirSpec zero_t(double gamma = 1.0) { return {0.0, 1e10, gamma}; }
ReservoirSpec mk400(double gamma = 1.0) { return {0.4, 1e10, gamma}; }

double weight_of(const SectorDecomposition& dec, HalfInt J)
{
    for (const auto& sw : dec.sectors) {
        if (sw.J == J) return sw.p;
    }
    return 0.0;
}

} // namespace

TEST_CASE("decompose closed-form examples")
{
    SUBCASE("N1=2, N2=1 antiparallel")
    {
        const auto dec = decompose(SpinDomain::of(2), SpinDomain::of(1),
                                   InitialState::antiparallel());
        REQUIRE(dec.sectors.size() == 2);
        CHECK(weight_of(dec, hv(1.5)) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
        CHECK(weight_of(dec, hv(0.5)) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    }
    SUBCASE("N1=5, N2=1 antiparallel")
    {
        const auto dec = decompose(SpinDomain::of(5), SpinDomain::of(1),
                                   InitialState::antiparallel());
        CHECK(weight_of(dec, hv(3)) == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
        CHECK(weight_of(dec, hv(2)) == doctest::Approx(5.0 / 6.0).epsilon(1e-12));
    }
    SUBCASE("parallel is a single stretched sector")
    {
        const auto dec = decompose(SpinDomain::of(7), SpinDomain::of(3),
                                   InitialState::parallel());
        REQUIRE(dec.sectors.size() == 1);
        CHECK(dec.sectors[0].J == hv(5));
        CHECK(dec.sectors[0].p == doctest::Approx(1.0).epsilon(1e-14));
    }
    SUBCASE("empty second domain")
    {
        const auto dec = decompose(SpinDomain::of(4), SpinDomain::of(0),
                                   InitialState::antiparallel());
        REQUIRE(dec.sectors.size() == 1);
        CHECK(dec.sectors[0].J == hv(2));
        CHECK(dec.sectors[0].p == doctest::Approx(1.0));
    }
    SUBCASE("weights always sum to one")
    {
        for (const auto& [n1, n2] : std::vector<std::pair<int, int>>{
                 {3, 2}, {6, 6}, {9, 4}, {40, 1}, {11, 7}}) {
            const auto dec = decompose(SpinDomain::of(n1), SpinDomain::of(n2),
                                       InitialState::antiparallel());
            CHECK(std::abs(dec.total_weight() - 1.0) < 1e-12);
        }
    }
    SUBCASE("upper-sector weight 1/(N1+1) decreases with N1")
    {
        double prev = 1.0;
        for (int n1 = 1; n1 <= 200; n1 *= 2) {
            const auto dec = decompose(SpinDomain::of(n1), SpinDomain::of(1),
                                       InitialState::antiparallel());
            const double p_up = weight_of(dec, hv(0.5 * n1 + 0.5));
            CHECK(p_up == doctest::Approx(1.0 / (n1 + 1)).epsilon(1e-12));
            CHECK(p_up < prev);
            prev = p_up;
        }
    }
}

TEST_CASE("single-spin closed form agrees with the general CG route")
{
    for (int n1 = 2; n1 <= 8; ++n1) {
        const HalfInt j1 = hv(0.5 * n1), j2 = hv(0.5);
        const HalfInt M = j1 - j2;  // antiparallel total M
        const auto dec = decompose(SpinDomain::of(n1), SpinDomain::of(1),
                                   InitialState::antiparallel());
        const CGTable table(j1, j2, M);
        for (const auto J : table.sectors_at(M)) {
            const double c = table.coefficient(J, M, j1, -j2);
            CHECK(weight_of(dec, J) == doctest::Approx(c * c).epsilon(1e-12));
        }
    }
}

TEST_CASE("sector_jz projection values")
{
    CHECK(sector_jz(hv(1.5), hv(-1.5), hv(1), hv(0.5), DomainSelector::domain1) ==
          doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(sector_jz(hv(0.5), hv(-0.5), hv(1), hv(0.5), DomainSelector::domain2) ==
          doctest::Approx(1.0 / 6.0).epsilon(1e-14));
    // equal domains split M evenly
    CHECK(sector_jz(hv(3), hv(2), hv(2.5), hv(2.5), DomainSelector::domain1) ==
          doctest::Approx(1.0).epsilon(1e-14));
    // singlet carries no polarization
    CHECK(sector_jz(hv(0), hv(0), hv(2), hv(2), DomainSelector::domain1) == 0.0);
    // the two projections always add up to M
    for (int tJ = 1; tJ <= 7; ++tJ) {
        const HalfInt J = half_int(tJ);
        const HalfInt j1 = hv(2.5), j2 = hv(1.5);
        if (tJ < (j1 - j2).twice() || (tJ % 2) != (j1 + j2).twice() % 2) continue;
        for (int tM = -tJ; tM <= tJ; tM += 2) {
            const HalfInt M = half_int(tM);
            const double s = sector_jz(J, M, j1, j2, DomainSelector::domain1) +
                             sector_jz(J, M, j1, j2, DomainSelector::domain2);
            CHECK(s == doctest::Approx(M.value()).epsilon(1e-13));
        }
    }
    CHECK_THROWS_AS(sector_jz(hv(5), hv(0), hv(1), hv(1), DomainSelector::domain1),
                    std::domain_error);
    CHECK_THROWS_AS(sector_jz(hv(1), hv(2), hv(1), hv(1), DomainSelector::domain1),
                    std::domain_error);
}

TEST_CASE("oracle steady state, unbalanced T = 0 values")
{
    const InitialState anti = InitialState::antiparallel();
    CHECK(oracle_steady_state(SpinDomain::of(2), SpinDomain::of(1), anti, zero_t())
              .jz2 == doctest::Approx(-1.0 / 18.0).epsilon(1e-12));
    CHECK(oracle_steady_state(SpinDomain::of(5), SpinDomain::of(1), anti, zero_t())
              .jz2 == doctest::Approx(7.0 / 36.0).epsilon(1e-12));
    CHECK(oracle_steady_state(SpinDomain::of(10), SpinDomain::of(1), anti, zero_t())
              .jz2 == doctest::Approx(79.0 / 242.0).epsilon(1e-12));
    // the N1 = 10 case leaves the small domain with positive polarization
    CHECK(oracle_steady_state(SpinDomain::of(10), SpinDomain::of(1), anti, zero_t())
              .jz2 > 0.0);
}

TEST_CASE("oracle agrees with the exact integrator, N1+N2 <= 12")
{
    for (int n1 = 0; n1 <= 12; ++n1) {
        for (int n2 = 0; n1 + n2 <= 12; ++n2) {
            if (n1 + n2 == 0) continue;
            const SpinDomain d1 = SpinDomain::of(n1), d2 = SpinDomain::of(n2);

            std::vector<InitialState> inits = {InitialState::parallel(),
                                               InitialState::antiparallel()};
            // one non-extremal product state when a domain allows it
            const HalfInt m1 = (n1 >= 2) ? d1.j() - half_int(2) : d1.j();
            const HalfInt m2 = (n2 >= 2) ? -d2.j() + half_int(2) : -d2.j();
            inits.push_back(InitialState::custom(m1, m2));

            for (const auto& init : inits) {
                for (const bool finite_t : {false, true}) {
                    const ReservoirSpec res = finite_t ? mk400() : zero_t();
                    const auto ss = oracle_steady_state(d1, d2, init, res);

                    const LindbladPropagator prop(d1, d2, res);
                    const auto rho0 = BlockedDensityMatrix::build_initial(init, d1, d2);
                    LindbladPropagator::EvolveOptions opt;
                    opt.t_max_s = 400.0;  // gamma = 1: deep into steady state
                    opt.sample_count = 2000;
                    const TimeSeries series = prop.evolve(rho0, opt);
                    REQUIRE(series.converged);
                    CHECK(std::abs(series.jz1.back() - ss.jz1) < 1e-3);
                    CHECK(std::abs(series.jz2.back() - ss.jz2) < 1e-3);
                }
            }
        }
    }
}
