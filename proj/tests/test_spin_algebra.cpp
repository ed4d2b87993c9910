#include <doctest.h>

#include <cmath>

#include "collspin/spin_algebra.hpp"
#include "dense_reference.hpp"

using namespace collspin;

namespace {
const HalfInt h0 = half_int(0);
HalfInt hv(double v) { return HalfInt::from_double(v); }
} // namespace

TEST_CASE("ladder_element matches the closed form")
{
    CHECK(ladder_element(hv(0.5), hv(-0.5), LadderDirection::raise) ==
          doctest::Approx(1.0));
    CHECK(ladder_element(hv(0.5), hv(0.5), LadderDirection::raise) == 0.0);
    CHECK(ladder_element(hv(2.5), hv(2.5), LadderDirection::lower) ==
          doctest::Approx(std::sqrt(5.0)).epsilon(1e-12));
    // boundary is exactly zero
    CHECK(ladder_element(hv(3), hv(-3), LadderDirection::lower) == 0.0);
}

TEST_CASE("ladder_element rejects invalid (j, m)")
{
    CHECK_THROWS_AS(ladder_element(hv(1), hv(2), LadderDirection::raise),
                    std::domain_error);
    CHECK_THROWS_AS(ladder_element(hv(1), hv(0.5), LadderDirection::raise),
                    std::domain_error);
}

TEST_CASE("ladder symmetry (m, raise) == (m+1, lower)")
{
    for (int tj = 0; tj <= 9; ++tj) {
        const HalfInt j = half_int(tj);
        for (int tm = -tj; tm < tj; tm += 2) {
            const HalfInt m = half_int(tm);
            CHECK(ladder_element(j, m, LadderDirection::raise) ==
                  doctest::Approx(ladder_element(j, m + half_int(2),
                                                 LadderDirection::lower))
                      .epsilon(1e-14));
        }
    }
}

TEST_CASE("clebsch-gordan tabulated values")
{
    CHECK(cg_coefficient(hv(1), hv(0.5), hv(1.5), hv(0.5), hv(1), hv(-0.5)) ==
          doctest::Approx(std::sqrt(1.0 / 3.0)).epsilon(1e-12));
    CHECK(cg_coefficient(hv(1), hv(0.5), hv(0.5), hv(0.5), hv(1), hv(-0.5)) ==
          doctest::Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-12));
    // stretched state
    CHECK(cg_coefficient(hv(3), hv(2.5), hv(5.5), hv(5.5), hv(3), hv(2.5)) ==
          doctest::Approx(1.0).epsilon(1e-14));
    // selection rules return 0
    CHECK(cg_coefficient(hv(1), hv(1), hv(1), hv(1), hv(1), hv(1)) == 0.0);
    CHECK(cg_coefficient(hv(1), hv(0.5), hv(3), hv(0.5), hv(0), hv(0.5)) == 0.0);
}

TEST_CASE("two-spin singlet/triplet signs follow Condon-Shortley")
{
    const HalfInt h = hv(0.5);
    CHECK(cg_coefficient(h, h, hv(1), h0, h, -h) ==
          doctest::Approx(std::sqrt(0.5)).epsilon(1e-14));
    CHECK(cg_coefficient(h, h, h0, h0, h, -h) ==
          doctest::Approx(std::sqrt(0.5)).epsilon(1e-14));
    CHECK(cg_coefficient(h, h, h0, h0, -h, h) ==
          doctest::Approx(-std::sqrt(0.5)).epsilon(1e-14));
}

TEST_CASE("CG orthonormality and completeness, exhaustive N1+N2 <= 12")
{
    for (int n1 = 0; n1 <= 12; ++n1) {
        for (int n2 = 0; n1 + n2 <= 12; ++n2) {
            const HalfInt j1 = half_int(n1), j2 = half_int(n2);
            const CGTable table(j1, j2);
            for (int tm = (j1 + j2).twice(); tm >= -(j1 + j2).twice(); tm -= 2) {
                const HalfInt M = half_int(tm);
                const MBlockBasis basis(j1, j2, M);
                const auto sectors = table.sectors_at(M);
                REQUIRE(static_cast<int>(sectors.size()) == basis.dim());

                // orthonormality over J at fixed M
                for (std::size_t a = 0; a < sectors.size(); ++a) {
                    for (std::size_t b = a; b < sectors.size(); ++b) {
                        double dot = 0.0;
                        for (const auto& s : basis.states()) {
                            dot += table.coefficient(sectors[a], M, s.m1, s.m2) *
                                   table.coefficient(sectors[b], M, s.m1, s.m2);
                        }
                        CHECK(std::abs(dot - (a == b ? 1.0 : 0.0)) < 1e-12);
                    }
                }

                // completeness over product states at fixed M
                for (int p = 0; p < basis.dim(); ++p) {
                    for (int q = p; q < basis.dim(); ++q) {
                        double dot = 0.0;
                        for (const auto J : sectors) {
                            dot += table.coefficient(J, M, basis.state(p).m1,
                                                     basis.state(p).m2) *
                                   table.coefficient(J, M, basis.state(q).m1,
                                                     basis.state(q).m2);
                        }
                        CHECK(std::abs(dot - (p == q ? 1.0 : 0.0)) < 1e-12);
                    }
                }
            }
        }
    }
}

TEST_CASE("CG orthonormality stays at 1e-12 for j1 = j2 = 50")
{
    const HalfInt j = half_int(100);  // N1 = N2 = 100
    const CGTable table(j, j, h0);
    const MBlockBasis basis(j, j, h0);
    const auto sectors = table.sectors_at(h0);
    REQUIRE(static_cast<int>(sectors.size()) == basis.dim());
    for (std::size_t a = 0; a < sectors.size(); ++a) {
        for (std::size_t b = a; b < sectors.size(); ++b) {
            double dot = 0.0;
            for (const auto& s : basis.states()) {
                dot += table.coefficient(sectors[a], h0, s.m1, s.m2) *
                       table.coefficient(sectors[b], h0, s.m1, s.m2);
            }
            CHECK(std::abs(dot - (a == b ? 1.0 : 0.0)) < 1e-12);
        }
    }
}

TEST_CASE("Jtot^2 built from ladders commutes with Jtot^+-, Jtot^z")
{
    for (int n1 = 0; n1 <= 6; ++n1) {
        for (int n2 = 0; n1 + n2 <= 6; ++n2) {
            if (n1 + n2 == 0) continue;
            const testref::DenseBasis basis(half_int(n1), half_int(n2));
            const Eigen::MatrixXd J2 = testref::total_j_squared(basis);
            const Eigen::MatrixXd Jm = testref::total_lower(basis);
            const Eigen::MatrixXd Jz = testref::total_jz(basis);
            const auto comm = [](const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
                return (A * B - B * A).cwiseAbs().maxCoeff();
            };
            CHECK(comm(J2, Jm) < 1e-12);
            CHECK(comm(J2, Jm.transpose()) < 1e-12);
            CHECK(comm(J2, Jz) < 1e-12);
        }
    }
}

TEST_CASE("apply_collective_lower examples")
{
    // two spins: |up,up> -> |down,up> + |up,down>
    {
        const HalfInt h = hv(0.5);
        Eigen::MatrixXcd top = Eigen::MatrixXcd::Ones(1, 1);
        const auto out = apply_collective_lower(top, h, h, hv(1));
        REQUIRE(out.rows() == 2);
        CHECK(std::abs(out(0, 0) - 1.0) < 1e-14);
        CHECK(std::abs(out(1, 0) - 1.0) < 1e-14);
    }
    // bottom of the ladder annihilates
    {
        const HalfInt h = hv(0.5);
        Eigen::MatrixXcd bottom = Eigen::MatrixXcd::Ones(1, 1);
        const auto out = apply_collective_lower(bottom, h, h, hv(-1));
        CHECK(out.rows() == 0);
    }
    // j1=1, j2=0: |1,0> -> sqrt(2) |1,-1>
    {
        Eigen::MatrixXcd mid = Eigen::MatrixXcd::Ones(1, 1);
        const auto out = apply_collective_lower(mid, hv(1), h0, h0);
        REQUIRE(out.rows() == 1);
        CHECK(std::abs(out(0, 0) - std::sqrt(2.0)) < 1e-14);
    }
}

TEST_CASE("MBlockBasis ordering is m1 descending and index_of is consistent")
{
    const MBlockBasis basis(hv(2), hv(1.5), hv(0.5));
    for (int i = 1; i < basis.dim(); ++i) {
        CHECK(basis.state(i).m1 < basis.state(i - 1).m1);
    }
    for (int i = 0; i < basis.dim(); ++i) {
        CHECK(basis.index_of(basis.state(i).m1) == i);
        CHECK(basis.state(i).total_m() == hv(0.5));
    }
    CHECK(basis.index_of(hv(2) + hv(2)) == -1);
}
