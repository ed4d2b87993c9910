#include "collspin/sector_oracle.hpp"

#include <cmath>

#include "collspin/spin_algebra.hpp"

namespace collspin {

namespace {

// |<J, M | j m1; 1/2 m2>|^2 in closed form, J = j +- 1/2.
double half_spin_weight(HalfInt j, HalfInt M, bool upper_sector, bool m_half_up)
{
    const double denom = j.twice() + 1.0;  // 2j + 1
    const double plus = (j.value() + M.value() + 0.5) / denom;
    const double minus = (j.value() - M.value() + 0.5) / denom;
    if (upper_sector) return m_half_up ? plus : minus;
    return m_half_up ? minus : plus;
}

void push_if_positive(std::vector<SectorWeight>& out, HalfInt J, double p)
{
    if (p > 0.0) out.push_back({J, p});
}

} // namespace

SectorDecomposition decompose(SpinDomain d1, SpinDomain d2, const InitialState& init)
{
    const HalfInt j1 = d1.j(), j2 = d2.j();
    const auto [m1, m2] = init.resolve(d1, d2);
    const HalfInt M = m1 + m2;

    SectorDecomposition dec;
    dec.j1 = j1;
    dec.j2 = j2;
    dec.m1 = m1;
    dec.m2 = m2;

    // Stretched product state lives in the single top sector.
    if (m1 == j1 && m2 == j2) {
        dec.sectors.push_back({j1 + j2, 1.0});
        return dec;
    }
    if (d1.n_spins == 0 || d2.n_spins == 0) {
        dec.sectors.push_back({j1 + j2, 1.0});
        return dec;
    }
    if (d2.n_spins == 1) {
        const bool up = m2.twice() > 0;
        push_if_positive(dec.sectors, j1 + j2, half_spin_weight(j1, M, true, up));
        push_if_positive(dec.sectors, j1 - j2, half_spin_weight(j1, M, false, up));
        return dec;
    }
    if (d1.n_spins == 1) {
        const bool up = m1.twice() > 0;
        push_if_positive(dec.sectors, j2 + j1, half_spin_weight(j2, M, true, up));
        push_if_positive(dec.sectors, j2 - j1, half_spin_weight(j2, M, false, up));
        return dec;
    }

    const CGTable table(j1, j2, M);
    for (HalfInt J : table.sectors_at(M)) {
        const double c = table.coefficient(J, M, m1, m2);
        push_if_positive(dec.sectors, J, c * c);
    }
    return dec;
}

double sector_jz(HalfInt J, HalfInt M, HalfInt j1, HalfInt j2, DomainSelector which)
{
    if (J < half_int(std::abs(j1.twice() - j2.twice())) || J > j1 + j2) {
        throw std::domain_error("sector_jz: J violates the triangle inequality");
    }
    if (std::abs(M.twice()) > J.twice()) {
        throw std::domain_error("sector_jz: |M| > J");
    }
    if (J.twice() == 0) return 0.0;  // singlet carries no polarization
    const double cj = casimir(J);
    const double c1 = casimir(j1), c2 = casimir(j2);
    const double factor = (which == DomainSelector::domain1)
                              ? (cj + c1 - c2) / (2.0 * cj)
                              : (cj + c2 - c1) / (2.0 * cj);
    return M.value() * factor;
}

namespace {

// Mean magnetization of a Gibbs distribution over M in [-J, J] with
// weights proportional to exp(-x M); x = +inf collapses onto M = -J.
double gibbs_mean_m(HalfInt J, double x)
{
    if (std::isinf(x)) return -J.value();
    double z = 0.0, zm = 0.0;
    for (int tm = -J.twice(); tm <= J.twice(); tm += 2) {
        const double M = 0.5 * tm;
        const double w = std::exp(-x * (M + J.value()));
        z += w;
        zm += w * M;
    }
    return zm / z;
}

} // namespace

SteadyStateValues oracle_steady_state(SpinDomain d1, SpinDomain d2,
                                      const InitialState& init,
                                      const ReservoirSpec& res)
{
    res.validate();
    const HalfInt j1 = d1.j(), j2 = d2.j();
    const double x = res.beta_hbar_omega();
    const SectorDecomposition dec = decompose(d1, d2, init);

    SteadyStateValues out;
    for (const auto& sw : dec.sectors) {
        if (sw.J.twice() == 0) continue;  // both jz are 0 in the singlet
        const double f1 = sector_jz(sw.J, sw.J, j1, j2, DomainSelector::domain1) /
                          sw.J.value();
        const double f2 = sector_jz(sw.J, sw.J, j1, j2, DomainSelector::domain2) /
                          sw.J.value();
        const double mean_m = gibbs_mean_m(sw.J, x);
        out.jz1 += sw.p * f1 * mean_m;
        out.jz2 += sw.p * f2 * mean_m;
    }
    return out;
}

} // namespace collspin
