#pragma once

#include <vector>

#include "collspin/scenario.hpp"

namespace collspin {

// Weight of one total-spin sector in the initial product state.
struct SectorWeight {
    HalfInt J;
    double p = 0.0;  // |<J, m1+m2 | j1 m1; j2 m2>|^2
};

struct SectorDecomposition {
    HalfInt j1, j2, m1, m2;
    std::vector<SectorWeight> sectors;  // descending J, zero weights omitted

    double total_weight() const
    {
        double s = 0.0;
        for (const auto& w : sectors) s += w.p;
        return s;
    }
};

enum class DomainSelector { domain1, domain2 };

// Sector populations of the product initial state. Uses the two-term
// closed form when one domain is a single spin, so arbitrarily large
// unbalanced systems stay exact; otherwise the CG table.
SectorDecomposition decompose(SpinDomain d1, SpinDomain d2, const InitialState& init);

// Projection theorem inside a fixed-J multiplet:
//   <J,M| J1z |J,M> = M * [J(J+1) + j1(j1+1) - j2(j2+1)] / (2 J(J+1)),
// and 0 for the J = 0 singlet.
double sector_jz(HalfInt J, HalfInt M, HalfInt j1, HalfInt j2, DomainSelector which);

struct SteadyStateValues {
    double jz1 = 0.0;
    double jz2 = 0.0;
};

// Integration-free steady state: each sector decays to |J,-J> at T = 0,
// and to a Gibbs distribution over M in (-J..J) at T > 0; cross-sector
// coherences decay away.
SteadyStateValues oracle_steady_state(SpinDomain d1, SpinDomain d2,
                                      const InitialState& init,
                                      const ReservoirSpec& res);

} // namespace collspin
