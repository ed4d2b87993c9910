#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <map>
#include <vector>

#include "collspin/half_integer.hpp"

namespace collspin {

// One collective spin: N spin-1/2 particles in their symmetric sector,
// behaving as a single spin of magnitude j = N/2. n_spins = 0 denotes a
// degenerate absent domain (j = 0, single basis state).
struct SpinDomain {
    int n_spins = 0;

    HalfInt j() const { return half_int(n_spins); }

    static SpinDomain of(int n)
    {
        if (n < 0) throw std::domain_error("n_spins must be >= 0");
        return SpinDomain{n};
    }
};

// Index into the product Dicke basis |j1,m1> (x) |j2,m2>.
struct ProductBasisIndex {
    HalfInt m1;
    HalfInt m2;

    HalfInt total_m() const { return m1 + m2; }
};

enum class LadderDirection { raise, lower };

// Matrix element <j, m+-1 | J^+- | j, m> = sqrt(j(j+1) - m(m+-1)).
// Exactly zero past the end of the ladder.
double ladder_element(HalfInt j, HalfInt m, LadderDirection dir);

// Product-basis states at fixed total magnetization M, ordered by m1
// descending. The ordering is the canonical one for all block storage.
class MBlockBasis {
public:
    MBlockBasis() = default;
    MBlockBasis(HalfInt j1, HalfInt j2, HalfInt M);

    int dim() const { return static_cast<int>(states_.size()); }
    const ProductBasisIndex& state(int i) const { return states_.at(i); }
    const std::vector<ProductBasisIndex>& states() const { return states_; }

    // Index of the state with given m1 (m2 is then M - m1); -1 if absent.
    int index_of(HalfInt m1) const;

    HalfInt j1() const { return j1_; }
    HalfInt j2() const { return j2_; }
    HalfInt total_m() const { return m_; }

private:
    HalfInt j1_, j2_, m_;
    std::vector<ProductBasisIndex> states_;
};

// Matrix of J^-_tot = J^-_1 + J^-_2 from the block at M to the block at
// M-1, in the MBlockBasis ordering. At most two nonzeros per column.
Eigen::SparseMatrix<double> lowering_matrix(HalfInt j1, HalfInt j2, HalfInt M);

// Applies J^-_tot to a set of amplitude columns living on the block at M;
// the result lives on the block at M-1 (empty when M is the bottom).
Eigen::MatrixXcd apply_collective_lower(const Eigen::MatrixXcd& block,
                                        HalfInt j1, HalfInt j2, HalfInt M);

// Clebsch-Gordan coefficients <J,M | j1 m1; j2 m2> for two coupled spins,
// Condon-Shortley convention. Built by lowering from the stretched state
// with re-orthonormalization at every step, which stays stable up to
// j1 + j2 of order 100.
class CGTable {
public:
    // Builds coefficients for every M from j1+j2 down to min_M.
    CGTable(HalfInt j1, HalfInt j2, HalfInt min_M);
    CGTable(HalfInt j1, HalfInt j2)
        : CGTable(j1, j2, -(j1 + j2))
    {
    }

    // Selection-rule violations (M != m1+m2, triangle, out of range)
    // return 0 rather than throwing.
    double coefficient(HalfInt J, HalfInt M, HalfInt m1, HalfInt m2) const;

    // J values present at magnetization M, descending.
    std::vector<HalfInt> sectors_at(HalfInt M) const;

    HalfInt j1() const { return j1_; }
    HalfInt j2() const { return j2_; }

private:
    struct Level {
        MBlockBasis basis;
        std::vector<int> twice_J;  // descending
        Eigen::MatrixXd coeffs;    // dim x #J, column k is |J_k, M>
    };

    HalfInt j1_, j2_;
    std::map<int, Level> levels_;  // keyed by twice M
};

// One-shot coefficient; builds the table down to the requested M.
double cg_coefficient(HalfInt j1, HalfInt j2, HalfInt J, HalfInt M,
                      HalfInt m1, HalfInt m2);

} // namespace collspin
