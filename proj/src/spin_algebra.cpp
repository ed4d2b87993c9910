#include "collspin/spin_algebra.hpp"

#include <algorithm>
#include <cmath>

namespace collspin {

double ladder_element(HalfInt j, HalfInt m, LadderDirection dir)
{
    if (j.twice() < 0 || ((j.twice() - m.twice()) % 2) != 0) {
        throw std::domain_error("ladder_element: m - j must be an integer");
    }
    if (std::abs(m.twice()) > j.twice()) {
        throw std::domain_error("ladder_element: |m| > j");
    }
    const int tm_target = m.twice() + (dir == LadderDirection::raise ? 2 : -2);
    if (std::abs(tm_target) > j.twice()) return 0.0;
    const double mm = m.value();
    const double shifted = (dir == LadderDirection::raise) ? mm + 1.0 : mm - 1.0;
    return std::sqrt(casimir(j) - mm * shifted);
}

MBlockBasis::MBlockBasis(HalfInt j1, HalfInt j2, HalfInt M)
    : j1_(j1), j2_(j2), m_(M)
{
    // m1 runs from min(j1, M+j2) down to max(-j1, M-j2), step 1.
    const int hi = std::min(j1.twice(), M.twice() + j2.twice());
    const int lo = std::max(-j1.twice(), M.twice() - j2.twice());
    for (int tm1 = hi; tm1 >= lo; tm1 -= 2) {
        states_.push_back({half_int(tm1), half_int(M.twice() - tm1)});
    }
}

int MBlockBasis::index_of(HalfInt m1) const
{
    if (states_.empty()) return -1;
    const int hi = states_.front().m1.twice();
    const int idx = (hi - m1.twice()) / 2;
    if (idx < 0 || idx >= dim() || states_[idx].m1 != m1) return -1;
    return idx;
}

Eigen::SparseMatrix<double> lowering_matrix(HalfInt j1, HalfInt j2, HalfInt M)
{
    const MBlockBasis from(j1, j2, M);
    const MBlockBasis to(j1, j2, M - half_int(2));
    Eigen::SparseMatrix<double> L(to.dim(), from.dim());
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(2 * static_cast<std::size_t>(from.dim()));
    for (int c = 0; c < from.dim(); ++c) {
        const auto& s = from.state(c);
        const double e1 = ladder_element(j1, s.m1, LadderDirection::lower);
        if (e1 != 0.0) {
            const int r = to.index_of(s.m1 - half_int(2));
            if (r >= 0) trips.emplace_back(r, c, e1);
        }
        const double e2 = ladder_element(j2, s.m2, LadderDirection::lower);
        if (e2 != 0.0) {
            const int r = to.index_of(s.m1);
            if (r >= 0) trips.emplace_back(r, c, e2);
        }
    }
    L.setFromTriplets(trips.begin(), trips.end());
    return L;
}

Eigen::MatrixXcd apply_collective_lower(const Eigen::MatrixXcd& block,
                                        HalfInt j1, HalfInt j2, HalfInt M)
{
    const auto L = lowering_matrix(j1, j2, M);
    if (block.rows() != L.cols()) {
        throw std::invalid_argument("apply_collective_lower: block dimension "
                                    "does not match the basis at M");
    }
    return L * block;
}

namespace {

// Orthogonalize column v against the leading ncols columns of Q, twice.
void orthogonalize(const Eigen::MatrixXd& Q, int ncols, Eigen::VectorXd& v)
{
    for (int pass = 0; pass < 2; ++pass) {
        for (int k = 0; k < ncols; ++k) {
            v -= Q.col(k).dot(v) * Q.col(k);
        }
    }
}

} // namespace

CGTable::CGTable(HalfInt j1, HalfInt j2, HalfInt min_M)
    : j1_(j1), j2_(j2)
{
    const HalfInt jmax = j1 + j2;
    const HalfInt jmin = half_int(std::abs(j1.twice() - j2.twice()));
    if (min_M > jmax) {
        throw std::domain_error("CGTable: min_M beyond the stretched state");
    }

    // Stretched state.
    Level top;
    top.basis = MBlockBasis(j1, j2, jmax);
    top.twice_J = {jmax.twice()};
    top.coeffs = Eigen::MatrixXd::Ones(1, 1);
    levels_.emplace(jmax.twice(), std::move(top));

    for (int tM = jmax.twice() - 2; tM >= min_M.twice(); tM -= 2) {
        const HalfInt M = half_int(tM);
        const Level& prev = levels_.at(tM + 2);
        Level cur;
        cur.basis = MBlockBasis(j1, j2, M);
        const int dim = cur.basis.dim();
        const auto L = lowering_matrix(j1, j2, M + half_int(2));

        // Lower every sector present above, then re-orthonormalize to keep
        // the accumulated rounding at the 1e-14 level.
        std::vector<int> js;
        Eigen::MatrixXd Q(dim, dim);
        int ncols = 0;
        for (std::size_t k = 0; k < prev.twice_J.size(); ++k) {
            const HalfInt J = half_int(prev.twice_J[k]);
            if (J.twice() < std::abs(tM)) continue;  // |J,M| needs |M| <= J
            Eigen::VectorXd v = L * prev.coeffs.col(static_cast<Eigen::Index>(k));
            const double norm_expected =
                std::sqrt(casimir(J) - M.value() * (M.value() + 1.0));
            v /= norm_expected;
            orthogonalize(Q, ncols, v);
            v.normalize();
            js.push_back(J.twice());
            Q.col(ncols++) = v;
        }

        // New sector J = M enters when the space grew by one.
        if (ncols < dim && tM >= jmin.twice()) {
            // Seed from the basis vector with the largest residual outside
            // the span of the lowered sectors, then fix the sign by the
            // Condon-Shortley convention (coefficient at m1 = j1 positive).
            Eigen::VectorXd v;
            double best = -1.0;
            for (int seed = 0; seed < dim; ++seed) {
                Eigen::VectorXd cand = Eigen::VectorXd::Unit(dim, seed);
                orthogonalize(Q, ncols, cand);
                const double nrm = cand.norm();
                if (nrm > best) {
                    best = nrm;
                    v = cand;
                }
                if (best > 0.5) break;
            }
            if (best < 1e-8) {
                throw std::runtime_error("CGTable: degenerate seed for new sector");
            }
            v.normalize();
            if (v(0) < 0.0) v = -v;
            js.push_back(tM);
            Q.col(ncols++) = v;
        }

        cur.twice_J = std::move(js);
        cur.coeffs = Q.leftCols(ncols);
        levels_.emplace(tM, std::move(cur));
    }
}

double CGTable::coefficient(HalfInt J, HalfInt M, HalfInt m1, HalfInt m2) const
{
    if ((m1 + m2) != M) return 0.0;
    const HalfInt jmax = j1_ + j2_;
    const HalfInt jmin = half_int(std::abs(j1_.twice() - j2_.twice()));
    if (J < jmin || J > jmax) return 0.0;
    if (std::abs(M.twice()) > J.twice()) return 0.0;
    if (std::abs(m1.twice()) > j1_.twice() || std::abs(m2.twice()) > j2_.twice()) return 0.0;
    const auto it = levels_.find(M.twice());
    if (it == levels_.end()) {
        throw std::out_of_range("CGTable: M below the table's min_M");
    }
    const Level& lvl = it->second;
    const int row = lvl.basis.index_of(m1);
    if (row < 0) return 0.0;
    for (std::size_t k = 0; k < lvl.twice_J.size(); ++k) {
        if (lvl.twice_J[k] == J.twice()) {
            return lvl.coeffs(row, static_cast<Eigen::Index>(k));
        }
    }
    return 0.0;
}

std::vector<HalfInt> CGTable::sectors_at(HalfInt M) const
{
    const auto it = levels_.find(M.twice());
    if (it == levels_.end()) {
        throw std::out_of_range("CGTable: M below the table's min_M");
    }
    std::vector<HalfInt> out;
    for (int tj : it->second.twice_J) out.push_back(half_int(tj));
    return out;
}

double cg_coefficient(HalfInt j1, HalfInt j2, HalfInt J, HalfInt M,
                      HalfInt m1, HalfInt m2)
{
    if ((m1 + m2) != M) return 0.0;
    const HalfInt jmax = j1 + j2;
    const HalfInt jmin = half_int(std::abs(j1.twice() - j2.twice()));
    if (J < jmin || J > jmax) return 0.0;
    if (std::abs(M.twice()) > J.twice()) return 0.0;
    const CGTable table(j1, j2, M);
    return table.coefficient(J, M, m1, m2);
}

} // namespace collspin
