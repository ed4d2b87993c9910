#include "collspin/blocked_density.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

namespace collspin {

DomainPairOperators::DomainPairOperators(SpinDomain d1, SpinDomain d2)
    : d1_(d1), d2_(d2)
{
    const HalfInt j1 = d1.j(), j2 = d2.j();
    const int n_blocks = j1.twice() + j2.twice() + 1;
    basis_.reserve(n_blocks);
    for (int b = 0; b < n_blocks; ++b) {
        const HalfInt M = half_int(-(j1 + j2).twice() + 2 * b);
        basis_.emplace_back(j1, j2, M);
        offsets_.push_back(flat_size_);
        flat_size_ += basis_.back().dim() * basis_.back().dim();
    }

    lower_.resize(n_blocks);
    m1_.resize(n_blocks);
    m2_.resize(n_blocks);
    a12_.resize(n_blocks);
    jpjm_.resize(n_blocks);
    for (int b = 0; b < n_blocks; ++b) {
        const MBlockBasis& bas = basis_[b];
        const int d = bas.dim();
        lower_[b] = (b == 0) ? Eigen::SparseMatrix<double>(0, d)
                             : lowering_matrix(j1, j2, bas.total_m());
        m1_[b].resize(d);
        m2_[b].resize(d);
        for (int i = 0; i < d; ++i) {
            m1_[b](i) = bas.state(i).m1.value();
            m2_[b](i) = bas.state(i).m2.value();
        }
        // A12 = J1+ J2- + J1- J2+: moves (m1, m2) -> (m1+1, m2-1) and back,
        // staying inside the M block.
        std::vector<Eigen::Triplet<double>> trips;
        for (int c = 0; c < d; ++c) {
            const auto& s = bas.state(c);
            const double up1 = ladder_element(j1, s.m1, LadderDirection::raise);
            const double dn2 = ladder_element(j2, s.m2, LadderDirection::lower);
            if (up1 != 0.0 && dn2 != 0.0) {
                const int r = bas.index_of(s.m1 + half_int(2));
                if (r >= 0) {
                    trips.emplace_back(r, c, up1 * dn2);
                    trips.emplace_back(c, r, up1 * dn2);
                }
            }
        }
        a12_[b].resize(d, d);
        a12_[b].setFromTriplets(trips.begin(), trips.end());
        jpjm_[b] = Eigen::SparseMatrix<double>(lower_[b].transpose()) * lower_[b];
    }
}

BlockedDensityMatrix::BlockedDensityMatrix(std::shared_ptr<const DomainPairOperators> ops)
    : ops_(std::move(ops))
{
    blocks_.reserve(ops_->n_blocks());
    for (int b = 0; b < ops_->n_blocks(); ++b) {
        blocks_.emplace_back(Eigen::MatrixXcd::Zero(ops_->dim(b), ops_->dim(b)));
    }
}

BlockedDensityMatrix BlockedDensityMatrix::build_initial(const InitialState& init,
                                                         SpinDomain d1, SpinDomain d2)
{
    return build_initial(init, std::make_shared<DomainPairOperators>(d1, d2));
}

BlockedDensityMatrix BlockedDensityMatrix::build_initial(
    const InitialState& init, std::shared_ptr<const DomainPairOperators> ops)
{
    const auto [m1, m2] = init.resolve(ops->domain1(), ops->domain2());
    BlockedDensityMatrix rho(std::move(ops));
    const int b = rho.ops().block_of_m(m1 + m2);
    const int i = rho.ops().basis(b).index_of(m1);
    if (i < 0) throw std::logic_error("initial state not found in block basis");
    rho.block(b)(i, i) = 1.0;
    return rho;
}

double BlockedDensityMatrix::trace() const
{
    double tr = 0.0;
    for (const auto& blk : blocks_) tr += blk.trace().real();
    return tr;
}

ObservableSample BlockedDensityMatrix::observables() const
{
    return observables_flat(*ops_, to_flat());
}

double BlockedDensityMatrix::hermiticity_defect() const
{
    double worst = 0.0;
    for (const auto& blk : blocks_) {
        if (blk.size() == 0) continue;
        worst = std::max(worst, (blk - blk.adjoint()).cwiseAbs().maxCoeff());
    }
    return worst;
}

void BlockedDensityMatrix::symmetrize()
{
    for (auto& blk : blocks_) {
        blk = 0.5 * (blk + blk.adjoint()).eval();
    }
}

double BlockedDensityMatrix::min_eigenvalue(int b) const
{
    if (blocks_[b].size() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(blocks_[b],
                                                       Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

Eigen::VectorXcd BlockedDensityMatrix::to_flat() const
{
    Eigen::VectorXcd x(ops_->flat_size());
    for (int b = 0; b < n_blocks(); ++b) {
        const int d = ops_->dim(b);
        Eigen::Map<Eigen::MatrixXcd>(x.data() + ops_->offset(b), d, d) = blocks_[b];
    }
    return x;
}

void BlockedDensityMatrix::from_flat(const Eigen::VectorXcd& x)
{
    if (x.size() != ops_->flat_size()) {
        throw std::invalid_argument("from_flat: size mismatch");
    }
    for (int b = 0; b < n_blocks(); ++b) {
        const int d = ops_->dim(b);
        blocks_[b] = Eigen::Map<const Eigen::MatrixXcd>(x.data() + ops_->offset(b), d, d);
    }
}

ObservableSample observables_flat(const DomainPairOperators& ops,
                                  const Eigen::VectorXcd& x)
{
    ObservableSample out;
    double imag_residue = 0.0;
    for (int b = 0; b < ops.n_blocks(); ++b) {
        const int d = ops.dim(b);
        const Eigen::Map<const Eigen::MatrixXcd> X(x.data() + ops.offset(b), d, d);
        const Eigen::VectorXcd diag = X.diagonal();
        imag_residue = std::max(imag_residue, diag.imag().cwiseAbs().maxCoeff());
        const Eigen::VectorXd p = diag.real();
        const double block_trace = p.sum();
        out.trace += block_trace;
        out.jz1 += ops.diag_m1(b).dot(p);
        out.jz2 += ops.diag_m2(b).dot(p);
        out.jz1jz2 += (ops.diag_m1(b).array() * ops.diag_m2(b).array() * p.array()).sum();

        // tr(O X) for sparse Hermitian O.
        std::complex<double> a12_tr = 0.0, jpjm_tr = 0.0;
        const auto& A = ops.flip_flop(b);
        for (int k = 0; k < A.outerSize(); ++k) {
            for (Eigen::SparseMatrix<double>::InnerIterator it(A, k); it; ++it) {
                a12_tr += it.value() * X(it.col(), it.row());
            }
        }
        const auto& P = ops.jp_jm(b);
        for (int k = 0; k < P.outerSize(); ++k) {
            for (Eigen::SparseMatrix<double>::InnerIterator it(P, k); it; ++it) {
                jpjm_tr += it.value() * X(it.col(), it.row());
            }
        }
        imag_residue = std::max(imag_residue,
                                std::max(std::abs(a12_tr.imag()), std::abs(jpjm_tr.imag())));
        out.a12 += a12_tr.real();
        const double M = ops.m_of_block(b).value();
        // Jtot^2 = J+J- + Jz^2 - Jz, with Jz = M on the block.
        out.jtot2 += jpjm_tr.real() + (M * M - M) * block_trace;
    }
    if (imag_residue > 1e-10) {
        throw std::runtime_error("observables: imaginary residue " +
                                 std::to_string(imag_residue) + " exceeds 1e-10");
    }
    return out;
}

} // namespace collspin
