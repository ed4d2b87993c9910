#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <complex>
#include <memory>
#include <vector>

#include "collspin/scenario.hpp"
#include "collspin/spin_algebra.hpp"

namespace collspin {

struct ObservableSample {
    double jz1 = 0.0;
    double jz2 = 0.0;
    double a12 = 0.0;
    double jz1jz2 = 0.0;
    double jtot2 = 0.0;
    double trace = 0.0;
};

// Per-M operator matrices for a fixed domain pair, shared by the density
// matrix, the propagator and the observable evaluation. Index b runs over
// M = -(j1+j2) + b, b = 0 .. n_blocks-1.
class DomainPairOperators {
public:
    DomainPairOperators(SpinDomain d1, SpinDomain d2);

    SpinDomain domain1() const { return d1_; }
    SpinDomain domain2() const { return d2_; }
    int n_blocks() const { return static_cast<int>(basis_.size()); }
    HalfInt m_of_block(int b) const { return half_int(-(d1_.j() + d2_.j()).twice() + 2 * b); }
    int block_of_m(HalfInt m) const { return (m.twice() + (d1_.j() + d2_.j()).twice()) / 2; }

    const MBlockBasis& basis(int b) const { return basis_[b]; }
    int dim(int b) const { return basis_[b].dim(); }
    int offset(int b) const { return offsets_[b]; }  // into the flattened state
    int flat_size() const { return flat_size_; }

    // J^-_tot from block b to block b-1 (empty matrix at b = 0).
    const Eigen::SparseMatrix<double>& lowering(int b) const { return lower_[b]; }
    const Eigen::VectorXd& diag_m1(int b) const { return m1_[b]; }
    const Eigen::VectorXd& diag_m2(int b) const { return m2_[b]; }
    // J1+ J2- + J1- J2+ restricted to block b (block-diagonal in M).
    const Eigen::SparseMatrix<double>& flip_flop(int b) const { return a12_[b]; }
    // J+_tot J-_tot restricted to block b.
    const Eigen::SparseMatrix<double>& jp_jm(int b) const { return jpjm_[b]; }

private:
    SpinDomain d1_, d2_;
    std::vector<MBlockBasis> basis_;
    std::vector<int> offsets_;
    int flat_size_ = 0;
    std::vector<Eigen::SparseMatrix<double>> lower_;
    std::vector<Eigen::VectorXd> m1_, m2_;
    std::vector<Eigen::SparseMatrix<double>> a12_;
    std::vector<Eigen::SparseMatrix<double>> jpjm_;
};

// Density matrix over the product Dicke basis, stored as one dense
// Hermitian block per total magnetization M. Dynamics generated by the
// collective jump operators never leaves this block structure.
class BlockedDensityMatrix {
public:
    explicit BlockedDensityMatrix(std::shared_ptr<const DomainPairOperators> ops);

    static BlockedDensityMatrix build_initial(const InitialState& init,
                                              SpinDomain d1, SpinDomain d2);
    static BlockedDensityMatrix build_initial(
        const InitialState& init, std::shared_ptr<const DomainPairOperators> ops);

    const DomainPairOperators& ops() const { return *ops_; }
    std::shared_ptr<const DomainPairOperators> ops_ptr() const { return ops_; }

    Eigen::MatrixXcd& block(int b) { return blocks_[b]; }
    const Eigen::MatrixXcd& block(int b) const { return blocks_[b]; }
    int n_blocks() const { return static_cast<int>(blocks_.size()); }

    double trace() const;
    // Expectation values; throws if the imaginary residue of any reported
    // observable exceeds 1e-10.
    ObservableSample observables() const;

    double hermiticity_defect() const;  // max |rho - rho^dagger|
    void symmetrize();                  // rho <- (rho + rho^dagger)/2
    double min_eigenvalue(int b) const;

    // Flattened view used by the integrator.
    Eigen::VectorXcd to_flat() const;
    void from_flat(const Eigen::VectorXcd& x);

private:
    std::shared_ptr<const DomainPairOperators> ops_;
    std::vector<Eigen::MatrixXcd> blocks_;
};

// Observables evaluated directly on a flattened state.
ObservableSample observables_flat(const DomainPairOperators& ops,
                                  const Eigen::VectorXcd& x);

} // namespace collspin
