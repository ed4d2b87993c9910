#include "collspin/lindblad.hpp"

#include <cmath>
#include <random>

namespace collspin {

LindbladPropagator::LindbladPropagator(std::shared_ptr<const DomainPairOperators> ops,
                                       const ReservoirSpec& res)
    : ops_(std::move(ops)), res_(res), nbar_(res.nbar())
{
    res_.validate();
    const int nb = ops_->n_blocks();

    // Extract a symmetric tridiagonal sparse matrix into diag/offdiag form.
    auto extract_tridiag = [](const Eigen::SparseMatrix<double>& K,
                              Eigen::VectorXd& diag, Eigen::VectorXd& off) {
        const int d = static_cast<int>(K.rows());
        diag = Eigen::VectorXd::Zero(d);
        off = Eigen::VectorXd::Zero(std::max(d - 1, 0));
        for (int c = 0; c < K.outerSize(); ++c) {
            for (Eigen::SparseMatrix<double>::InnerIterator it(K, c); it; ++it) {
                const int r = static_cast<int>(it.row());
                if (r == c) {
                    diag(r) = it.value();
                } else if (r == c - 1) {
                    off(r) = it.value();
                } else if (r != c + 1) {
                    throw std::logic_error("K block is not tridiagonal");
                }
            }
        }
    };

    kdiag_.resize(nb);
    koff_.resize(nb);
    kdiag_em_.resize(nb);
    koff_em_.resize(nb);
    kdiag_abs_.resize(nb);
    koff_abs_.resize(nb);
    for (int b = 0; b < nb; ++b) {
        const int d = ops_->dim(b);
        const Eigen::SparseMatrix<double> Kem =
            ((nbar_ + 1.0) * ops_->jp_jm(b)).eval();
        if (Kem.rows() != d) throw std::logic_error("K block dimension mismatch");
        extract_tridiag(Kem, kdiag_em_[b], koff_em_[b]);
        if (b + 1 < nb && nbar_ > 0.0) {
            const auto& Lup = ops_->lowering(b + 1);  // block b+1 -> b
            const Eigen::SparseMatrix<double> Kabs =
                (nbar_ * (Lup * Eigen::SparseMatrix<double>(Lup.transpose()))).eval();
            extract_tridiag(Kabs, kdiag_abs_[b], koff_abs_[b]);
        } else {
            kdiag_abs_[b] = Eigen::VectorXd::Zero(d);
            koff_abs_[b] = Eigen::VectorXd::Zero(std::max(d - 1, 0));
        }
        kdiag_[b] = kdiag_em_[b] + kdiag_abs_[b];
        koff_[b] = koff_em_[b] + koff_abs_[b];
    }

    lcols_.resize(nb);
    lrows_.resize(nb);
    for (int b = 1; b < nb; ++b) {
        const auto& L = ops_->lowering(b);  // dim(b-1) x dim(b)
        lcols_[b].assign(static_cast<std::size_t>(ops_->dim(b)), BandEntry{});
        lrows_[b].assign(static_cast<std::size_t>(ops_->dim(b - 1)), BandEntry{});
        auto push = [](BandEntry& e, int idx, double v) {
            if (e.r0 < 0) {
                e.r0 = idx;
                e.v0 = v;
            } else if (e.r1 < 0) {
                e.r1 = idx;
                e.v1 = v;
            } else {
                throw std::logic_error("lowering operator has > 2 entries per line");
            }
        };
        for (int c = 0; c < L.outerSize(); ++c) {
            for (Eigen::SparseMatrix<double>::InnerIterator it(L, c); it; ++it) {
                push(lcols_[b][static_cast<std::size_t>(c)],
                     static_cast<int>(it.row()), it.value());
                push(lrows_[b][static_cast<std::size_t>(it.row())], c, it.value());
            }
        }
    }

    // Per-block, per-part eigendecomposition K = V diag(w) V^T, used by
    // the implicit stage solves.
    auto decompose = [nb, this](const std::vector<Eigen::VectorXd>& diag,
                                const std::vector<Eigen::VectorXd>& off,
                                std::vector<Eigen::MatrixXd>& vecs,
                                std::vector<Eigen::VectorXd>& vals) {
        vecs.resize(nb);
        vals.resize(nb);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
        for (int b = 0; b < nb; ++b) {
            const int d = ops_->dim(b);
            if (d == 1) {
                vecs[b] = Eigen::MatrixXd::Ones(1, 1);
                vals[b] = diag[b];
                continue;
            }
            es.computeFromTridiagonal(diag[b], off[b], Eigen::ComputeEigenvectors);
            if (es.info() != Eigen::Success) {
                throw std::runtime_error("tridiagonal eigendecomposition failed");
            }
            vecs[b] = es.eigenvectors();
            vals[b] = es.eigenvalues();
        }
    };
    decompose(kdiag_em_, koff_em_, kvecs_em_, kvals_em_);
    if (nbar_ > 0.0) decompose(kdiag_abs_, koff_abs_, kvecs_abs_, kvals_abs_);

    // Gershgorin bound on max eigenvalue of K, doubled for -(KX + XK) and
    // padded for the off-diagonal feed terms.
    double kmax = 0.0;
    for (int b = 0; b < nb; ++b) {
        const int d = ops_->dim(b);
        for (int i = 0; i < d; ++i) {
            double row = kdiag_[b](i);
            if (i > 0) row += std::abs(koff_[b](i - 1));
            if (i + 1 < d) row += std::abs(koff_[b](i));
            kmax = std::max(kmax, row);
        }
    }
    rho_bound_ = 4.4 * kmax;
}

void LindbladPropagator::add_emission_feed(int b, Eigen::Ref<const Eigen::MatrixXcd> x_up,
                                           double coeff, Eigen::Ref<Eigen::MatrixXcd> target,
                                           Eigen::MatrixXcd& work) const
{
    // target += coeff * L X_up L^T with L = lowering(b+1): dim(b) x dim(b+1).
    const int d = ops_->dim(b);
    const int du = ops_->dim(b + 1);
    const auto& rows = lrows_[b + 1];
    const auto& cols = lcols_[b + 1];

    // work(:,k) = X_up * (row k of L)^T, k = 0..d-1
    work.resize(du, d);
    for (int k = 0; k < d; ++k) {
        const BandEntry& e = rows[static_cast<std::size_t>(k)];
        if (e.r0 < 0) {
            work.col(k).setZero();
            continue;
        }
        work.col(k) = e.v0 * x_up.col(e.r0);
        if (e.r1 >= 0) work.col(k) += e.v1 * x_up.col(e.r1);
    }
    // target += coeff * L * work
    for (int j = 0; j < d; ++j) {
        auto yj = target.col(j);
        const auto fj = work.col(j);
        for (int c = 0; c < du; ++c) {
            const BandEntry& e = cols[static_cast<std::size_t>(c)];
            if (e.r0 < 0) continue;
            const std::complex<double> fv = coeff * fj(c);
            yj(e.r0) += e.v0 * fv;
            if (e.r1 >= 0) yj(e.r1) += e.v1 * fv;
        }
    }
}

void LindbladPropagator::add_absorption_feed(int b, Eigen::Ref<const Eigen::MatrixXcd> x_dn,
                                             double coeff, Eigen::Ref<Eigen::MatrixXcd> target,
                                             Eigen::MatrixXcd& work) const
{
    // target += coeff * L^T X_dn L with L = lowering(b): dim(b-1) x dim(b).
    const int d = ops_->dim(b);
    const int dd = ops_->dim(b - 1);
    const auto& cols = lcols_[b];

    // work(:,j) = X_dn * (col j of L), j = 0..d-1
    work.resize(dd, d);
    for (int j = 0; j < d; ++j) {
        const BandEntry& e = cols[static_cast<std::size_t>(j)];
        if (e.r0 < 0) {
            work.col(j).setZero();
            continue;
        }
        work.col(j) = e.v0 * x_dn.col(e.r0);
        if (e.r1 >= 0) work.col(j) += e.v1 * x_dn.col(e.r1);
    }
    // target(c,j) += coeff * (col c of L) . work(:,j)
    for (int j = 0; j < d; ++j) {
        auto yj = target.col(j);
        const auto fj = work.col(j);
        for (int c = 0; c < d; ++c) {
            const BandEntry& e = cols[static_cast<std::size_t>(c)];
            if (e.r0 < 0) continue;
            std::complex<double> acc = e.v0 * fj(e.r0);
            if (e.r1 >= 0) acc += e.v1 * fj(e.r1);
            yj(c) += coeff * acc;
        }
    }
}

void LindbladPropagator::rhs_impl(const Eigen::VectorXcd& x, Eigen::VectorXcd& dxdt,
                                  bool emission, bool absorption) const
{
    const auto& ops = *ops_;
    const int nb = ops.n_blocks();
    dxdt.resize(x.size());
    Eigen::MatrixXcd work;  // per-block scratch

    const auto& kdiag = emission ? (absorption ? kdiag_ : kdiag_em_) : kdiag_abs_;
    const auto& koff = emission ? (absorption ? koff_ : koff_em_) : koff_abs_;

    for (int b = 0; b < nb; ++b) {
        const int d = ops.dim(b);
        const Eigen::Map<const Eigen::MatrixXcd> X(x.data() + ops.offset(b), d, d);
        Eigen::Map<Eigen::MatrixXcd> Y(dxdt.data() + ops.offset(b), d, d);
        const Eigen::VectorXd& kd = kdiag[b];
        const Eigen::VectorXd& ke = koff[b];

        // Y = -(K X + X K) with tridiagonal K
        for (int j = 0; j < d; ++j) {
            Y.col(j).array() = -(kd.array() + kd(j)) * X.col(j).array();
            if (d > 1) {
                Y.col(j).head(d - 1).array() -=
                    ke.array() * X.col(j).tail(d - 1).array();
                Y.col(j).tail(d - 1).array() -=
                    ke.array() * X.col(j).head(d - 1).array();
                if (j > 0) Y.col(j) -= ke(j - 1) * X.col(j - 1);
                if (j + 1 < d) Y.col(j) -= ke(j) * X.col(j + 1);
            }
        }

        if (emission && b + 1 < nb) {
            const int du = ops.dim(b + 1);
            const Eigen::Map<const Eigen::MatrixXcd> Xup(x.data() + ops.offset(b + 1),
                                                         du, du);
            add_emission_feed(b, Xup, 2.0 * (nbar_ + 1.0), Y, work);
        }

        if (absorption && b > 0 && nbar_ > 0.0) {
            const int dd = ops.dim(b - 1);
            const Eigen::Map<const Eigen::MatrixXcd> Xdn(x.data() + ops.offset(b - 1),
                                                         dd, dd);
            add_absorption_feed(b, Xdn, 2.0 * nbar_, Y, work);
        }
    }
}

void LindbladPropagator::rhs_flat(const Eigen::VectorXcd& x, Eigen::VectorXcd& dxdt) const
{
    rhs_impl(x, dxdt, true, true);
}

void LindbladPropagator::rhs_emission_flat(const Eigen::VectorXcd& x,
                                           Eigen::VectorXcd& dxdt) const
{
    rhs_impl(x, dxdt, true, false);
}

void LindbladPropagator::rhs_absorption_flat(const Eigen::VectorXcd& x,
                                             Eigen::VectorXcd& dxdt) const
{
    rhs_impl(x, dxdt, false, true);
}

void LindbladPropagator::stage_block_solve(int b, double alpha, const Eigen::MatrixXd& V,
                                           const Eigen::VectorXd& w, StageWork& ws,
                                           Eigen::Map<Eigen::MatrixXcd> out) const
{
    // out = V ((V^T beff V) ./ (1 + alpha(w_i + w_j))) V^T, real and
    // imaginary parts separately (V is real).
    const int d = ops_->dim(b);
    ws.tr.noalias() = V.transpose() * ws.beff.real();
    ws.xr.noalias() = ws.tr * V;
    ws.ti.noalias() = V.transpose() * ws.beff.imag();
    ws.xi.noalias() = ws.ti * V;
    for (int j = 0; j < d; ++j) {
        const auto den = (1.0 + alpha * (w.array() + w(j))).eval();
        ws.xr.col(j).array() /= den;
        ws.xi.col(j).array() /= den;
    }
    ws.tr.noalias() = V * ws.xr;
    ws.xr.noalias() = ws.tr * V.transpose();
    ws.ti.noalias() = V * ws.xi;
    ws.xi.noalias() = ws.ti * V.transpose();
    out.real() = ws.xr;
    out.imag() = ws.xi;
}

void LindbladPropagator::solve_emission_stage(const Eigen::VectorXcd& b, double alpha,
                                              Eigen::VectorXcd& x) const
{
    // (I - alpha*A_em) x = b. Emission feeds block blk only from blk+1,
    // so one top-down sweep is an exact solve.
    const auto& ops = *ops_;
    const int nb = ops.n_blocks();
    x.resize(b.size());
    StageWork ws;
    for (int blk = nb - 1; blk >= 0; --blk) {
        const int d = ops.dim(blk);
        const Eigen::Map<const Eigen::MatrixXcd> Bb(b.data() + ops.offset(blk), d, d);
        Eigen::Map<Eigen::MatrixXcd> Xb(x.data() + ops.offset(blk), d, d);
        ws.beff = Bb;
        if (blk + 1 < nb) {
            const int du = ops.dim(blk + 1);
            const Eigen::Map<const Eigen::MatrixXcd> Xup(x.data() + ops.offset(blk + 1),
                                                         du, du);
            add_emission_feed(blk, Xup, alpha * 2.0 * (nbar_ + 1.0), ws.beff, ws.feed);
        }
        stage_block_solve(blk, alpha, kvecs_em_[blk], kvals_em_[blk], ws, Xb);
    }
}

void LindbladPropagator::solve_absorption_stage(const Eigen::VectorXcd& b, double alpha,
                                                Eigen::VectorXcd& x) const
{
    // (I - alpha*A_abs) x = b. Absorption feeds block blk only from
    // blk-1, so one bottom-up sweep is an exact solve.
    if (nbar_ <= 0.0) {
        x = b;
        return;
    }
    const auto& ops = *ops_;
    const int nb = ops.n_blocks();
    x.resize(b.size());
    StageWork ws;
    for (int blk = 0; blk < nb; ++blk) {
        const int d = ops.dim(blk);
        const Eigen::Map<const Eigen::MatrixXcd> Bb(b.data() + ops.offset(blk), d, d);
        Eigen::Map<Eigen::MatrixXcd> Xb(x.data() + ops.offset(blk), d, d);
        ws.beff = Bb;
        if (blk > 0) {
            const int dd = ops.dim(blk - 1);
            const Eigen::Map<const Eigen::MatrixXcd> Xdn(x.data() + ops.offset(blk - 1),
                                                         dd, dd);
            add_absorption_feed(blk, Xdn, alpha * 2.0 * nbar_, ws.beff, ws.feed);
        }
        stage_block_solve(blk, alpha, kvecs_abs_[blk], kvals_abs_[blk], ws, Xb);
    }
}

BlockedDensityMatrix LindbladPropagator::rhs(const BlockedDensityMatrix& rho) const
{
    if (rho.ops().domain1().n_spins != ops_->domain1().n_spins ||
        rho.ops().domain2().n_spins != ops_->domain2().n_spins) {
        throw std::invalid_argument("rhs: state and propagator domain pair mismatch");
    }
    Eigen::VectorXcd dx;
    rhs_flat(rho.to_flat(), dx);
    BlockedDensityMatrix out(ops_);
    out.from_flat(dx * res_.damping_rate);
    return out;
}

TimeSeries LindbladPropagator::evolve(const BlockedDensityMatrix& rho0,
                                      const EvolveOptions& opt) const
{
    if (opt.t_max_s <= 0.0) throw std::domain_error("t_max must be > 0");
    const double gamma = res_.damping_rate;
    const double tau_max = gamma * opt.t_max_s;
    const int n1 = ops_->domain1().n_spins;
    const int n2 = ops_->domain2().n_spins;

    TimeSeries series;
    series.method = "exact";

    std::vector<double> sample_tau(static_cast<std::size_t>(opt.sample_count));
    for (int i = 0; i < opt.sample_count; ++i) {
        sample_tau[static_cast<std::size_t>(i)] =
            tau_max * static_cast<double>(i) / static_cast<double>(opt.sample_count - 1);
    }

    SteadyStateDetector detector(gamma, n1, n2, opt.steady_window, opt.steady_eps);
    std::mt19937 block_picker(0x5eed);  // fixed seed keeps runs deterministic
    std::uniform_int_distribution<int> pick(0, ops_->n_blocks() - 1);

    OdeOptions ode;
    ode.rel_tol = opt.tol.rel;
    ode.abs_tol = opt.tol.abs;
    ode.initial_step = 1e-3 / (static_cast<double>(n1 + n2 + 1) * (2.0 * nbar_ + 1.0));

    BlockedDensityMatrix scratch(ops_);
    auto on_sample = [&](double tau, const Eigen::VectorXcd& x) -> bool {
        const ObservableSample obs = observables_flat(*ops_, x);
        const double t_s = tau / gamma;
        series.t_s.push_back(t_s);
        series.jz1.push_back(obs.jz1);
        series.jz2.push_back(obs.jz2);
        series.jz_sum.push_back(obs.jz1 + obs.jz2);
        series.a12.push_back(obs.a12);
        series.jz1jz2.push_back(obs.jz1jz2);
        series.trace.push_back(obs.trace);
        series.jtot2.push_back(obs.jtot2);

        // Positivity probe on one randomly chosen block per sample.
        scratch.from_flat(x);
        series.min_block_eigenvalue = std::min(
            series.min_block_eigenvalue, scratch.min_eigenvalue(pick(block_picker)));

        if (detector.feed(t_s, obs.jz1, obs.jz2)) {
            series.converged = true;
            series.t_converged_s = t_s;
            return !opt.stop_at_steady;
        }
        return true;
    };

    auto post_step = [&](Eigen::VectorXcd& x) {
        // Re-hermitize each block in place; the drift is pure roundoff.
        for (int b = 0; b < ops_->n_blocks(); ++b) {
            const int d = ops_->dim(b);
            Eigen::Map<Eigen::MatrixXcd> X(x.data() + ops_->offset(b), d, d);
            for (int j = 0; j < d; ++j) {
                X(j, j) = X(j, j).real();
                for (int i = 0; i < j; ++i) {
                    const std::complex<double> avg =
                        0.5 * (X(i, j) + std::conj(X(j, i)));
                    X(i, j) = avg;
                    X(j, i) = std::conj(avg);
                }
            }
        }
    };

    auto rhs_fn = [this](const Eigen::VectorXcd& x, Eigen::VectorXcd& dx) {
        rhs_flat(x, dx);
    };

    // Adaptive implicit trapezoid (Crank-Nicolson); A-stable, so the step
    // is limited by accuracy alone. At zero temperature the single stage
    // is solved exactly in one block sweep; otherwise the step is Strang
    // split into emission and absorption halves, each block-triangular
    // and solved exactly in its own sweep. The error estimate compares
    // against a variable-step Adams-Bashforth-2 predictor and is passed
    // once through the implicit stages, which damp the stiff components
    // the explicit predictor overstates.
    auto run_trapezoidal = [&]() {
        const double t_end = tau_max;
        const double h_min = std::max(1e-14 * t_end, 1e-13);
        double t = 0.0;
        double h = ode.initial_step;
        double h_prev = 0.0;  // no history yet: first estimate by step doubling

        Eigen::VectorXcd y = rho0.to_flat();
        Eigen::VectorXcd fcur(y.size()), fprev(y.size());
        Eigen::VectorXcd bvec(y.size()), tmp(y.size());
        Eigen::VectorXcd ynew(y.size()), yaux(y.size()), est(y.size());

        // One implicit step of size hs from ycur into out.
        auto cn_step = [&](const Eigen::VectorXcd& ycur, double hs,
                           Eigen::VectorXcd& out) {
            if (nbar_ <= 0.0) {
                rhs_flat(ycur, tmp);
                bvec = ycur + (0.5 * hs) * tmp;
                solve_emission_stage(bvec, 0.5 * hs, out);
            } else {
                rhs_emission_flat(ycur, tmp);
                bvec = ycur + (0.25 * hs) * tmp;
                solve_emission_stage(bvec, 0.25 * hs, out);
                rhs_absorption_flat(out, tmp);
                bvec = out + (0.5 * hs) * tmp;
                solve_absorption_stage(bvec, 0.5 * hs, out);
                rhs_emission_flat(out, tmp);
                bvec = out + (0.25 * hs) * tmp;
                solve_emission_stage(bvec, 0.25 * hs, out);
            }
        };

        std::size_t next_sample = 0;
        while (next_sample < sample_tau.size() && sample_tau[next_sample] <= 0.0) {
            if (!on_sample(sample_tau[next_sample], y)) return;
            ++next_sample;
        }

        rhs_flat(y, fcur);
        while (t < t_end) {
            if (ode.max_step > 0.0) h = std::min(h, ode.max_step);
            double target = t_end;
            if (next_sample < sample_tau.size()) {
                target = std::min(target, sample_tau[next_sample]);
            }
            bool hit_target = false;
            if (t + h >= target) {
                h = target - t;
                hit_target = true;
            }

            if (h_prev <= 0.0) {
                // One full step against two half steps.
                cn_step(y, h, ynew);
                cn_step(y, 0.5 * h, yaux);
                cn_step(yaux, 0.5 * h, est);
                yaux = est;
                est = (yaux - ynew) / 3.0;
                ynew.swap(yaux);
            } else {
                cn_step(y, h, ynew);
                const double r = h / h_prev;
                yaux = y + h * ((1.0 + 0.5 * r) * fcur - (0.5 * r) * fprev);
                est = (ynew - yaux) * (r / (3.0 * (r + 1.0)));
                // damp the stiff components the explicit predictor overstates
                yaux = est;
                solve_emission_stage(yaux, 0.5 * h, est);
                if (nbar_ > 0.0) {
                    yaux = est;
                    solve_absorption_stage(yaux, 0.5 * h, est);
                }
            }

            const auto scale = (ode.abs_tol +
                                ode.rel_tol *
                                    y.cwiseAbs().cwiseMax(ynew.cwiseAbs()).array())
                                   .eval();
            const double err =
                std::sqrt((est.cwiseAbs().array() / scale).square().sum() /
                          static_cast<double>(y.size()));

            if (err <= 1.0 || h <= h_min) {
                t += h;
                fprev.swap(fcur);
                y.swap(ynew);
                post_step(y);
                rhs_flat(y, fcur);
                h_prev = h;

                if (hit_target && next_sample < sample_tau.size() &&
                    t >= sample_tau[next_sample]) {
                    if (!on_sample(sample_tau[next_sample], y)) return;
                    ++next_sample;
                }
                const double grow =
                    (err <= 0.0) ? 5.0
                                 : std::clamp(0.9 * std::pow(err, -1.0 / 3.0), 0.2, 5.0);
                h = std::max(h * grow, h_min);
            } else {
                h = std::max(
                    h * std::clamp(0.9 * std::pow(err, -1.0 / 3.0), 0.1, 0.9), h_min);
                if (h <= h_min && err > 1e6) {
                    throw IntegrationError("step size underflow at t = " +
                                               std::to_string(t),
                                           t);
                }
            }
        }
    };

    const bool implicit_path =
        opt.stepper == Stepper::trapezoidal ||
        (opt.stepper == Stepper::auto_select && rho_bound_ > 2000.0);

    try {
        if (implicit_path) {
            run_trapezoidal();
        } else {
            integrate_dopri5(rhs_fn, rho0.to_flat(), 0.0, tau_max, sample_tau,
                             on_sample, post_step, ode);
        }
    } catch (const IntegrationError& e) {
        throw IntegrationError(e.what(), e.t_last_good / gamma);
    }

    series.scenario.n1 = n1;
    series.scenario.n2 = n2;
    return series;
}

} // namespace collspin
