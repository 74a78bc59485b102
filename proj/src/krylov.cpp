// SPDX-License-Identifier: Apache-2.0
#include "gsylv/krylov.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <chrono>
#include <cmath>
#include <functional>

#include "gsylv/dense_kernels.hpp"
#include "gsylv/neumann.hpp"
#include "gsylv/rng.hpp"

namespace gsylv {

namespace {

MatrixXd hstack(const MatrixXd& A, const MatrixXd& B) {
    if (A.cols() == 0) return B;
    if (B.cols() == 0) return A;
    MatrixXd C(A.rows(), A.cols() + B.cols());
    C << A, B;
    return C;
}

MatrixXd orth(const MatrixXd& A) {
    return orthonormalize_block(A, MatrixXd(A.rows(), 0)).V;
}

std::vector<OperatorPtr> n_operators(const GeneralizedSylvesterProblem& pb) {
    std::vector<OperatorPtr> ops;
    for (const auto& t : pb.terms()) ops.push_back(t.N);
    return ops;
}

std::vector<OperatorPtr> m_operators(const GeneralizedSylvesterProblem& pb) {
    std::vector<OperatorPtr> ops;
    for (const auto& t : pb.terms()) ops.push_back(t.M);
    return ops;
}

}  // namespace

// ---------------------------------------------------------------------------
// GK spaces and starting blocks
// ---------------------------------------------------------------------------

MatrixXd gk_basis(const std::vector<OperatorPtr>& ops, const MatrixXd& U,
                  int d, double tol) {
    if (d < 0) throw std::invalid_argument("gk_basis: d >= 0 required");
    const Index n = U.rows();
    if (U.cols() == 0) return MatrixXd(n, 0);

    MatrixXd basis = orthonormalize_block(U, MatrixXd(n, 0), tol * U.norm()).V;
    MatrixXd frontier = basis;
    for (int level = 1; level <= d && frontier.cols() > 0 && !ops.empty();
         ++level) {
        const Index fc = frontier.cols();
        MatrixXd cand(n, static_cast<Index>(ops.size()) * fc);
        for (size_t i = 0; i < ops.size(); ++i)
            cand.middleCols(static_cast<Index>(i) * fc, fc) =
                ops[i]->apply(frontier);
        const auto o = orthonormalize_block(cand, basis, tol * cand.norm());
        basis = hstack(basis, o.V);
        frontier = o.V;
    }
    return basis;
}

std::pair<MatrixXd, MatrixXd> build_starting_blocks_commutator(
    const GeneralizedSylvesterProblem& pb, int ell) {
    if (ell < 0)
        throw std::invalid_argument("starting blocks: ell >= 0 required");
    const Index n = pb.dim();
    const int m = pb.num_terms();

    auto build_side = [&](const std::vector<OperatorPtr>& ops, const MatrixXd& C,
                          bool a_side) {
        MatrixXd basis = gk_basis(ops, C, ell);
        if (ell >= 1 && m > 0) {
            MatrixXd U(n, 0);
            for (const auto& t : pb.terms()) {
                const auto& f = a_side ? t.comm_a : t.comm_b;
                if (!f)
                    throw ConfigError(
                        "commutator starting blocks: commutator factors "
                        "missing on a perturbation term");
                U = hstack(U, f->U);
            }
            if (U.cols() > 0) {
                const MatrixXd ext = gk_basis(ops, U, ell - 1);
                basis = hstack(basis, orthonormalize_block(ext, basis).V);
            }
        }
        return basis;
    };

    return {build_side(n_operators(pb), pb.C1(), true),
            build_side(m_operators(pb), pb.C2(), false)};
}

std::pair<MatrixXd, MatrixXd> build_starting_blocks_lowrank(
    const GeneralizedSylvesterProblem& pb) {
    auto build_side = [&](const MatrixXd& C, bool a_side) {
        MatrixXd basis = orth(C);
        for (const auto& t : pb.terms()) {
            const auto* lr = dynamic_cast<const LowRankOperator*>(
                (a_side ? t.N : t.M).get());
            if (!lr)
                throw ConfigError(
                    "low-rank starting blocks: perturbation coefficients must "
                    "be LowRankOperator instances");
            basis = hstack(basis, orthonormalize_block(lr->left(), basis).V);
        }
        return basis;
    };
    return {build_side(pb.C1(), true), build_side(pb.C2(), false)};
}

// ---------------------------------------------------------------------------
// Extended Krylov basis
// ---------------------------------------------------------------------------

ExtendedKrylovBasis::ExtendedKrylovBasis(const MatrixXd& C_bar,
                                         const LinearMatrixOperator& op,
                                         long* solves) {
    const Index n = op.dim();
    if (C_bar.rows() != n || C_bar.cols() == 0)
        throw std::invalid_argument("extended Krylov basis: bad starting block");

    const MatrixXd Vp = orth(C_bar);
    if (solves) *solves += C_bar.cols();
    const MatrixXd Vq = orthonormalize_block(op.inverse_apply(C_bar), Vp).V;
    const Index wp = Vp.cols(), wq = Vq.cols();
    if (wp + wq == 0)
        throw BreakdownError("extended Krylov basis: empty first block");
    V_.resize(n, wp + wq);
    V_ << Vp, Vq;
    begin_ = {0};
    poly_cols_ = {wp};
    inv_cols_ = {wq};
}

void ExtendedKrylovBasis::expand(const LinearMatrixOperator& op, long* solves) {
    const int b = blocks() - 1;
    const Index off = begin_[static_cast<size_t>(b)];
    const Index wp = poly_cols_[static_cast<size_t>(b)];
    const Index wq = inv_cols_[static_cast<size_t>(b)];
    const Index n = V_.rows();

    MatrixXd new_p(n, 0), new_q(n, 0);
    if (wp > 0)
        new_p = orthonormalize_block(op.apply(V_.middleCols(off, wp)), V_).V;
    if (wq > 0) {
        if (solves) *solves += wq;
        const MatrixXd cand = op.inverse_apply(V_.middleCols(off + wp, wq));
        new_q = orthonormalize_block(cand, hstack(V_, new_p)).V;
    }
    if (new_p.cols() + new_q.cols() == 0)
        throw BreakdownError("extended Krylov basis: new block fully deflated");

    const Index old = V_.cols();
    V_.conservativeResize(n, old + new_p.cols() + new_q.cols());
    V_.middleCols(old, new_p.cols()) = new_p;
    V_.middleCols(old + new_p.cols(), new_q.cols()) = new_q;
    begin_.push_back(old);
    poly_cols_.push_back(new_p.cols());
    inv_cols_.push_back(new_q.cols());
}

// ---------------------------------------------------------------------------
// Projected problem
// ---------------------------------------------------------------------------

DenseCoefficients ProjectedProblem::as_dense() const {
    return DenseCoefficients{T, H, G, F, E1, E2};
}

namespace {

struct SideExtension {
    MatrixXd P;    // (I - V V^T) * Op * (last block)
    MatrixXd tau;  // its triangular QR factor
};

// Extends T, {G_i}, E with the basis blocks [from, basis.blocks()).
SideExtension extend_side(const LinearMatrixOperator& op,
                          const std::vector<OperatorPtr>& perts,
                          const MatrixXd& C, const ExtendedKrylovBasis& basis,
                          MatrixXd& T, std::vector<MatrixXd>& G, MatrixXd& E,
                          int from) {
    const MatrixXd& V = basis.matrix();
    if (G.size() != perts.size()) G.assign(perts.size(), MatrixXd());
    SideExtension ext;

    for (int b = from; b < basis.blocks(); ++b) {
        const Index off = basis.block_begin(b);
        const Index w = basis.block_cols(b);
        const Index tot = off + w;
        const auto Vb = V.middleCols(off, w);

        auto grow = [&](MatrixXd& Mtx, const MatrixXd& OV, const MatrixXd& OtV) {
            const MatrixXd newcol = V.leftCols(tot).transpose() * OV;
            Mtx.conservativeResize(tot, tot);
            Mtx.block(0, off, tot, w) = newcol;
            if (off > 0)
                Mtx.block(off, 0, w, off) = OtV.transpose() * V.leftCols(off);
            return newcol;
        };

        const MatrixXd AV = op.apply(Vb);
        const MatrixXd AtV = off > 0 ? MatrixXd(op.transpose_apply(Vb))
                                     : MatrixXd(0, 0);
        const MatrixXd newcol = grow(T, AV, AtV);
        for (size_t i = 0; i < perts.size(); ++i) {
            const MatrixXd NV = perts[i]->apply(Vb);
            const MatrixXd NtV = off > 0 ? MatrixXd(perts[i]->transpose_apply(Vb))
                                         : MatrixXd(0, 0);
            grow(G[i], NV, NtV);
        }
        E.conservativeResize(tot, C.cols());
        E.bottomRows(w) = Vb.transpose() * C;

        if (b == basis.blocks() - 1) {
            ext.P = AV - V.leftCols(tot) * newcol;
            Eigen::HouseholderQR<MatrixXd> qr(ext.P);
            ext.tau = qr.matrixQR().topRows(w).triangularView<Eigen::Upper>();
        }
    }
    return ext;
}

void mirror_lyapunov(ProjectedProblem& pp) {
    pp.H = pp.T;
    pp.F = pp.G;
    pp.E2 = pp.E1;
    pp.blocks_w = pp.blocks_v;
}

}  // namespace

ProjectedProblem assemble_projected(const GeneralizedSylvesterProblem& pb,
                                    const ExtendedKrylovBasis& V,
                                    const ExtendedKrylovBasis& W,
                                    const ProjectedProblem* previous) {
    ProjectedProblem pp = previous ? *previous : ProjectedProblem{};
    extend_side(pb.A(), n_operators(pb), pb.C1(), V, pp.T, pp.G, pp.E1,
                pp.blocks_v);
    pp.blocks_v = V.blocks();
    if (&V == &W && pb.lyapunov_symmetric()) {
        mirror_lyapunov(pp);
    } else {
        extend_side(pb.B(), m_operators(pb), pb.C2(), W, pp.H, pp.F, pp.E2,
                    pp.blocks_w);
        pp.blocks_w = W.blocks();
    }
    return pp;
}

// ---------------------------------------------------------------------------
// Projected solvability (ratio field of values surrogate)
// ---------------------------------------------------------------------------

SolvabilityCheck check_projected_solvability(const ProjectedProblem& pp) {
    const Index pv = pp.dim_v(), pw = pp.dim_w();
    if (pv > 80 || pw > 80)
        throw std::invalid_argument(
            "check_projected_solvability: projected dimension above the "
            "p <= 80 guard");
    SolvabilityCheck out;
    if (pv == 0 || pw == 0) {
        out.solvable = true;
        return out;
    }
    if (pp.G.empty()) {
        out.solvable = true;
        return out;
    }

    const Index dim = pv * pw;
    MatrixXd KL = MatrixXd::Zero(dim, dim);
    MatrixXd KP = MatrixXd::Zero(dim, dim);
    KL += kron(MatrixXd::Identity(pw, pw), pp.T);
    KL += kron(pp.H, MatrixXd::Identity(pv, pv));
    for (size_t i = 0; i < pp.G.size(); ++i) KP += kron(pp.F[i], pp.G[i]);

    Eigen::PartialPivLU<MatrixXd> lu(KL);
    if (lu.rcond() < 1e-14) {
        out.indeterminate = true;
        return out;
    }

    if (dim <= 1600) {
        const MatrixXd Mop = lu.solve(KP);
        Eigen::EigenSolver<MatrixXd> es(Mop, false);
        out.max_ratio = es.eigenvalues().cwiseAbs().maxCoeff();
    } else {
        GaussianRng rng(3);
        VectorXd z = rng.unit_vector(dim);
        double est = 0.0;
        std::vector<double> ratios;
        for (int it = 0; it < 200; ++it) {
            VectorXd y = lu.solve(KP * z);
            const double nrm = y.norm();
            if (nrm == 0.0) {
                est = 0.0;
                break;
            }
            ratios.push_back(nrm);
            z = y / nrm;
            if (ratios.size() >= 12) {
                double g = 1.0;
                for (size_t i = ratios.size() - 10; i < ratios.size(); ++i)
                    g *= ratios[i];
                const double newest = std::pow(g, 0.1);
                if (std::abs(newest - est) <= 1e-4 * std::max(newest, 1e-30)) {
                    est = newest;
                    break;
                }
                est = newest;
            }
        }
        out.max_ratio = est;
    }
    out.solvable = out.max_ratio < 1.0;
    return out;
}

double cheap_residual_norm(const MatrixXd& Z, const MatrixXd& tau,
                           const MatrixXd& h, Index last_rows, Index last_cols) {
    if (Z.size() == 0) return 0.0;
    const double a = (tau * Z.bottomRows(last_rows)).squaredNorm();
    const double b = (Z.rightCols(last_cols) * h.transpose()).squaredNorm();
    return std::sqrt(a + b);
}

// ---------------------------------------------------------------------------
// Inner solver cascade for the projected problem
// ---------------------------------------------------------------------------

namespace {

VectorXd gmres(const std::function<VectorXd(const VectorXd&)>& apply,
               const VectorXd& b, const VectorXd& x0, double rtol, int maxit) {
    const Index dim = b.size();
    VectorXd r = b - apply(x0);
    const double bnorm = std::max(b.norm(), 1e-300);
    double beta = r.norm();
    if (beta <= rtol * bnorm) return x0;

    maxit = static_cast<int>(std::min<Index>(maxit, dim));
    MatrixXd V(dim, maxit + 1);
    MatrixXd Hs = MatrixXd::Zero(maxit + 1, maxit);
    VectorXd cs = VectorXd::Zero(maxit), sn = VectorXd::Zero(maxit);
    VectorXd g = VectorXd::Zero(maxit + 1);
    V.col(0) = r / beta;
    g[0] = beta;

    int j = 0;
    for (; j < maxit; ++j) {
        VectorXd w = apply(V.col(j));
        for (Index i = 0; i <= j; ++i) {
            Hs(i, j) = V.col(i).dot(w);
            w -= Hs(i, j) * V.col(i);
        }
        Hs(j + 1, j) = w.norm();
        if (Hs(j + 1, j) > 0.0) V.col(j + 1) = w / Hs(j + 1, j);
        for (Index i = 0; i < j; ++i) {
            const double t = cs[i] * Hs(i, j) + sn[i] * Hs(i + 1, j);
            Hs(i + 1, j) = -sn[i] * Hs(i, j) + cs[i] * Hs(i + 1, j);
            Hs(i, j) = t;
        }
        const double denom = std::hypot(Hs(j, j), Hs(j + 1, j));
        if (denom == 0.0) break;
        cs[j] = Hs(j, j) / denom;
        sn[j] = Hs(j + 1, j) / denom;
        Hs(j, j) = denom;
        Hs(j + 1, j) = 0.0;
        g[j + 1] = -sn[j] * g[j];
        g[j] = cs[j] * g[j];
        if (std::abs(g[j + 1]) <= rtol * bnorm) {
            ++j;
            break;
        }
    }
    const VectorXd y = Hs.topLeftCorner(j, j)
                           .triangularView<Eigen::Upper>()
                           .solve(g.head(j));
    return x0 + V.leftCols(j) * y;
}

double projected_true_residual(const DenseCoefficients& co, const MatrixXd& Z) {
    MatrixXd R = co.A * Z + Z * co.B.transpose() - co.C1 * co.C2.transpose();
    for (size_t i = 0; i < co.N.size(); ++i)
        R.noalias() += co.N[i] * Z * co.M[i].transpose();
    return R.norm();
}

// Direct solve of the projected Kronecker system with iterative refinement.
MatrixXd projected_kron_direct(const DenseCoefficients& co, double abs_target) {
    const Index pv = co.A.rows(), pw = co.B.rows();
    const MatrixXd CC = co.C1 * co.C2.transpose();
    MatrixXd K = MatrixXd::Zero(pv * pw, pv * pw);
    K += kron(MatrixXd::Identity(pw, pw), co.A);
    K += kron(co.B, MatrixXd::Identity(pv, pv));
    for (size_t i = 0; i < co.N.size(); ++i) K += kron(co.M[i], co.N[i]);

    const Eigen::Map<const VectorXd> rhs(CC.data(), pv * pw);
    Eigen::PartialPivLU<MatrixXd> lu(K);
    VectorXd x = lu.solve(rhs);
    for (int refine = 0; refine < 3; ++refine) {
        const VectorXd r = rhs - K * x;
        if (!r.allFinite() || r.norm() <= 0.1 * abs_target) break;
        x += lu.solve(r);
    }
    if (!x.allFinite() || (rhs - K * x).norm() > abs_target)
        throw UnsolvableError(
            "projected problem: direct Kronecker solve failed to reach the "
            "Galerkin target (singular projected pencil?)");
    return Eigen::Map<const MatrixXd>(x.data(), pv, pw);
}

// Preconditioned residual iteration: GMRES on Z + L^{-1}(Pi(Z)) = L^{-1}(C)
// in the triangularized coordinates, with the triangular Sylvester solve as
// the preconditioner.
MatrixXd projected_gmres(const DenseCoefficients& co, double abs_target) {
    TriangularizedProblem tp;
    try {
        tp = TriangularizedProblem::from(co);
        tp.solve_sylvester(MatrixXd::Zero(co.A.rows(), co.B.rows()));
    } catch (const SpectrumOverlapError&) {
        throw UnsolvableError(
            "projected problem: Sylvester part is singular, no fallback");
    }
    const Index pv = co.A.rows(), pw = co.B.rows();
    const MatrixXd rhs_t = tp.C1t * tp.C2t.transpose();

    auto apply = [&](const VectorXd& zv) {
        const Eigen::Map<const MatrixXd> Z(zv.data(), pv, pw);
        const MatrixXd Y =
            MatrixXd(Z) + tp.solve_sylvester(tp.perturbation_apply(Z));
        return VectorXd(Eigen::Map<const VectorXd>(Y.data(), pv * pw));
    };

    const MatrixXd B0 = tp.solve_sylvester(rhs_t);
    const Eigen::Map<const VectorXd> bvec(B0.data(), pv * pw);
    VectorXd x = VectorXd::Zero(pv * pw);
    for (int restart = 0; restart < 4; ++restart) {
        x = gmres(apply, bvec, x, 1e-13, 250);
        const Eigen::Map<const MatrixXd> Zt(x.data(), pv, pw);
        const MatrixXd Rt = tp.schur_a.U * Zt + Zt * tp.schur_b.U.transpose() +
                            tp.perturbation_apply(Zt) - rhs_t;
        if (Rt.norm() <= abs_target) return tp.back_transform(Zt);
    }
    throw UnsolvableError(
        "projected problem: preconditioned refinement did not reach the "
        "Galerkin target");
}

MatrixXd solve_projected(const ProjectedProblem& pp, double abs_target,
                         const InnerSolverConfig& icfg, SolveReport& rep) {
    const DenseCoefficients co = pp.as_dense();
    const double enorm = (co.C1 * co.C2.transpose()).norm();
    if (enorm == 0.0) return MatrixXd::Zero(pp.dim_v(), pp.dim_w());

    try {
        return neumann_solve(co, abs_target / enorm, icfg.ell_max).X;
    } catch (const DivergenceError&) {
    } catch (const SpectrumOverlapError&) {
    }
    rep.inner_fallbacks += 1;
    if (std::max(pp.dim_v(), pp.dim_w()) <= icfg.kron_dim_cap)
        return projected_kron_direct(co, abs_target);
    return projected_gmres(co, abs_target);
}

double true_residual_norm(const GeneralizedSylvesterProblem& pb,
                          const ExtendedKrylovBasis& V,
                          const ExtendedKrylovBasis& W, const MatrixXd& Z,
                          LowRankFactorPair* factors_out = nullptr) {
    Eigen::BDCSVD<MatrixXd> svd(Z, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const VectorXd& sv = svd.singularValues();
    Index k = 0;
    const double thr = sv.size() > 0 ? 1e-13 * sv[0] : 0.0;
    while (k < sv.size() && sv[k] > thr) ++k;
    const VectorXd shalf = sv.head(k).cwiseSqrt();
    LowRankFactorPair X(
        V.matrix() * (svd.matrixU().leftCols(k) * shalf.asDiagonal()),
        W.matrix() * (svd.matrixV().leftCols(k) * shalf.asDiagonal()));
    const double res = residual_norm(pb, X);
    if (factors_out) *factors_out = std::move(X);
    return res;
}

double galerkin_defect(const GeneralizedSylvesterProblem& pb,
                       const ExtendedKrylovBasis& V,
                       const ExtendedKrylovBasis& W, const MatrixXd& Z) {
    Eigen::BDCSVD<MatrixXd> svd(Z, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const VectorXd& sv = svd.singularValues();
    Index k = 0;
    const double thr = sv.size() > 0 ? 1e-14 * sv[0] : 0.0;
    while (k < sv.size() && sv[k] > thr) ++k;
    const VectorXd shalf = sv.head(k).cwiseSqrt();
    const LowRankFactorPair X(
        V.matrix() * (svd.matrixU().leftCols(k) * shalf.asDiagonal()),
        W.matrix() * (svd.matrixV().leftCols(k) * shalf.asDiagonal()));
    const auto rf = residual_factors(pb, X);
    const MatrixXd left = V.matrix().transpose() * rf.L;
    const MatrixXd right = rf.R.transpose() * W.matrix();
    return (left * right).norm();
}

}  // namespace

// ---------------------------------------------------------------------------
// Main solver
// ---------------------------------------------------------------------------

std::pair<LowRankFactorPair, SolveReport> solve(
    const GeneralizedSylvesterProblem& pb, const SolveConfig& config) {
    const auto t0 = std::chrono::steady_clock::now();
    const Index n = pb.dim();

    SolveReport rep;
    rep.lyapunov = pb.lyapunov_symmetric();
    rep.rhs_norm = factor_product_norm(pb.C1(), pb.C2());

    auto finish = [&](LowRankFactorPair X) {
        rep.rank = X.cols();
        rep.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                .count();
        return std::make_pair(std::move(X), rep);
    };

    if (rep.rhs_norm == 0.0) {
        rep.converged = true;
        rep.relative_residual = 0.0;
        return finish(LowRankFactorPair::zero(n));
    }
    if (!pb.A().has_inverse() || (!rep.lyapunov && !pb.B().has_inverse()))
        throw ConfigError(
            "solve: A (and B) must support solves; apply an operator shift "
            "when a coefficient is singular");

    // Starting blocks. Every construction below puts the orth(C1)/orth(C2)
    // directions first, so width capping never drops the right-hand side.
    MatrixXd C1b, C2b;
    switch (config.blocks) {
        case StartingBlockMode::Commutator: {
            auto blocks = build_starting_blocks_commutator(pb, config.ell);
            C1b = std::move(blocks.first);
            C2b = std::move(blocks.second);
            break;
        }
        case StartingBlockMode::LowRank: {
            auto blocks = build_starting_blocks_lowrank(pb);
            C1b = std::move(blocks.first);
            C2b = std::move(blocks.second);
            break;
        }
        case StartingBlockMode::Plain:
            C1b = orth(pb.C1());
            C2b = orth(pb.C2());
            break;
        case StartingBlockMode::Explicit:
            if (config.explicit_C1.rows() != n || config.explicit_C2.rows() != n)
                throw ConfigError("solve: explicit starting blocks missing");
            C1b = orth(hstack(pb.C1(), config.explicit_C1));
            C2b = orth(hstack(pb.C2(), config.explicit_C2));
            break;
    }
    for (MatrixXd* blk : {&C1b, &C2b}) {
        if (blk->cols() > config.max_block_width) {
            rep.warnings.push_back(
                "starting block wider than the cap; truncated to " +
                std::to_string(config.max_block_width) + " columns");
            *blk = blk->leftCols(config.max_block_width).eval();
        }
    }

    const bool structured = config.blocks == StartingBlockMode::Commutator ||
                            config.blocks == StartingBlockMode::LowRank;
    const ResidualMode mode = config.residual.value_or(
        (rep.lyapunov || structured) ? ResidualMode::Cheap : ResidualMode::True);

    ExtendedKrylovBasis basisV(C1b, pb.A(), &rep.linear_solves_a);
    std::optional<ExtendedKrylovBasis> basisW;
    if (!rep.lyapunov)
        basisW.emplace(C2b, pb.B(), &rep.linear_solves_b);
    const ExtendedKrylovBasis* W = rep.lyapunov ? &basisV : &*basisW;

    const double abs_target =
        std::min(config.inner.galerkin_target, 1e-2 * config.tol) * rep.rhs_norm;

    ProjectedProblem pp;
    MatrixXd tau, hco, Z;
    bool converged = false;

    const auto nops = n_operators(pb);
    const auto mops = m_operators(pb);

    for (int k = 1; k <= config.max_iters; ++k) {
        rep.iterations = k;

        const auto extV = extend_side(pb.A(), nops, pb.C1(), basisV, pp.T,
                                      pp.G, pp.E1, pp.blocks_v);
        pp.blocks_v = basisV.blocks();
        tau = extV.tau;
        if (rep.lyapunov) {
            mirror_lyapunov(pp);
            hco = tau;
        } else {
            const auto extW = extend_side(pb.B(), mops, pb.C2(), *basisW, pp.H,
                                          pp.F, pp.E2, pp.blocks_w);
            pp.blocks_w = basisW->blocks();
            hco = extW.tau;
        }

        Z = solve_projected(pp, abs_target, config.inner, rep);

        ResidualSample smp;
        smp.iteration = k;
        smp.cheap = cheap_residual_norm(Z, tau, hco, basisV.last_block_cols(),
                                        W->last_block_cols());
        if (mode != ResidualMode::Cheap)
            smp.true_norm = true_residual_norm(pb, basisV, *W, Z);
        if (config.validate_galerkin && n <= 100)
            rep.max_galerkin_defect = std::max(
                rep.max_galerkin_defect, galerkin_defect(pb, basisV, *W, Z));
        rep.residual_history.push_back(smp);

        const double gate =
            mode == ResidualMode::Cheap ? smp.cheap : smp.true_norm;
        rep.relative_residual = gate / rep.rhs_norm;
        if (gate <= config.tol * rep.rhs_norm) {
            converged = true;
            break;
        }
        if (k == config.max_iters) break;

        try {
            basisV.expand(pb.A(), &rep.linear_solves_a);
            if (!rep.lyapunov) basisW->expand(pb.B(), &rep.linear_solves_b);
        } catch (const BreakdownError&) {
            rep.breakdown = true;
            break;
        }
    }

    rep.converged = converged;
    rep.memory_v = basisV.cols();
    rep.memory_w = rep.lyapunov ? 0 : basisW->cols();

    if (Z.size() == 0) return finish(LowRankFactorPair::zero(n));
    Eigen::BDCSVD<MatrixXd> svd(Z, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const VectorXd shalf = svd.singularValues().cwiseSqrt();
    const MatrixXd L = basisV.matrix() * (svd.matrixU() * shalf.asDiagonal());
    const MatrixXd R = W->matrix() * (svd.matrixV() * shalf.asDiagonal());
    return finish(truncate_factors(L, R, config.truncate_tol));
}

}  // namespace gsylv
