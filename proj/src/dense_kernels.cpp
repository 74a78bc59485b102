// SPDX-License-Identifier: Apache-2.0
#include "gsylv/dense_kernels.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <cmath>
#include <complex>
#include <vector>

#include "gsylv/operators.hpp"

namespace gsylv {

namespace {

// Diagonal block partition of a quasi upper triangular matrix: a nonzero
// subdiagonal entry marks a 2x2 block.
std::vector<std::pair<Index, Index>> diagonal_blocks(const MatrixXd& U) {
    std::vector<std::pair<Index, Index>> blocks;
    const Index n = U.rows();
    Index i = 0;
    while (i < n) {
        if (i + 1 < n && U(i + 1, i) != 0.0) {
            blocks.emplace_back(i, 2);
            i += 2;
        } else {
            blocks.emplace_back(i, 1);
            i += 1;
        }
    }
    return blocks;
}

std::vector<std::complex<double>> block_eigenvalues(
    const MatrixXd& U, const std::vector<std::pair<Index, Index>>& blocks) {
    std::vector<std::complex<double>> ev;
    for (const auto& [i0, sz] : blocks) {
        if (sz == 1) {
            ev.emplace_back(U(i0, i0), 0.0);
        } else {
            const double tr = U(i0, i0) + U(i0 + 1, i0 + 1);
            const double det = U(i0, i0) * U(i0 + 1, i0 + 1) -
                               U(i0, i0 + 1) * U(i0 + 1, i0);
            const double disc = 0.25 * tr * tr - det;
            if (disc >= 0.0) {
                const double s = std::sqrt(disc);
                ev.emplace_back(0.5 * tr + s, 0.0);
                ev.emplace_back(0.5 * tr - s, 0.0);
            } else {
                const double s = std::sqrt(-disc);
                ev.emplace_back(0.5 * tr, s);
                ev.emplace_back(0.5 * tr, -s);
            }
        }
    }
    return ev;
}

Eigen::Map<const VectorXd> as_vector(const MatrixXd& M) {
    return Eigen::Map<const VectorXd>(M.data(), M.size());
}

void add_kron_inplace(MatrixXd& K, const MatrixXd& X, const MatrixXd& Y) {
    const Index p = Y.rows(), q = Y.cols();
    for (Index j = 0; j < X.cols(); ++j)
        for (Index i = 0; i < X.rows(); ++i)
            if (X(i, j) != 0.0) K.block(i * p, j * q, p, q) += X(i, j) * Y;
}

}  // namespace

double factor_product_norm(const MatrixXd& L, const MatrixXd& R) {
    if (L.cols() == 0) return 0.0;
    const Index tl = std::min(L.rows(), L.cols());
    const Index tr = std::min(R.rows(), R.cols());
    Eigen::HouseholderQR<MatrixXd> ql(L), qr(R);
    const MatrixXd RL =
        ql.matrixQR().topRows(tl).triangularView<Eigen::Upper>();
    const MatrixXd RR =
        qr.matrixQR().topRows(tr).triangularView<Eigen::Upper>();
    return (RL * RR.transpose()).norm();
}

double factor_product_norm(const LowRankFactorPair& f) {
    return factor_product_norm(f.L, f.R);
}

VectorXd SchurForm::eigenvalue_real_parts() const {
    const auto blocks = diagonal_blocks(U);
    const auto ev = block_eigenvalues(U, blocks);
    VectorXd re(U.rows());
    for (Index i = 0; i < static_cast<Index>(ev.size()); ++i)
        re[i] = ev[static_cast<size_t>(i)].real();
    return re;
}

SchurForm real_schur(const MatrixXd& A) {
    if (A.rows() != A.cols())
        throw std::invalid_argument("real_schur: matrix must be square");
    if (!A.allFinite())
        throw std::invalid_argument("real_schur: matrix has non-finite entries");
    if (A.rows() == 0) return {MatrixXd(0, 0), MatrixXd(0, 0)};
    Eigen::RealSchur<MatrixXd> schur(A);
    if (schur.info() != Eigen::Success)
        throw FactorizationError("real_schur: QR iteration did not converge");
    return {schur.matrixU(), schur.matrixT()};
}

MatrixXd solve_triangular_sylvester(const MatrixXd& U_A, const MatrixXd& U_B,
                                    const MatrixXd& C) {
    const Index p = U_A.rows(), q = U_B.rows();
    if (U_A.cols() != p || U_B.cols() != q || C.rows() != p || C.cols() != q)
        throw std::invalid_argument("solve_triangular_sylvester: shape mismatch");
    if (p == 0 || q == 0) return MatrixXd(p, q);

    const auto ablk = diagonal_blocks(U_A);
    const auto bblk = diagonal_blocks(U_B);
    const auto eva = block_eigenvalues(U_A, ablk);
    const auto evb = block_eigenvalues(U_B, bblk);
    const double overlap_tol = 1e-13 * (U_A.norm() + U_B.norm());
    for (const auto& la : eva)
        for (const auto& lb : evb)
            if (std::abs(la + lb) < overlap_tol)
                throw SpectrumOverlapError(
                    "solve_triangular_sylvester: eigenvalue pair sum below "
                    "overlap threshold");

    MatrixXd Y(p, q);
    MatrixXd Rhs = C;
    for (auto jb = static_cast<Index>(bblk.size()) - 1; jb >= 0; --jb) {
        const auto [j0, js] = bblk[static_cast<size_t>(jb)];
        const MatrixXd B2 = U_B.block(j0, j0, js, js);
        MatrixXd Rj = Rhs.middleCols(j0, js);
        for (auto ib = static_cast<Index>(ablk.size()) - 1; ib >= 0; --ib) {
            const auto [i0, is] = ablk[static_cast<size_t>(ib)];
            const MatrixXd A2 = U_A.block(i0, i0, is, is);
            MatrixXd small = MatrixXd::Zero(is * js, is * js);
            add_kron_inplace(small, MatrixXd::Identity(js, js), A2);
            add_kron_inplace(small, B2, MatrixXd::Identity(is, is));
            const MatrixXd Rij = Rj.middleRows(i0, is);
            Eigen::PartialPivLU<MatrixXd> lu(small);
            const VectorXd y = lu.solve(as_vector(Rij));
            if (!y.allFinite())
                throw SpectrumOverlapError(
                    "solve_triangular_sylvester: singular diagonal pivot");
            const Eigen::Map<const MatrixXd> Yij(y.data(), is, js);
            Y.block(i0, j0, is, js) = Yij;
            if (i0 > 0) Rj.topRows(i0) -= U_A.block(0, i0, i0, is) * Yij;
        }
        if (j0 > 0)
            Rhs.leftCols(j0) -=
                Y.middleCols(j0, js) * U_B.block(0, j0, j0, js).transpose();
    }
    return Y;
}

OrthResult orthonormalize_block(const MatrixXd& V_new, const MatrixXd& basis,
                                double tol_defl) {
    const Index n = V_new.rows();
    const Index b = V_new.cols();
    if (basis.cols() > 0 && basis.rows() != n)
        throw std::invalid_argument("orthonormalize_block: row mismatch");
    OrthResult out;
    out.coeffs = MatrixXd::Zero(basis.cols(), b);
    if (b == 0) {
        out.V = MatrixXd(n, 0);
        return out;
    }
    if (tol_defl < 0.0) tol_defl = 1e-10 * V_new.norm();

    MatrixXd W = V_new;
    if (basis.cols() > 0) {
        // two-pass block Gram-Schmidt
        for (int pass = 0; pass < 2; ++pass) {
            MatrixXd c = basis.transpose() * W;
            W.noalias() -= basis * c;
            out.coeffs += c;
        }
    }

    Eigen::ColPivHouseholderQR<MatrixXd> qr(W);
    const VectorXd rdiag = qr.matrixQR().diagonal().cwiseAbs();
    Index rank = 0;
    while (rank < std::min(n, b) && rdiag[rank] > tol_defl) ++rank;
    if (rank == 0) {
        out.V = MatrixXd(n, 0);
        return out;
    }
    MatrixXd Q = qr.householderQ() * MatrixXd::Identity(n, rank);
    if (basis.cols() > 0) {
        // one clean-up pass keeps |basis^T V| at roundoff even for columns
        // that survived barely above tol_defl
        Q.noalias() -= basis * (basis.transpose() * Q);
        Eigen::HouseholderQR<MatrixXd> qr2(Q);
        Q = qr2.householderQ() * MatrixXd::Identity(n, rank);
    }
    out.V = std::move(Q);
    return out;
}

LowRankFactorPair truncate_factors(const MatrixXd& L, const MatrixXd& R,
                                   double tol_rel) {
    if (L.cols() != R.cols())
        throw std::invalid_argument("truncate_factors: unequal column counts");
    const Index n1 = L.rows(), n2 = R.rows(), pcols = L.cols();
    if (pcols == 0) return LowRankFactorPair(MatrixXd(n1, 0), MatrixXd(n2, 0));

    const Index tl = std::min(n1, pcols), tr = std::min(n2, pcols);
    Eigen::HouseholderQR<MatrixXd> ql(L), qr(R);
    const MatrixXd RL = ql.matrixQR().topRows(tl).triangularView<Eigen::Upper>();
    const MatrixXd RR = qr.matrixQR().topRows(tr).triangularView<Eigen::Upper>();
    Eigen::BDCSVD<MatrixXd> svd(RL * RR.transpose(),
                                Eigen::ComputeThinU | Eigen::ComputeThinV);
    const VectorXd& sv = svd.singularValues();

    const double total2 = sv.squaredNorm();
    Index k;
    if (total2 == 0.0) {
        k = 0;
    } else if (tol_rel > 0.0) {
        const double budget = tol_rel * tol_rel * total2;
        k = sv.size();
        double tail = 0.0;
        while (k > 0 && tail + sv[k - 1] * sv[k - 1] <= budget) {
            tail += sv[k - 1] * sv[k - 1];
            --k;
        }
    } else {
        const double thr = sv[0] * std::numeric_limits<double>::epsilon() *
                           static_cast<double>(std::max({n1, n2, pcols}));
        k = 0;
        while (k < sv.size() && sv[k] > thr) ++k;
    }
    if (k == 0) return LowRankFactorPair(MatrixXd(n1, 0), MatrixXd(n2, 0));

    const VectorXd shalf = sv.head(k).cwiseSqrt();
    const MatrixXd QL = ql.householderQ() * MatrixXd::Identity(n1, tl);
    const MatrixXd QR = qr.householderQ() * MatrixXd::Identity(n2, tr);
    return LowRankFactorPair(QL * (svd.matrixU().leftCols(k) * shalf.asDiagonal()),
                             QR * (svd.matrixV().leftCols(k) * shalf.asDiagonal()));
}

MatrixXd kron(const MatrixXd& A, const MatrixXd& B) {
    MatrixXd K = MatrixXd::Zero(A.rows() * B.rows(), A.cols() * B.cols());
    add_kron_inplace(K, A, B);
    return K;
}

MatrixXd kron_dense_solve(const DenseCoefficients& co) {
    const Index n = co.A.rows();
    if (co.B.rows() != n || co.A.cols() != n || co.B.cols() != n)
        throw std::invalid_argument("kron_dense_solve: A, B must be n x n");
    if (n > kDenseLimit)
        throw std::invalid_argument("kron_dense_solve: dimension above dense limit");
    if (co.C1.rows() != n || co.C2.rows() != n || co.C1.cols() != co.C2.cols())
        throw std::invalid_argument("kron_dense_solve: right-hand side shape");

    const MatrixXd CC = co.C1 * co.C2.transpose();
    const double rhs_norm = CC.norm();
    if (rhs_norm == 0.0) return MatrixXd::Zero(n, n);

    MatrixXd K = MatrixXd::Zero(n * n, n * n);
    add_kron_inplace(K, MatrixXd::Identity(n, n), co.A);
    add_kron_inplace(K, co.B, MatrixXd::Identity(n, n));
    for (size_t i = 0; i < co.N.size(); ++i) add_kron_inplace(K, co.M[i], co.N[i]);

    const Eigen::Map<const VectorXd> rhs(CC.data(), n * n);
    Eigen::PartialPivLU<MatrixXd> lu(K);
    VectorXd x = lu.solve(rhs);
    for (int refine = 0; refine < 2; ++refine) {
        const VectorXd r = rhs - K * x;
        if (!r.allFinite() || r.norm() <= 1e-13 * rhs_norm) break;
        x += lu.solve(r);
    }
    if (!x.allFinite() || (rhs - K * x).norm() > 1e-10 * rhs_norm)
        throw UnsolvableError("kron_dense_solve: Kronecker matrix is singular "
                              "or numerically unsolvable");
    return Eigen::Map<const MatrixXd>(x.data(), n, n);
}

MatrixXd kron_dense_solve(const GeneralizedSylvesterProblem& problem) {
    return kron_dense_solve(problem.densify());
}

}  // namespace gsylv
