// SPDX-License-Identifier: Apache-2.0
#include "gsylv/operators.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>
#include <Eigen/SparseLU>
#include <cmath>
#include <memory>

#include "gsylv/dense_kernels.hpp"
#include "gsylv/rng.hpp"

namespace gsylv {

namespace {

constexpr Index kToDenseGuard = 4096;

void check_to_dense(Index n) {
    if (n > kToDenseGuard)
        throw std::invalid_argument("to_dense: dimension too large to densify");
}

// Pivoted LU of a tridiagonal matrix (gttrf-style): row interchanges create a
// second superdiagonal of fill.
struct TridiagonalLU {
    VectorXd d, du, du2, dl;
    std::vector<bool> swapped;
    bool singular = true;

    static TridiagonalLU factor(const VectorXd& sub, const VectorXd& diag,
                                const VectorXd& super) {
        const Index n = diag.size();
        TridiagonalLU f;
        f.d = diag;
        f.du = super;
        f.dl = sub;
        f.du2 = VectorXd::Zero(std::max<Index>(n - 2, 0));
        f.swapped.assign(static_cast<size_t>(std::max<Index>(n - 1, 0)), false);
        for (Index i = 0; i + 1 < n; ++i) {
            if (std::abs(f.d[i]) >= std::abs(f.dl[i])) {
                if (f.d[i] != 0.0) {
                    const double fact = f.dl[i] / f.d[i];
                    f.dl[i] = fact;
                    f.d[i + 1] -= fact * f.du[i];
                }
            } else {
                const double fact = f.d[i] / f.dl[i];
                f.d[i] = f.dl[i];
                f.dl[i] = fact;
                const double temp = f.du[i];
                f.du[i] = f.d[i + 1];
                f.d[i + 1] = temp - fact * f.d[i + 1];
                if (i + 2 < n) {
                    f.du2[i] = f.du[i + 1];
                    f.du[i + 1] = -fact * f.du[i + 1];
                }
                f.swapped[static_cast<size_t>(i)] = true;
            }
        }
        const double maxp = n > 0 ? f.d.cwiseAbs().maxCoeff() : 0.0;
        f.singular =
            (maxp == 0.0) || (f.d.cwiseAbs().minCoeff() <= 1e-14 * maxp);
        return f;
    }

    void solve_inplace(MatrixXd& B) const {
        const Index n = d.size();
        Eigen::RowVectorXd temp;
        for (Index i = 0; i + 1 < n; ++i) {
            if (!swapped[static_cast<size_t>(i)]) {
                B.row(i + 1) -= dl[i] * B.row(i);
            } else {
                temp = B.row(i);
                B.row(i) = B.row(i + 1);
                B.row(i + 1) = temp - dl[i] * B.row(i + 1);
            }
        }
        B.row(n - 1) /= d[n - 1];
        if (n >= 2) B.row(n - 2) = (B.row(n - 2) - du[n - 2] * B.row(n - 1)) / d[n - 2];
        for (Index i = n - 3; i >= 0; --i)
            B.row(i) =
                (B.row(i) - du[i] * B.row(i + 1) - du2[i] * B.row(i + 2)) / d[i];
    }
};

MatrixXd tridiagonal_dense(const VectorXd& sub, const VectorXd& diag,
                           const VectorXd& super) {
    const Index n = diag.size();
    MatrixXd A = MatrixXd::Zero(n, n);
    A.diagonal() = diag;
    if (n > 1) {
        A.diagonal(1) = super;
        A.diagonal(-1) = sub;
    }
    return A;
}

class DenseOperator final : public LinearMatrixOperator {
  public:
    explicit DenseOperator(MatrixXd A)
        : A_(std::move(A)), lu_(A_), lut_(A_.transpose()) {
        if (A_.rows() != A_.cols())
            throw std::invalid_argument("dense operator: matrix must be square");
        invertible_ = lu_.rcond() > 1e-14;
    }

    Index dim() const override { return A_.rows(); }
    Structure structure() const override { return Structure::Dense; }
    MatrixXd apply(const Eigen::Ref<const MatrixXd>& X) const override {
        return A_ * X;
    }
    MatrixXd transpose_apply(const Eigen::Ref<const MatrixXd>& X) const override {
        return A_.transpose() * X;
    }
    bool has_inverse() const override { return invertible_; }
    MatrixXd inverse_apply(const Eigen::Ref<const MatrixXd>& X) const override {
        require_invertible();
        return lu_.solve(X);
    }
    MatrixXd inverse_transpose_apply(const Eigen::Ref<const MatrixXd>& X) const override {
        require_invertible();
        return lut_.solve(X);
    }
    MatrixXd to_dense() const override { return A_; }
    OperatorPtr shifted(double sigma) const override {
        return make_dense_operator(A_ + sigma * MatrixXd::Identity(dim(), dim()));
    }

  private:
    void require_invertible() const {
        if (!invertible_)
            throw UnsolvableError("dense operator: matrix is singular");
    }
    MatrixXd A_;
    Eigen::PartialPivLU<MatrixXd> lu_, lut_;
    bool invertible_ = false;
};

class TridiagonalOperator final : public LinearMatrixOperator {
  public:
    TridiagonalOperator(VectorXd sub, VectorXd diag, VectorXd super)
        : sub_(std::move(sub)), diag_(std::move(diag)), super_(std::move(super)) {
        const Index n = diag_.size();
        if (n < 1 || sub_.size() != n - 1 || super_.size() != n - 1)
            throw std::invalid_argument("tridiagonal operator: bad band lengths");
        lu_ = TridiagonalLU::factor(sub_, diag_, super_);
        lut_ = TridiagonalLU::factor(super_, diag_, sub_);
    }

    Index dim() const override { return diag_.size(); }
    Structure structure() const override { return Structure::Tridiagonal; }

    MatrixXd apply(const Eigen::Ref<const MatrixXd>& X) const override {
        return band_apply(sub_, super_, X);
    }
    MatrixXd transpose_apply(const Eigen::Ref<const MatrixXd>& X) const override {
        return band_apply(super_, sub_, X);
    }
    bool has_inverse() const override { return !lu_.singular && !lut_.singular; }
    MatrixXd inverse_apply(const Eigen::Ref<const MatrixXd>& X) const override {
        require_invertible();
        MatrixXd Y = X;
        lu_.solve_inplace(Y);
        return Y;
    }
    MatrixXd inverse_transpose_apply(const Eigen::Ref<const MatrixXd>& X) const override {
        require_invertible();
        MatrixXd Y = X;
        lut_.solve_inplace(Y);
        return Y;
    }
    MatrixXd to_dense() const override {
        check_to_dense(dim());
        return tridiagonal_dense(sub_, diag_, super_);
    }
    OperatorPtr shifted(double sigma) const override {
        return make_tridiagonal_operator(sub_, diag_.array() + sigma, super_);
    }

    const VectorXd& sub() const { return sub_; }
    const VectorXd& diag() const { return diag_; }
    const VectorXd& super() const { return super_; }

  private:
    MatrixXd band_apply(const VectorXd& lower, const VectorXd& upper,
                        const Eigen::Ref<const MatrixXd>& X) const {
        const Index n = dim();
        MatrixXd Y = diag_.asDiagonal() * X;
        if (n > 1) {
            Y.topRows(n - 1) += upper.asDiagonal() * X.bottomRows(n - 1);
            Y.bottomRows(n - 1) += lower.asDiagonal() * X.topRows(n - 1);
        }
        return Y;
    }
    void require_invertible() const {
        if (!has_inverse())
            throw UnsolvableError("tridiagonal operator: matrix is singular");
    }

    VectorXd sub_, diag_, super_;
    TridiagonalLU lu_, lut_;
};

class TridiagPlusLowRankOperator final : public LinearMatrixOperator {
  public:
    TridiagPlusLowRankOperator(VectorXd sub, VectorXd diag, VectorXd super,
                               MatrixXd P, MatrixXd Q)
        : T_(std::move(sub), std::move(diag), std::move(super)),
          P_(std::move(P)),
          Q_(std::move(Q)) {
        const Index n = T_.dim();
        if (P_.rows() != n || Q_.rows() != n || P_.cols() != Q_.cols())
            throw std::invalid_argument(
                "tridiagonal-plus-low-rank operator: correction shape mismatch");
        const Index k = P_.cols();
        if (T_.has_inverse() && k > 0) {
            W_ = T_.inverse_apply(P_);
            Wt_ = T_.inverse_transpose_apply(Q_);
            const MatrixXd cap =
                MatrixXd::Identity(k, k) + Q_.transpose() * W_;
            cap_lu_ = Eigen::PartialPivLU<MatrixXd>(cap);
            capt_lu_ = Eigen::PartialPivLU<MatrixXd>(cap.transpose());
            invertible_ = cap_lu_.rcond() > 1e-14;
        } else if (T_.has_inverse()) {
            invertible_ = true;
        }
    }

    Index dim() const override { return T_.dim(); }
    Structure structure() const override {
        return Structure::TridiagonalPlusLowRank;
    }
    MatrixXd apply(const Eigen::Ref<const MatrixXd>& X) const override {
        MatrixXd Y = T_.apply(X);
        if (P_.cols() > 0) Y.noalias() += P_ * (Q_.transpose() * X);
        return Y;
    }
    MatrixXd transpose_apply(const Eigen::Ref<const MatrixXd>& X) const override {
        MatrixXd Y = T_.transpose_apply(X);
        if (P_.cols() > 0) Y.noalias() += Q_ * (P_.transpose() * X);
        return Y;
    }
    bool has_inverse() const override { return invertible_; }
    MatrixXd inverse_apply(const Eigen::Ref<const MatrixXd>& X) const override {
        require_invertible();
        MatrixXd Y = T_.inverse_apply(X);
        if (P_.cols() > 0)
            Y.noalias() -= W_ * cap_lu_.solve(Q_.transpose() * Y);
        return Y;
    }
    MatrixXd inverse_transpose_apply(const Eigen::Ref<const MatrixXd>& X) const override {
        require_invertible();
        MatrixXd Y = T_.inverse_transpose_apply(X);
        if (P_.cols() > 0)
            Y.noalias() -= Wt_ * capt_lu_.solve(P_.transpose() * Y);
        return Y;
    }
    MatrixXd to_dense() const override {
        check_to_dense(dim());
        return T_.to_dense() + P_ * Q_.transpose();
    }
    OperatorPtr shifted(double sigma) const override {
        return make_tridiagonal_plus_lowrank_operator(
            T_.sub(), T_.diag().array() + sigma, T_.super(), P_, Q_);
    }

  private:
    void require_invertible() const {
        if (!invertible_)
            throw UnsolvableError(
                "tridiagonal-plus-low-rank operator: matrix is singular");
    }
    TridiagonalOperator T_;
    MatrixXd P_, Q_;
    MatrixXd W_, Wt_;
    Eigen::PartialPivLU<MatrixXd> cap_lu_, capt_lu_;
    bool invertible_ = false;
};

class DiagonalOperator final : public LinearMatrixOperator {
  public:
    explicit DiagonalOperator(VectorXd d) : d_(std::move(d)) {
        const double maxd = d_.size() > 0 ? d_.cwiseAbs().maxCoeff() : 0.0;
        invertible_ =
            maxd > 0.0 && d_.cwiseAbs().minCoeff() > 1e-14 * maxd;
    }

    Index dim() const override { return d_.size(); }
    Structure structure() const override { return Structure::DiagonalBlock; }
    MatrixXd apply(const Eigen::Ref<const MatrixXd>& X) const override {
        return d_.asDiagonal() * X;
    }
    MatrixXd transpose_apply(const Eigen::Ref<const MatrixXd>& X) const override {
        return d_.asDiagonal() * X;
    }
    bool has_inverse() const override { return invertible_; }
    MatrixXd inverse_apply(const Eigen::Ref<const MatrixXd>& X) const override {
        require_invertible();
        return d_.cwiseInverse().asDiagonal() * X;
    }
    MatrixXd inverse_transpose_apply(const Eigen::Ref<const MatrixXd>& X) const override {
        return inverse_apply(X);
    }
    MatrixXd to_dense() const override {
        check_to_dense(dim());
        return MatrixXd(d_.asDiagonal());
    }
    OperatorPtr shifted(double sigma) const override {
        return make_diagonal_operator(d_.array() + sigma);
    }

  private:
    void require_invertible() const {
        if (!invertible_)
            throw UnsolvableError("diagonal operator: zero diagonal entry");
    }
    VectorXd d_;
    bool invertible_ = false;
};

class SparseOperator final : public LinearMatrixOperator {
  public:
    SparseOperator(Eigen::SparseMatrix<double> S, bool factorize)
        : S_(std::move(S)), St_(S_.transpose()) {
        if (S_.rows() != S_.cols())
            throw std::invalid_argument("sparse operator: matrix must be square");
        S_.makeCompressed();
        St_.makeCompressed();
        if (factorize) {
            lu_ = std::make_unique<Eigen::SparseLU<Eigen::SparseMatrix<double>>>();
            lu_->compute(S_);
            lut_ = std::make_unique<Eigen::SparseLU<Eigen::SparseMatrix<double>>>();
            lut_->compute(St_);
            invertible_ =
                lu_->info() == Eigen::Success && lut_->info() == Eigen::Success;
        }
    }

    Index dim() const override { return S_.rows(); }
    Structure structure() const override { return Structure::GeneralSparse; }
    MatrixXd apply(const Eigen::Ref<const MatrixXd>& X) const override {
        return S_ * X;
    }
    MatrixXd transpose_apply(const Eigen::Ref<const MatrixXd>& X) const override {
        return St_ * X;
    }
    bool has_inverse() const override { return invertible_; }
    MatrixXd inverse_apply(const Eigen::Ref<const MatrixXd>& X) const override {
        require_invertible();
        return lu_->solve(X);
    }
    MatrixXd inverse_transpose_apply(const Eigen::Ref<const MatrixXd>& X) const override {
        require_invertible();
        return lut_->solve(X);
    }
    MatrixXd to_dense() const override {
        check_to_dense(dim());
        return MatrixXd(S_);
    }
    OperatorPtr shifted(double sigma) const override {
        Eigen::SparseMatrix<double> I(dim(), dim());
        I.setIdentity();
        return make_sparse_operator(S_ + sigma * I, lu_ != nullptr);
    }

  private:
    void require_invertible() const {
        if (!invertible_)
            throw UnsolvableError(
                "sparse operator: singular or not factorized for solves");
    }
    Eigen::SparseMatrix<double> S_, St_;
    std::unique_ptr<Eigen::SparseLU<Eigen::SparseMatrix<double>>> lu_, lut_;
    bool invertible_ = false;
};

}  // namespace

// ---------------------------------------------------------------------------
// Base class defaults and factories
// ---------------------------------------------------------------------------

MatrixXd LinearMatrixOperator::inverse_apply(const Eigen::Ref<const MatrixXd>&) const {
    throw UnsolvableError("operator structure does not support solves");
}

MatrixXd LinearMatrixOperator::inverse_transpose_apply(
    const Eigen::Ref<const MatrixXd>&) const {
    throw UnsolvableError("operator structure does not support solves");
}

OperatorPtr LinearMatrixOperator::shifted(double) const {
    throw ConfigError("operator structure does not support shifting");
}

LowRankOperator::LowRankOperator(MatrixXd U, MatrixXd V)
    : U_(std::move(U)), V_(std::move(V)) {
    if (U_.rows() != V_.rows() || U_.cols() != V_.cols())
        throw std::invalid_argument("low-rank operator: factor shape mismatch");
}

MatrixXd LowRankOperator::apply(const Eigen::Ref<const MatrixXd>& X) const {
    return U_ * (V_.transpose() * X);
}

MatrixXd LowRankOperator::transpose_apply(const Eigen::Ref<const MatrixXd>& X) const {
    return V_ * (U_.transpose() * X);
}

MatrixXd LowRankOperator::to_dense() const {
    check_to_dense(dim());
    return U_ * V_.transpose();
}

OperatorPtr make_dense_operator(MatrixXd A) {
    return std::make_shared<DenseOperator>(std::move(A));
}

OperatorPtr make_tridiagonal_operator(VectorXd sub, VectorXd diag, VectorXd super) {
    return std::make_shared<TridiagonalOperator>(std::move(sub), std::move(diag),
                                                 std::move(super));
}

OperatorPtr make_tridiagonal_plus_lowrank_operator(VectorXd sub, VectorXd diag,
                                                   VectorXd super, MatrixXd P,
                                                   MatrixXd Q) {
    return std::make_shared<TridiagPlusLowRankOperator>(
        std::move(sub), std::move(diag), std::move(super), std::move(P),
        std::move(Q));
}

OperatorPtr make_diagonal_operator(VectorXd d) {
    return std::make_shared<DiagonalOperator>(std::move(d));
}

OperatorPtr make_sparse_operator(Eigen::SparseMatrix<double> S, bool factorize) {
    return std::make_shared<SparseOperator>(std::move(S), factorize);
}

std::shared_ptr<const LowRankOperator> make_low_rank_operator(MatrixXd U,
                                                              MatrixXd V) {
    return std::make_shared<LowRankOperator>(std::move(U), std::move(V));
}

// ---------------------------------------------------------------------------
// Problem
// ---------------------------------------------------------------------------

GeneralizedSylvesterProblem::GeneralizedSylvesterProblem(
    OperatorPtr A, OperatorPtr B, std::vector<PerturbationTerm> terms,
    MatrixXd C1, MatrixXd C2)
    : a_(std::move(A)),
      b_(std::move(B)),
      terms_(std::move(terms)),
      c1_(std::move(C1)),
      c2_(std::move(C2)) {
    if (!a_ || !b_) throw std::invalid_argument("problem: null operator");
    const Index n = a_->dim();
    if (b_->dim() != n) throw std::invalid_argument("problem: A, B dimension mismatch");
    if (c1_.rows() != n || c2_.rows() != n || c1_.cols() != c2_.cols() ||
        c1_.cols() < 1)
        throw std::invalid_argument("problem: right-hand side shape");
    for (const auto& t : terms_) {
        if (!t.N || !t.M || t.N->dim() != n || t.M->dim() != n)
            throw std::invalid_argument("problem: perturbation term dimension");
        if (t.comm_a && (t.comm_a->U.rows() != n || t.comm_a->Ut.rows() != n ||
                         t.comm_a->U.cols() != t.comm_a->Ut.cols()))
            throw std::invalid_argument("problem: commutator factor shape");
        if (t.comm_b && (t.comm_b->U.rows() != n || t.comm_b->Ut.rows() != n ||
                         t.comm_b->U.cols() != t.comm_b->Ut.cols()))
            throw std::invalid_argument("problem: commutator factor shape");
    }
}

bool GeneralizedSylvesterProblem::lyapunov_symmetric() const {
    if (a_ != b_) return false;
    for (const auto& t : terms_)
        if (t.N != t.M) return false;
    return c1_.rows() == c2_.rows() && c1_.cols() == c2_.cols() && c1_ == c2_;
}

DenseCoefficients GeneralizedSylvesterProblem::densify() const {
    if (dim() > kDenseLimit)
        throw std::invalid_argument("densify: dimension above dense limit");
    DenseCoefficients co;
    co.A = a_->to_dense();
    co.B = b_->to_dense();
    for (const auto& t : terms_) {
        co.N.push_back(t.N->to_dense());
        co.M.push_back(t.M->to_dense());
    }
    co.C1 = c1_;
    co.C2 = c2_;
    return co;
}

void GeneralizedSylvesterProblem::validate_commutators(double tol, int probes,
                                                       std::uint64_t seed) const {
    const Index n = dim();
    auto check_pair = [&](const LinearMatrixOperator& P,
                          const LinearMatrixOperator& N,
                          const CommutatorFactors& f, const char* side) {
        if (n <= kDenseLimit) {
            const MatrixXd Pd = P.to_dense(), Nd = N.to_dense();
            const MatrixXd D = Pd * Nd - Nd * Pd;
            const double scale = std::max(Pd.norm() * Nd.norm(), 1e-300);
            if ((D - f.U * f.Ut.transpose()).norm() > tol * scale)
                throw ConfigError(std::string("commutator factors for ") + side +
                                  " do not reproduce the dense commutator");
        } else {
            GaussianRng rng(seed);
            for (int t = 0; t < probes; ++t) {
                const VectorXd z = rng.unit_vector(n);
                const VectorXd lhs = P.apply(N.apply(z)) - N.apply(P.apply(z));
                const VectorXd rhs = f.U * (f.Ut.transpose() * z);
                const double scale =
                    std::max({lhs.norm(), rhs.norm(), 1e-300});
                if ((lhs - rhs).norm() > 1e3 * tol * scale)
                    throw ConfigError(std::string("commutator factors for ") +
                                      side + " fail the probing check");
            }
        }
    };
    for (const auto& t : terms_) {
        if (t.comm_a) check_pair(*a_, *t.N, *t.comm_a, "[A,N]");
        if (t.comm_b) check_pair(*b_, *t.M, *t.comm_b, "[B,M]");
    }
}

// ---------------------------------------------------------------------------
// Factor-pair operations
// ---------------------------------------------------------------------------

LowRankFactorPair apply_L(const GeneralizedSylvesterProblem& pb,
                          const LowRankFactorPair& X) {
    const Index n = pb.dim();
    const Index k = X.cols();
    if (k == 0) return LowRankFactorPair::zero(n);
    MatrixXd L(n, 2 * k), R(n, 2 * k);
    L.leftCols(k) = pb.A().apply(X.L);
    L.rightCols(k) = X.L;
    R.leftCols(k) = X.R;
    R.rightCols(k) = pb.B().apply(X.R);
    return LowRankFactorPair(std::move(L), std::move(R));
}

LowRankFactorPair apply_Pi(const GeneralizedSylvesterProblem& pb,
                           const LowRankFactorPair& X) {
    const Index n = pb.dim();
    const Index k = X.cols();
    const int m = pb.num_terms();
    if (k == 0 || m == 0) return LowRankFactorPair::zero(n);
    MatrixXd L(n, m * k), R(n, m * k);
    for (int i = 0; i < m; ++i) {
        L.middleCols(i * k, k) = pb.terms()[static_cast<size_t>(i)].N->apply(X.L);
        R.middleCols(i * k, k) = pb.terms()[static_cast<size_t>(i)].M->apply(X.R);
    }
    return LowRankFactorPair(std::move(L), std::move(R));
}

CommutatorFactors commutator_factor(const LinearMatrixOperator& A,
                                    const LinearMatrixOperator& N, double tol,
                                    Index max_rank) {
    const Index n = A.dim();
    if (N.dim() != n)
        throw std::invalid_argument("commutator_factor: dimension mismatch");

    LowRankFactorPair compressed;
    if (const auto* lr = dynamic_cast<const LowRankOperator*>(&N)) {
        // [A, U V^T] = (A U) V^T - U (A^T V)^T at any n
        const Index k = lr->left().cols();
        MatrixXd Uc(n, 2 * k), Vc(n, 2 * k);
        Uc.leftCols(k) = A.apply(lr->left());
        Uc.rightCols(k) = lr->left();
        Vc.leftCols(k) = lr->right();
        Vc.rightCols(k) = -A.transpose_apply(lr->right());
        compressed = truncate_factors(Uc, Vc, tol);
    } else if (n <= kDenseLimit) {
        const MatrixXd Ad = A.to_dense(), Nd = N.to_dense();
        const MatrixXd D = Ad * Nd - Nd * Ad;
        Eigen::BDCSVD<MatrixXd> svd(D, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const VectorXd& sv = svd.singularValues();
        const double total2 = sv.squaredNorm();
        Index s = sv.size();
        if (total2 == 0.0) {
            s = 0;
        } else {
            const double budget = tol * tol * total2;
            double tail = 0.0;
            while (s > 0 && tail + sv[s - 1] * sv[s - 1] <= budget) {
                tail += sv[s - 1] * sv[s - 1];
                --s;
            }
        }
        const VectorXd shalf = sv.head(s).cwiseSqrt();
        compressed =
            LowRankFactorPair(svd.matrixU().leftCols(s) * shalf.asDiagonal(),
                              svd.matrixV().leftCols(s) * shalf.asDiagonal());
    } else {
        throw std::invalid_argument(
            "commutator_factor: no dense path at this dimension and N is not "
            "low-rank structured");
    }

    if (max_rank >= 0 && compressed.cols() > max_rank)
        throw NotLowRankError("commutator_factor: numerical rank exceeds cap");
    return CommutatorFactors{std::move(compressed.L), std::move(compressed.R)};
}

LowRankFactorPair residual_factors(const GeneralizedSylvesterProblem& pb,
                                   const LowRankFactorPair& X) {
    const Index n = pb.dim();
    const Index k = X.cols();
    const int m = pb.num_terms();
    const Index r = pb.rhs_cols();
    MatrixXd P(n, k * (2 + m) + r), S(n, k * (2 + m) + r);
    Index c = 0;
    if (k > 0) {
        P.middleCols(c, k) = pb.A().apply(X.L);
        S.middleCols(c, k) = X.R;
        c += k;
        P.middleCols(c, k) = X.L;
        S.middleCols(c, k) = pb.B().apply(X.R);
        c += k;
        for (int i = 0; i < m; ++i) {
            P.middleCols(c, k) = pb.terms()[static_cast<size_t>(i)].N->apply(X.L);
            S.middleCols(c, k) = pb.terms()[static_cast<size_t>(i)].M->apply(X.R);
            c += k;
        }
    }
    P.middleCols(c, r) = pb.C1();
    S.middleCols(c, r) = -pb.C2();
    c += r;
    return LowRankFactorPair(P.leftCols(c), S.leftCols(c));
}

double residual_norm(const GeneralizedSylvesterProblem& pb,
                     const LowRankFactorPair& X) {
    return factor_product_norm(residual_factors(pb, X));
}

}  // namespace gsylv
