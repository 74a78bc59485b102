// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "gsylv/types.hpp"

namespace gsylv {

enum class Structure {
    Dense,
    Tridiagonal,
    TridiagonalPlusLowRank,
    LowRank,
    DiagonalBlock,
    GeneralSparse,
};

// ---------------------------------------------------------------------------
// Structured matrix-operator abstraction
// ---------------------------------------------------------------------------

/// An n x n matrix exposed through block products and block solves. Operators
/// are immutable after construction; factorizations needed for the inverse
/// actions are built once in the constructor and shared across threads.
class LinearMatrixOperator {
  public:
    virtual ~LinearMatrixOperator() = default;

    virtual Index dim() const = 0;
    virtual Structure structure() const = 0;

    /// A * X for an n x b block X.
    virtual MatrixXd apply(const Eigen::Ref<const MatrixXd>& X) const = 0;
    /// A^T * X.
    virtual MatrixXd transpose_apply(const Eigen::Ref<const MatrixXd>& X) const = 0;

    virtual bool has_inverse() const { return false; }
    /// A^{-1} * X; throws UnsolvableError if the operator is singular or the
    /// structure does not support solves.
    virtual MatrixXd inverse_apply(const Eigen::Ref<const MatrixXd>& X) const;
    /// A^{-T} * X.
    virtual MatrixXd inverse_transpose_apply(const Eigen::Ref<const MatrixXd>& X) const;

    /// Dense n x n image; guarded against accidental use at large n.
    virtual MatrixXd to_dense() const = 0;

    /// A + sigma * I with the same structure class when possible.
    virtual std::shared_ptr<const LinearMatrixOperator> shifted(double sigma) const;
};

using OperatorPtr = std::shared_ptr<const LinearMatrixOperator>;

OperatorPtr make_dense_operator(MatrixXd A);
/// Tridiagonal with sub/super diagonals of length n-1; block solves reuse a
/// pivoted tridiagonal LU built at construction.
OperatorPtr make_tridiagonal_operator(VectorXd sub, VectorXd diag, VectorXd super);
/// T + P * Q^T; solves use a Sherman-Morrison-Woodbury correction around the
/// tridiagonal solve.
OperatorPtr make_tridiagonal_plus_lowrank_operator(VectorXd sub, VectorXd diag,
                                                   VectorXd super, MatrixXd P,
                                                   MatrixXd Q);
OperatorPtr make_diagonal_operator(VectorXd d);
OperatorPtr make_sparse_operator(Eigen::SparseMatrix<double> S,
                                 bool factorize = true);

/// U * V^T held in factored form (never inverted).
class LowRankOperator;
std::shared_ptr<const LowRankOperator> make_low_rank_operator(MatrixXd U, MatrixXd V);

class LowRankOperator final : public LinearMatrixOperator {
  public:
    LowRankOperator(MatrixXd U, MatrixXd V);

    Index dim() const override { return U_.rows(); }
    Structure structure() const override { return Structure::LowRank; }
    MatrixXd apply(const Eigen::Ref<const MatrixXd>& X) const override;
    MatrixXd transpose_apply(const Eigen::Ref<const MatrixXd>& X) const override;
    MatrixXd to_dense() const override;

    const MatrixXd& left() const { return U_; }
    const MatrixXd& right() const { return V_; }

  private:
    MatrixXd U_, V_;
};

// ---------------------------------------------------------------------------
// Problem definition
// ---------------------------------------------------------------------------

/// Factors of a commutator: [A, N] = U * Ut^T.
struct CommutatorFactors {
    MatrixXd U;
    MatrixXd Ut;

    Index rank_bound() const { return U.cols(); }
};

struct PerturbationTerm {
    OperatorPtr N;
    OperatorPtr M;
    /// [A, N] factors when known in closed form.
    std::optional<CommutatorFactors> comm_a;
    /// [B, M] factors when known in closed form.
    std::optional<CommutatorFactors> comm_b;
};

/// A * X + X * B^T + sum_i N_i X M_i^T = C1 * C2^T.
class GeneralizedSylvesterProblem {
  public:
    GeneralizedSylvesterProblem(OperatorPtr A, OperatorPtr B,
                                std::vector<PerturbationTerm> terms,
                                MatrixXd C1, MatrixXd C2);

    Index dim() const { return a_->dim(); }
    int num_terms() const { return static_cast<int>(terms_.size()); }
    Index rhs_cols() const { return c1_.cols(); }

    const LinearMatrixOperator& A() const { return *a_; }
    const LinearMatrixOperator& B() const { return *b_; }
    const OperatorPtr& A_ptr() const { return a_; }
    const OperatorPtr& B_ptr() const { return b_; }
    const std::vector<PerturbationTerm>& terms() const { return terms_; }
    const MatrixXd& C1() const { return c1_; }
    const MatrixXd& C2() const { return c2_; }

    /// True when B aliases A, every M_i aliases N_i and C2 equals C1; the
    /// Krylov solver then builds a single basis.
    bool lyapunov_symmetric() const;

    /// Dense coefficient bundle; requires dim() <= kDenseLimit.
    DenseCoefficients densify() const;

    /// Checks every attached commutator factor pair: dense comparison at
    /// n <= kDenseLimit, random probing vectors otherwise. Throws ConfigError
    /// on violation.
    void validate_commutators(double tol = 1e-10, int probes = 5,
                              std::uint64_t seed = 7) const;

  private:
    OperatorPtr a_;
    OperatorPtr b_;
    std::vector<PerturbationTerm> terms_;
    MatrixXd c1_, c2_;
};

// ---------------------------------------------------------------------------
// Operator-level operations on factor pairs
// ---------------------------------------------------------------------------

/// Factors of L(X) = A X + X B^T: ((A L, L), (R, B R)); width doubles.
LowRankFactorPair apply_L(const GeneralizedSylvesterProblem& pb,
                          const LowRankFactorPair& X);

/// Factors of Pi(X) = sum_i N_i X M_i^T: ((N_1 L,...), (M_1 R,...)).
LowRankFactorPair apply_Pi(const GeneralizedSylvesterProblem& pb,
                           const LowRankFactorPair& X);

/// Rank-revealing factorization of A N - N A. Dense path for n <= kDenseLimit;
/// a closed form is used when N is a LowRankOperator. Throws NotLowRankError
/// when the numerical rank exceeds max_rank (max_rank < 0 disables the cap).
CommutatorFactors commutator_factor(const LinearMatrixOperator& A,
                                    const LinearMatrixOperator& N, double tol,
                                    Index max_rank = -1);

/// Factors (P, S) with P S^T = A X + X B^T + sum N_i X M_i^T - C1 C2^T.
LowRankFactorPair residual_factors(const GeneralizedSylvesterProblem& pb,
                                   const LowRankFactorPair& X);

/// ||residual||_F evaluated through thin QRs of the residual factors.
double residual_norm(const GeneralizedSylvesterProblem& pb,
                     const LowRankFactorPair& X);

struct SpectralRadiusEstimate {
    double rho = 0.0;
    bool converged = false;
    int iterations = 0;
};

/// Power iteration on X -> L^{-1}(Pi(X)). Dense Schur-based path for
/// n <= kDenseLimit; factored path (inner extended Krylov Sylvester solves
/// with truncation) otherwise. Diagnostic only.
SpectralRadiusEstimate estimate_spectral_radius(
    const GeneralizedSylvesterProblem& pb, int max_iters = 100,
    double tol = 1e-6, std::uint64_t seed = 11);

}  // namespace gsylv
