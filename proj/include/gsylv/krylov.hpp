// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gsylv/operators.hpp"
#include "gsylv/types.hpp"

namespace gsylv {

// ---------------------------------------------------------------------------
// Multivariate block Krylov space GK_d(N_1..N_m; U)
// ---------------------------------------------------------------------------

/// Orthonormal basis of span{ N_{i1} ... N_{is} U : 0 <= s <= d }. Products
/// are generated level by level from the surviving frontier and deduplicated
/// by rank-revealing orthogonalization with relative tolerance tol.
MatrixXd gk_basis(const std::vector<OperatorPtr>& ops, const MatrixXd& U,
                  int d, double tol = 1e-10);

/// Starting blocks spanning GK_l(N_1..N_m; C1) + GK_{l-1}(N_1..N_m; U) and
/// the mirror space with M_i, C2, Q. Requires commutator factors on every
/// perturbation term when l >= 1 and m > 0 (ConfigError otherwise).
std::pair<MatrixXd, MatrixXd> build_starting_blocks_commutator(
    const GeneralizedSylvesterProblem& pb, int ell);

/// Starting blocks orth(C1, U_1,...,U_m), orth(C2, Q_1,...,Q_m) for problems
/// whose N_i = U_i U~_i^T are supplied as LowRankOperator instances.
std::pair<MatrixXd, MatrixXd> build_starting_blocks_lowrank(
    const GeneralizedSylvesterProblem& pb);

// ---------------------------------------------------------------------------
// Extended Krylov block basis
// ---------------------------------------------------------------------------

/// Orthonormal block basis of EK_k(A, C). Each block keeps its polynomial
/// part (images under A) and inverse part (images under A^{-1}) separate so
/// that the two directions can deflate independently.
class ExtendedKrylovBasis {
  public:
    /// Block 1 = orth(C_bar, A^{-1} C_bar). Counts C_bar.cols() column solves
    /// into *solves. C_bar must have orthonormal columns.
    ExtendedKrylovBasis(const MatrixXd& C_bar, const LinearMatrixOperator& op,
                        long* solves);

    /// Appends block k+1 = orth of (A * poly part, A^{-1} * inverse part)
    /// against everything so far. Throws BreakdownError when the candidate
    /// block deflates completely.
    void expand(const LinearMatrixOperator& op, long* solves);

    const MatrixXd& matrix() const { return V_; }
    Index dim() const { return V_.rows(); }
    Index cols() const { return V_.cols(); }
    int blocks() const { return static_cast<int>(begin_.size()); }
    Index block_begin(int b) const { return begin_[static_cast<size_t>(b)]; }
    Index block_cols(int b) const {
        return poly_cols_[static_cast<size_t>(b)] + inv_cols_[static_cast<size_t>(b)];
    }
    Index last_block_cols() const { return block_cols(blocks() - 1); }
    Eigen::Ref<const MatrixXd> block(int b) const {
        return V_.middleCols(block_begin(b), block_cols(b));
    }

  private:
    MatrixXd V_;
    std::vector<Index> begin_;
    std::vector<Index> poly_cols_;
    std::vector<Index> inv_cols_;
};

// ---------------------------------------------------------------------------
// Projected problem
// ---------------------------------------------------------------------------

/// T = V^T A V, H = W^T B W, G_i = V^T N_i V, F_i = W^T M_i W, E1 = V^T C1,
/// E2 = W^T C2. Matrices for k blocks are leading principal submatrices of
/// the matrices for k+1 blocks.
struct ProjectedProblem {
    MatrixXd T;
    MatrixXd H;
    std::vector<MatrixXd> G;
    std::vector<MatrixXd> F;
    MatrixXd E1;
    MatrixXd E2;

    /// Number of basis blocks folded in per side.
    int blocks_v = 0;
    int blocks_w = 0;

    Index dim_v() const { return T.rows(); }
    Index dim_w() const { return H.rows(); }

    DenseCoefficients as_dense() const;
};

/// Builds (or incrementally extends, when `previous` is given) the projected
/// matrices for the current bases. Only the new block rows/columns are formed.
ProjectedProblem assemble_projected(const GeneralizedSylvesterProblem& pb,
                                    const ExtendedKrylovBasis& V,
                                    const ExtendedKrylovBasis& W,
                                    const ProjectedProblem* previous = nullptr);

struct SolvabilityCheck {
    bool solvable = false;
    /// Pencil numerically singular; max_ratio unreliable.
    bool indeterminate = false;
    double max_ratio = 0.0;
};

/// Largest |lambda| of (sum_i F_i (x) G_i) v = lambda (H (x) I + I (x) T) v.
/// Guarded to projected dimensions <= 80 per side.
SolvabilityCheck check_projected_solvability(const ProjectedProblem& pp);

/// sqrt(||tau * Z(last rows)||_F^2 + ||Z(last cols) * h^T||_F^2): the residual
/// norm from the Arnoldi-like coupling coefficients, at a cost independent
/// of n.
double cheap_residual_norm(const MatrixXd& Z, const MatrixXd& tau,
                           const MatrixXd& h, Index last_rows, Index last_cols);

// ---------------------------------------------------------------------------
// Solver configuration and report
// ---------------------------------------------------------------------------

enum class StartingBlockMode { Commutator, LowRank, Explicit, Plain };
enum class ResidualMode { Cheap, True, Both };

struct InnerSolverConfig {
    /// Cap on Neumann terms per projected solve.
    int ell_max = 200;
    /// Direct Kronecker fallback allowed while the projected dimension per
    /// side stays at or below this.
    Index kron_dim_cap = 80;
    /// Projected problems are solved to this fraction of ||C1 C2^T||_F
    /// (keeps the Galerkin defect at 1e-10 * ||C1 C2^T||_F with margin).
    double galerkin_target = 1e-11;
};

struct SolveConfig {
    double tol = 1e-6;
    /// Maximum number of iterations d.
    int max_iters = 50;
    StartingBlockMode blocks = StartingBlockMode::Commutator;
    /// GK depth for the commutator starting blocks.
    int ell = 1;
    /// Unset: cheap for Lyapunov-symmetric or structured starting blocks,
    /// true residual otherwise.
    std::optional<ResidualMode> residual;
    MatrixXd explicit_C1;
    MatrixXd explicit_C2;
    /// Starting blocks wider than this are truncated by rank-revealing QR
    /// (the C1/C2 directions are always retained).
    Index max_block_width = 20;
    /// Relative truncation applied to the returned factors.
    double truncate_tol = 1e-8;
    InnerSolverConfig inner;
    /// Compute ||V^T R_k W||_F each iteration (n <= 100 paths; test use).
    bool validate_galerkin = false;
};

struct ResidualSample {
    int iteration = 0;
    double cheap = std::numeric_limits<double>::quiet_NaN();
    double true_norm = std::numeric_limits<double>::quiet_NaN();
};

struct SolveReport {
    int iterations = 0;
    bool converged = false;
    bool breakdown = false;
    bool lyapunov = false;
    /// Stored length-n vectors per side (the W count is zero when a single
    /// basis serves both sides).
    Index memory_v = 0;
    Index memory_w = 0;
    /// Columns of the returned (truncated) factors.
    Index rank = 0;
    /// Columns to which A^{-1} (resp. B^{-1}) was applied, initial block
    /// included.
    long linear_solves_a = 0;
    long linear_solves_b = 0;
    double rhs_norm = 0.0;
    double relative_residual = std::numeric_limits<double>::quiet_NaN();
    std::vector<ResidualSample> residual_history;
    /// Projected solves where the Neumann inner solver diverged and a
    /// fallback engaged.
    int inner_fallbacks = 0;
    /// max ||V^T R_k W||_F seen (only when validate_galerkin).
    double max_galerkin_defect = 0.0;
    std::vector<std::string> warnings;
    double wall_seconds = 0.0;

    Index memory_total() const { return memory_v + memory_w; }
    long linear_solves_total() const { return linear_solves_a + linear_solves_b; }
};

/// Extended Krylov projection solve of A X + X B^T + sum N_i X M_i^T = C1 C2^T.
/// Returns truncated low-rank factors of X and the run report. Projected
/// problems are solved by the Neumann series; on divergence a direct
/// Kronecker solve (small dimensions) or a preconditioned iterative
/// refinement takes over.
std::pair<LowRankFactorPair, SolveReport> solve(
    const GeneralizedSylvesterProblem& pb, const SolveConfig& config = {});

}  // namespace gsylv
