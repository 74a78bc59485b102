// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "gsylv/dense_kernels.hpp"
#include "gsylv/types.hpp"

namespace gsylv {

// ---------------------------------------------------------------------------
// Simultaneous triangularization of a dense generalized Sylvester problem
// ---------------------------------------------------------------------------

/// Schur forms of A and B together with the transformed coefficients
/// C1~ = Q_A^T C1, C2~ = Q_B^T C2, N_i~ = Q_A^T N_i Q_A, M_i~ = Q_B^T M_i Q_B.
/// Built once and reused across all series terms.
struct TriangularizedProblem {
    SchurForm schur_a;
    SchurForm schur_b;
    MatrixXd C1t;
    MatrixXd C2t;
    std::vector<MatrixXd> Nt;
    std::vector<MatrixXd> Mt;

    static TriangularizedProblem from(const DenseCoefficients& co);

    /// Solves U_A Y + Y U_B^T = rhs in the triangular coordinates.
    MatrixXd solve_sylvester(const MatrixXd& rhs) const;

    /// sum_i N_i~ Y M_i~^T (the right-hand side driving the next term, and
    /// the matrix whose norm is the exact residual of the current sum).
    MatrixXd perturbation_apply(const MatrixXd& Y) const;

    /// Maps a triangular-coordinate solution back: X = Q_A X~ Q_B^T.
    MatrixXd back_transform(const MatrixXd& Xt) const;
};

// ---------------------------------------------------------------------------
// Neumann series solver
// ---------------------------------------------------------------------------

struct NeumannResult {
    MatrixXd X;
    int terms_used = 0;
    /// ||R^(l)||_F for l = 0, 1, ..., terms_used (exact closed form).
    std::vector<double> residual_history;
};

/// Truncated Neumann series for the dense problem: the coefficients are
/// simultaneously triangularized, the Sylvester terms are solved by back
/// substitution, and the series is summed until
/// ||R^(l)||_F <= tol * ||C1 C2^T||_F. The residual norm is evaluated exactly
/// as ||sum_i N_i~ Y_l~ M_i~^T||_F without forming the current sum.
///
/// Throws DivergenceError when ||Y~_{j+1}||_F exceeds ||Y~_j||_F three times
/// in a row or when ell_max terms did not reach tol.
NeumannResult neumann_solve(const DenseCoefficients& co, double tol,
                            int ell_max = 200);

/// Remark-style truncation bound ||L^{-1}(C)|| * rho^{l+1} / (1 - rho).
/// Throws std::domain_error unless 0 <= rho < 1.
double truncation_error_bound(double norm_L_inv_C, double rho, int ell);

}  // namespace gsylv
