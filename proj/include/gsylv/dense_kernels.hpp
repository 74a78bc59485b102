// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "gsylv/types.hpp"

namespace gsylv {

// ---------------------------------------------------------------------------
// Real Schur decomposition
// ---------------------------------------------------------------------------

/// A = Q * U * Q^T with Q orthogonal and U quasi upper triangular
/// (1x1 and 2x2 diagonal blocks).
struct SchurForm {
    MatrixXd Q;
    MatrixXd U;

    /// Real parts of the eigenvalues read off the quasi-triangular diagonal.
    VectorXd eigenvalue_real_parts() const;
};

/// Throws FactorizationError if the QR iteration does not converge.
SchurForm real_schur(const MatrixXd& A);

// ---------------------------------------------------------------------------
// Quasi-triangular Sylvester solve (Bartels-Stewart back substitution)
// ---------------------------------------------------------------------------

/// Solves U_A * Y + Y * U_B^T = C for quasi upper triangular U_A (p x p) and
/// U_B (q x q). Throws SpectrumOverlapError when some eigenvalue pair has
/// |lambda_i + lambda_j| < 1e-13 * (||U_A||_F + ||U_B||_F).
MatrixXd solve_triangular_sylvester(const MatrixXd& U_A, const MatrixXd& U_B,
                                    const MatrixXd& C);

// ---------------------------------------------------------------------------
// Block orthogonalization
// ---------------------------------------------------------------------------

struct OrthResult {
    /// Orthonormal columns spanning the part of V_new outside span(basis).
    MatrixXd V;
    /// basis^T * V_new accumulated over the two Gram-Schmidt passes.
    MatrixXd coeffs;
};

/// Two-pass block Gram-Schmidt against `basis` followed by rank-revealing
/// internal orthonormalization. Columns with residual norm below tol_defl
/// are deflated; tol_defl < 0 selects the default 1e-10 * ||V_new||_F.
/// Returns zero columns when V_new lies entirely in span(basis).
OrthResult orthonormalize_block(const MatrixXd& V_new, const MatrixXd& basis,
                                double tol_defl = -1.0);

// ---------------------------------------------------------------------------
// Factor truncation
// ---------------------------------------------------------------------------

/// Smallest-rank factors with ||L R^T - L' R'^T||_F <= tol_rel * ||L R^T||_F,
/// obtained from thin QRs of L and R and an SVD of the small core product.
/// tol_rel = 0 keeps exactly the numerical rank.
LowRankFactorPair truncate_factors(const MatrixXd& L, const MatrixXd& R,
                                   double tol_rel);
inline LowRankFactorPair truncate_factors(const LowRankFactorPair& f, double tol_rel) {
    return truncate_factors(f.L, f.R, tol_rel);
}

// ---------------------------------------------------------------------------
// Kronecker utilities and the dense oracle solve
// ---------------------------------------------------------------------------

MatrixXd kron(const MatrixXd& A, const MatrixXd& B);

/// Solves vec(X) from (I (x) A + B (x) I + sum_i M_i (x) N_i) vec(X) =
/// vec(C1 C2^T) by dense LU with iterative refinement. The relative residual
/// of the Kronecker system must come out <= 1e-10, otherwise the matrix is
/// declared singular (UnsolvableError).
MatrixXd kron_dense_solve(const DenseCoefficients& co);

class GeneralizedSylvesterProblem;

/// Densifies the problem (requires n <= kDenseLimit) and solves as above.
MatrixXd kron_dense_solve(const GeneralizedSylvesterProblem& problem);

}  // namespace gsylv
