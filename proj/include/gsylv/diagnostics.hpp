// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "gsylv/operators.hpp"
#include "gsylv/types.hpp"

namespace gsylv {

/// Singular value spectrum of a dense solution.
struct DecayProfile {
    VectorXd singular_values;

    /// sigma_k / sigma_1.
    VectorXd normalized() const;
    /// Number of singular values above tol * sigma_1.
    Index numerical_rank(double tol) const;
};

/// Full SVD spectrum of the Kronecker-oracle solution (n <= kDenseLimit).
DecayProfile singular_value_decay(const GeneralizedSylvesterProblem& pb);

/// (2k+1) r + sum_{j=1}^{l} (2k+1)^{j+1} m^j r, saturating at the largest
/// representable value.
long long rank_bound(int ell, int k, int m, int r);

/// Quadrature approximation of the Sylvester solve,
/// L_k^{-1}(C1 C2^T) = sum_{j=-k}^{k} w_j exp(t_j A) C1 C2^T exp(t_j B^T),
/// returned in factored form of width exactly (2k+1) * r. Sinc-type nodes
/// t_j = asinh(exp(j h)) and weights w_j = h / sqrt(1 + exp(-2 j h)) with
/// h = pi / sqrt(k). Requires the spectra of A and B in the open left half
/// plane (std::domain_error otherwise) and n <= kDenseLimit.
LowRankFactorPair quadrature_inverse_apply(const MatrixXd& A, const MatrixXd& B,
                                           const MatrixXd& C1, const MatrixXd& C2,
                                           int k);

}  // namespace gsylv
