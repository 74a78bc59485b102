// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace gsylv {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Largest dimension at which n x n (or n^2 x n^2) dense objects may be formed.
inline constexpr Index kDenseLimit = 120;

// ---------------------------------------------------------------------------
// Error hierarchy
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// QR iteration (or other factorization) failed to converge.
struct FactorizationError : Error {
    using Error::Error;
};

/// Sylvester pivot |lambda_i + lambda_j| below the overlap threshold.
struct SpectrumOverlapError : Error {
    using Error::Error;
};

/// Singular Kronecker system / singular Sylvester operator.
struct UnsolvableError : Error {
    using Error::Error;
};

/// Neumann series diverged (rho(L^{-1} Pi) >= 1) or iteration cap reached.
struct DivergenceError : Error {
    using Error::Error;
};

/// Krylov basis expansion fully deflated.
struct BreakdownError : Error {
    using Error::Error;
};

/// Invalid or inconsistent solver configuration (missing factors, bad mode).
struct ConfigError : Error {
    using Error::Error;
};

/// Commutator numerical rank exceeds the caller-supplied cap.
struct NotLowRankError : Error {
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Low-rank factor pair
// ---------------------------------------------------------------------------

/// A pair (L, R) of n x k blocks representing X = L * R^T. The product is
/// never materialized at large n.
struct LowRankFactorPair {
    MatrixXd L;
    MatrixXd R;

    LowRankFactorPair() = default;
    LowRankFactorPair(MatrixXd left, MatrixXd right)
        : L(std::move(left)), R(std::move(right)) {
        if (L.cols() != R.cols())
            throw std::invalid_argument("LowRankFactorPair: unequal column counts");
    }

    Index rows() const { return L.rows(); }
    Index cols() const { return L.cols(); }

    static LowRankFactorPair zero(Index n) {
        return LowRankFactorPair(MatrixXd(n, 0), MatrixXd(n, 0));
    }

    MatrixXd dense() const { return L * R.transpose(); }
};

/// ||L * R^T||_F computed from thin QR factors, without forming the product.
double factor_product_norm(const LowRankFactorPair& f);
double factor_product_norm(const MatrixXd& L, const MatrixXd& R);

// ---------------------------------------------------------------------------
// Dense coefficient bundle (small problems, projected problems, oracles)
// ---------------------------------------------------------------------------

struct DenseCoefficients {
    MatrixXd A;
    MatrixXd B;
    std::vector<MatrixXd> N;
    std::vector<MatrixXd> M;
    MatrixXd C1;
    MatrixXd C2;

    Index rows() const { return A.rows(); }
    Index cols_b() const { return B.rows(); }
    int num_terms() const { return static_cast<int>(N.size()); }
};

}  // namespace gsylv
