// SPDX-License-Identifier: Apache-2.0
#include "gsylv/diagnostics.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <limits>
#include <unsupported/Eigen/MatrixFunctions>

#include "gsylv/dense_kernels.hpp"

namespace gsylv {

VectorXd DecayProfile::normalized() const {
    if (singular_values.size() == 0) return singular_values;
    const double s1 = singular_values[0];
    if (s1 == 0.0) return VectorXd::Zero(singular_values.size());
    return singular_values / s1;
}

Index DecayProfile::numerical_rank(double tol) const {
    if (singular_values.size() == 0) return 0;
    const double thr = tol * singular_values[0];
    Index k = 0;
    while (k < singular_values.size() && singular_values[k] > thr) ++k;
    return k;
}

DecayProfile singular_value_decay(const GeneralizedSylvesterProblem& pb) {
    const MatrixXd X = kron_dense_solve(pb);
    Eigen::BDCSVD<MatrixXd> svd(X);
    return DecayProfile{svd.singularValues()};
}

long long rank_bound(int ell, int k, int m, int r) {
    if (ell < 0 || k < 0 || m < 0 || r < 0)
        throw std::invalid_argument("rank_bound: arguments must be >= 0");
    const double base = 2.0 * k + 1.0;
    double total = base * r;
    double pw = base;
    for (int j = 1; j <= ell; ++j) {
        pw *= base;  // (2k+1)^{j+1}
        total += pw * std::pow(static_cast<double>(m), j) * r;
        if (total > 9.0e18) return std::numeric_limits<long long>::max();
    }
    return static_cast<long long>(total);
}

LowRankFactorPair quadrature_inverse_apply(const MatrixXd& A, const MatrixXd& B,
                                           const MatrixXd& C1, const MatrixXd& C2,
                                           int k) {
    const Index n = A.rows();
    if (A.cols() != n || B.rows() != B.cols())
        throw std::invalid_argument("quadrature_inverse_apply: A, B square");
    if (C1.rows() != n || C2.rows() != B.rows() || C1.cols() != C2.cols())
        throw std::invalid_argument("quadrature_inverse_apply: factor shapes");
    if (k < 1) throw std::invalid_argument("quadrature_inverse_apply: k >= 1");
    if (std::max(n, B.rows()) > kDenseLimit)
        throw std::invalid_argument(
            "quadrature_inverse_apply: dimension above dense limit");

    const auto max_real = [](const MatrixXd& M) {
        return real_schur(M).eigenvalue_real_parts().maxCoeff();
    };
    if (max_real(A) >= 0.0 || max_real(B) >= 0.0)
        throw std::domain_error(
            "quadrature_inverse_apply: spectra must lie in the open left "
            "half-plane");

    const Index r = C1.cols();
    const double h = M_PI / std::sqrt(static_cast<double>(k));
    MatrixXd L(n, (2 * k + 1) * r), R(B.rows(), (2 * k + 1) * r);
    Index c = 0;
    for (int j = -k; j <= k; ++j) {
        const double jh = j * h;
        // t_j = asinh(exp(j h)), evaluated without overflowing exp
        const double t =
            jh > 20.0 ? jh + std::log1p(std::sqrt(1.0 + std::exp(-2.0 * jh)))
                      : std::asinh(std::exp(jh));
        const double w = h / std::sqrt(1.0 + std::exp(-2.0 * jh));
        L.middleCols(c, r) = w * ((t * A).exp() * C1);
        R.middleCols(c, r) = (t * B).exp() * C2;
        c += r;
    }
    return LowRankFactorPair(std::move(L), std::move(R));
}

}  // namespace gsylv
