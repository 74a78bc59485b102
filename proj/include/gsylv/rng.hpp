// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>

namespace gsylv {

/// Deterministic Gaussian source: std::mt19937_64 driving a Box-Muller
/// transform. Kept free of std::normal_distribution so that streams are
/// reproducible across standard library implementations.
class GaussianRng {
  public:
    explicit GaussianRng(std::uint64_t seed) : engine_(seed) {}

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double mul = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * mul;
        have_spare_ = true;
        return u * mul;
    }

    /// Uniform in (0, 1).
    double uniform() {
        return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1p-53;
    }

    Eigen::MatrixXd matrix(Eigen::Index rows, Eigen::Index cols) {
        Eigen::MatrixXd m(rows, cols);
        for (Eigen::Index j = 0; j < cols; ++j)
            for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal();
        return m;
    }

    Eigen::VectorXd vector(Eigen::Index n) { return matrix(n, 1); }

    Eigen::VectorXd unit_vector(Eigen::Index n) {
        Eigen::VectorXd v = vector(n);
        v /= v.norm();
        return v;
    }

    /// Matrix whose columns each have unit Euclidean norm.
    Eigen::MatrixXd unit_columns(Eigen::Index rows, Eigen::Index cols) {
        Eigen::MatrixXd m = matrix(rows, cols);
        for (Eigen::Index j = 0; j < cols; ++j) m.col(j) /= m.col(j).norm();
        return m;
    }

  private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace gsylv
