// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace gsylv {

/// Reads a real Matrix Market file (array or coordinate format; general,
/// symmetric or skew-symmetric) into a dense matrix.
Eigen::MatrixXd read_matrix_market_dense(const std::string& path);

/// Reads a real Matrix Market file into a compressed sparse matrix.
Eigen::SparseMatrix<double> read_matrix_market_sparse(const std::string& path);

/// Writes a dense matrix in array format.
void write_matrix_market_dense(const std::string& path, const Eigen::MatrixXd& A);

/// Writes a sparse matrix in coordinate format.
void write_matrix_market_sparse(const std::string& path,
                                const Eigen::SparseMatrix<double>& A);

}  // namespace gsylv
