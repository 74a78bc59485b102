// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>

#include "gsylv/operators.hpp"

namespace gsylv {

// ---------------------------------------------------------------------------
// Benchmark problem generators
// ---------------------------------------------------------------------------

/// MIMO bilinear-system Gramian equation
///   A X + X A^T + gamma^2 (N_1 X N_1^T + N_2 X N_2^T) = C C^T,
/// A = tridiag(2,-5,2), N_1 = tridiag(3,0,-3), N_2 = -N_1 + I, C an n x 2
/// block with unit-norm pseudo-random columns. The commutator factors
/// [A, N_1] = U U~^T with U, U~ supported on {e_1, e_n} are attached; the
/// gamma scaling is folded into the perturbation operators.
GeneralizedSylvesterProblem mimo_problem(int n, double gamma, std::uint64_t seed);

/// Rank-one perturbation problem
///   A X + X A^T + (u v^T) X (v u^T) = C C^T,
/// A = n^2 tridiag(1,-2,1) and u, v, C unit-norm pseudo-random vectors.
/// scaled = true replaces A by A / n^2, which pushes rho(L^{-1} Pi) above 1.
/// N = u v^T is attached as a LowRankOperator, with exact commutator factors.
GeneralizedSylvesterProblem lowrank_problem(int n, std::uint64_t seed, bool scaled);

/// Finite-difference discretization of an inhomogeneous Helmholtz equation,
///   A X + X B^T + N X N^T = C C^T,
/// B = -tridiag(1,-2,1)/h^2 with h = 1/(n-1), A = B - (e_1,e_n)(e_n,e_1)^T/h^2
/// (periodic correction, A singular), N = blkdiag(0_{n/2}, I_{n/2}), and
/// c_i = 10 for i in [n/4, n/2]. Commutator factors are computed exactly at
/// construction from the known sparsity pattern. Requires n to be a multiple
/// of 4 (std::domain_error otherwise).
GeneralizedSylvesterProblem helmholtz_problem(int n);

/// Equivalent problem (A + sigma I) X + X B^T + sum N_i X M_i^T - sigma X
/// = C1 C2^T: A is shifted and one perturbation term (-sigma I, I) with zero
/// commutators is appended. Solutions coincide with the input problem.
/// Throws ConfigError when A + sigma I is singular.
GeneralizedSylvesterProblem shift_operator_transform(
    const GeneralizedSylvesterProblem& pb, double sigma);

// ---------------------------------------------------------------------------
// Problem specification (CLI / config file)
// ---------------------------------------------------------------------------

enum class ProblemFamily { Mimo, LowRank, Helmholtz, CustomFile };

struct ProblemSpec {
    ProblemFamily family = ProblemFamily::Mimo;
    int n = 100;
    double gamma = 1.0 / 6.0;
    std::uint64_t seed = 1;
    bool scaled = false;
    /// Sylvester-operator shift; NaN selects the family default
    /// (1 for helmholtz, 0 otherwise).
    double shift = std::numeric_limits<double>::quiet_NaN();
    /// Directory holding Matrix Market files for custom-file problems.
    std::string path;

    static ProblemSpec from_json_file(const std::string& file);
    std::string to_json() const;
};

ProblemFamily parse_family(const std::string& name);
std::string family_name(ProblemFamily f);

/// Instantiates the problem, applying the requested operator shift.
GeneralizedSylvesterProblem build_problem(const ProblemSpec& spec);

}  // namespace gsylv
