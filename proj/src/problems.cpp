// SPDX-License-Identifier: Apache-2.0
#include "gsylv/problems.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "gsylv/matrix_market.hpp"
#include "gsylv/rng.hpp"

namespace gsylv {

namespace {

VectorXd unit(Index n, Index i) {
    VectorXd e = VectorXd::Zero(n);
    e[i] = 1.0;
    return e;
}

// Columns of [P, N] restricted to a known support set: column j of the
// commutator is (P N - N P) e_j, everything outside `support` must vanish.
CommutatorFactors commutator_from_support(const LinearMatrixOperator& P,
                                          const LinearMatrixOperator& N,
                                          const std::vector<Index>& support) {
    const Index n = P.dim();
    MatrixXd U(n, static_cast<Index>(support.size()));
    MatrixXd Ut(n, static_cast<Index>(support.size()));
    Index c = 0;
    for (Index j : support) {
        const VectorXd ej = unit(n, j);
        const VectorXd col = P.apply(N.apply(ej)) - N.apply(P.apply(ej));
        if (col.norm() == 0.0) continue;
        U.col(c) = col;
        Ut.col(c) = ej;
        ++c;
    }
    CommutatorFactors f{U.leftCols(c), Ut.leftCols(c)};

    GaussianRng rng(29);
    for (int t = 0; t < 4; ++t) {
        const VectorXd z = rng.unit_vector(n);
        const VectorXd lhs = P.apply(N.apply(z)) - N.apply(P.apply(z));
        const VectorXd rhs = f.U * (f.Ut.transpose() * z);
        const double scale = std::max({lhs.norm(), rhs.norm(), 1.0});
        if ((lhs - rhs).norm() > 1e-10 * scale)
            throw std::logic_error(
                "commutator_from_support: support set does not cover the "
                "commutator");
    }
    return f;
}

}  // namespace

GeneralizedSylvesterProblem mimo_problem(int n, double gamma,
                                         std::uint64_t seed) {
    if (n < 3) throw std::domain_error("mimo_problem: n >= 3 required");
    if (!(gamma > 0.0)) throw std::domain_error("mimo_problem: gamma > 0 required");
    const VectorXd ones = VectorXd::Ones(n - 1);

    // A = tridiag(2,-5,2); [A, N_1] = 12 (e_1 e_1^T - e_n e_n^T)
    OperatorPtr A = make_tridiagonal_operator(2.0 * ones,
                                              VectorXd::Constant(n, -5.0),
                                              2.0 * ones);
    OperatorPtr N1 = make_tridiagonal_operator(3.0 * gamma * ones,
                                               VectorXd::Zero(n),
                                               -3.0 * gamma * ones);
    OperatorPtr N2 = make_tridiagonal_operator(-3.0 * gamma * ones,
                                               VectorXd::Constant(n, gamma),
                                               3.0 * gamma * ones);

    const double c0 = 2.0 * std::sqrt(3.0);
    MatrixXd U1(n, 2), Ut(n, 2);
    U1.col(0) = c0 * gamma * unit(n, 0);
    U1.col(1) = c0 * gamma * unit(n, n - 1);
    Ut.col(0) = c0 * unit(n, 0);
    Ut.col(1) = -c0 * unit(n, n - 1);

    PerturbationTerm t1{N1, N1, CommutatorFactors{U1, Ut},
                        CommutatorFactors{U1, Ut}};
    PerturbationTerm t2{N2, N2, CommutatorFactors{-U1, Ut},
                        CommutatorFactors{-U1, Ut}};

    GaussianRng rng(seed);
    const MatrixXd C = rng.unit_columns(n, 2);
    return GeneralizedSylvesterProblem(A, A, {t1, t2}, C, C);
}

GeneralizedSylvesterProblem lowrank_problem(int n, std::uint64_t seed,
                                            bool scaled) {
    if (n < 3) throw std::domain_error("lowrank_problem: n >= 3 required");
    const double s = scaled ? 1.0 : static_cast<double>(n) * n;
    const VectorXd off = VectorXd::Constant(n - 1, s);
    OperatorPtr A =
        make_tridiagonal_operator(off, VectorXd::Constant(n, -2.0 * s), off);

    GaussianRng rng(seed);
    const VectorXd u = rng.unit_vector(n);
    const VectorXd v = rng.unit_vector(n);
    const MatrixXd C = rng.unit_vector(n);

    auto N = make_low_rank_operator(u, v);

    // [A, u v^T] = (A u) v^T - u (A^T v)^T, exact rank <= 2 factors
    MatrixXd Uc(n, 2), Vc(n, 2);
    Uc.col(0) = A->apply(u);
    Uc.col(1) = u;
    Vc.col(0) = v;
    Vc.col(1) = -A->transpose_apply(v);
    CommutatorFactors f{Uc, Vc};

    PerturbationTerm term{N, N, f, f};
    return GeneralizedSylvesterProblem(A, A, {term}, C, C);
}

GeneralizedSylvesterProblem helmholtz_problem(int n) {
    if (n < 8 || n % 4 != 0)
        throw std::domain_error(
            "helmholtz_problem: n must be a multiple of 4 (and >= 8)");
    const double s = static_cast<double>(n - 1) * (n - 1);  // 1/h^2
    const VectorXd off = VectorXd::Constant(n - 1, -s);
    const VectorXd dia = VectorXd::Constant(n, 2.0 * s);

    OperatorPtr B = make_tridiagonal_operator(off, dia, off);
    MatrixXd P(n, 2), Q(n, 2);
    P.col(0) = -s * unit(n, 0);
    P.col(1) = -s * unit(n, n - 1);
    Q.col(0) = unit(n, n - 1);
    Q.col(1) = unit(n, 0);
    OperatorPtr A = make_tridiagonal_plus_lowrank_operator(off, dia, off, P, Q);

    VectorXd nd = VectorXd::Zero(n);
    nd.tail(n / 2).setOnes();
    OperatorPtr N = make_diagonal_operator(nd);

    MatrixXd C = MatrixXd::Zero(n, 1);
    for (Index i = n / 4; i <= n / 2; ++i) C(i - 1, 0) = 10.0;

    const std::vector<Index> support = {0, n / 2 - 1, n / 2, n - 1};
    PerturbationTerm term{N, N, commutator_from_support(*A, *N, support),
                          commutator_from_support(*B, *N, support)};
    return GeneralizedSylvesterProblem(A, B, {term}, C, C);
}

GeneralizedSylvesterProblem shift_operator_transform(
    const GeneralizedSylvesterProblem& pb, double sigma) {
    if (sigma == 0.0) return pb;
    const Index n = pb.dim();
    OperatorPtr shifted = pb.A().shifted(sigma);
    if (!shifted->has_inverse())
        throw ConfigError(
            "shift_operator_transform: A + sigma I is singular, shift "
            "rejected");

    auto terms = pb.terms();
    PerturbationTerm extra;
    extra.N = make_diagonal_operator(VectorXd::Constant(n, -sigma));
    extra.M = make_diagonal_operator(VectorXd::Ones(n));
    extra.comm_a = CommutatorFactors{MatrixXd(n, 0), MatrixXd(n, 0)};
    extra.comm_b = CommutatorFactors{MatrixXd(n, 0), MatrixXd(n, 0)};
    terms.push_back(extra);
    return GeneralizedSylvesterProblem(shifted, pb.B_ptr(), std::move(terms),
                                       pb.C1(), pb.C2());
}

// ---------------------------------------------------------------------------
// ProblemSpec
// ---------------------------------------------------------------------------

ProblemFamily parse_family(const std::string& name) {
    if (name == "mimo") return ProblemFamily::Mimo;
    if (name == "lowrank") return ProblemFamily::LowRank;
    if (name == "helmholtz") return ProblemFamily::Helmholtz;
    if (name == "custom-file") return ProblemFamily::CustomFile;
    throw ConfigError("unknown problem family: " + name);
}

std::string family_name(ProblemFamily f) {
    switch (f) {
        case ProblemFamily::Mimo: return "mimo";
        case ProblemFamily::LowRank: return "lowrank";
        case ProblemFamily::Helmholtz: return "helmholtz";
        case ProblemFamily::CustomFile: return "custom-file";
    }
    return "unknown";
}

ProblemSpec ProblemSpec::from_json_file(const std::string& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open config file: " + file);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config parse error: " + std::string(e.what()));
    }
    ProblemSpec spec;
    spec.family = parse_family(j.value("family", std::string("mimo")));
    spec.n = j.value("n", spec.n);
    spec.gamma = j.value("gamma", spec.gamma);
    spec.seed = j.value("seed", spec.seed);
    spec.scaled = j.value("scaled", spec.scaled);
    if (j.contains("shift")) spec.shift = j["shift"].get<double>();
    spec.path = j.value("path", spec.path);
    return spec;
}

std::string ProblemSpec::to_json() const {
    nlohmann::json j{{"family", family_name(family)}, {"n", n},
                     {"gamma", gamma},                {"seed", seed},
                     {"scaled", scaled},              {"path", path}};
    if (!std::isnan(shift)) j["shift"] = shift;
    return j.dump();
}

namespace {

GeneralizedSylvesterProblem load_custom_problem(const ProblemSpec& spec) {
    namespace fs = std::filesystem;
    const fs::path dir(spec.path);
    auto need = [&](const std::string& name) {
        const fs::path p = dir / name;
        if (!fs::exists(p))
            throw ConfigError("custom-file problem: missing " + p.string());
        return p.string();
    };
    OperatorPtr A = make_sparse_operator(read_matrix_market_sparse(need("A.mtx")));
    OperatorPtr B = make_sparse_operator(read_matrix_market_sparse(need("B.mtx")));
    const MatrixXd C1 = read_matrix_market_dense(need("C1.mtx"));
    const MatrixXd C2 = read_matrix_market_dense(need("C2.mtx"));
    std::vector<PerturbationTerm> terms;
    for (int i = 1;; ++i) {
        const fs::path np = dir / ("N" + std::to_string(i) + ".mtx");
        const fs::path mp = dir / ("M" + std::to_string(i) + ".mtx");
        if (!fs::exists(np)) break;
        if (!fs::exists(mp))
            throw ConfigError("custom-file problem: missing " + mp.string());
        PerturbationTerm t;
        t.N = make_sparse_operator(read_matrix_market_sparse(np.string()), false);
        t.M = make_sparse_operator(read_matrix_market_sparse(mp.string()), false);
        terms.push_back(std::move(t));
    }
    return GeneralizedSylvesterProblem(A, B, std::move(terms), C1, C2);
}

}  // namespace

GeneralizedSylvesterProblem build_problem(const ProblemSpec& spec) {
    const double shift = std::isnan(spec.shift)
                             ? (spec.family == ProblemFamily::Helmholtz ? 1.0 : 0.0)
                             : spec.shift;
    auto apply_shift = [&](GeneralizedSylvesterProblem pb) {
        return shift == 0.0 ? pb : shift_operator_transform(pb, shift);
    };
    switch (spec.family) {
        case ProblemFamily::Mimo:
            return apply_shift(mimo_problem(spec.n, spec.gamma, spec.seed));
        case ProblemFamily::LowRank:
            return apply_shift(lowrank_problem(spec.n, spec.seed, spec.scaled));
        case ProblemFamily::Helmholtz:
            return apply_shift(helmholtz_problem(spec.n));
        case ProblemFamily::CustomFile:
            return apply_shift(load_custom_problem(spec));
    }
    throw ConfigError("build_problem: unknown family");
}

}  // namespace gsylv
