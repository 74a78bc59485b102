// SPDX-License-Identifier: Apache-2.0
#include "gsylv/neumann.hpp"

#include <cmath>

namespace gsylv {

TriangularizedProblem TriangularizedProblem::from(const DenseCoefficients& co) {
    TriangularizedProblem tp;
    tp.schur_a = real_schur(co.A);
    tp.schur_b = real_schur(co.B);
    tp.C1t = tp.schur_a.Q.transpose() * co.C1;
    tp.C2t = tp.schur_b.Q.transpose() * co.C2;
    tp.Nt.reserve(co.N.size());
    tp.Mt.reserve(co.M.size());
    for (size_t i = 0; i < co.N.size(); ++i) {
        tp.Nt.push_back(tp.schur_a.Q.transpose() * co.N[i] * tp.schur_a.Q);
        tp.Mt.push_back(tp.schur_b.Q.transpose() * co.M[i] * tp.schur_b.Q);
    }
    return tp;
}

MatrixXd TriangularizedProblem::solve_sylvester(const MatrixXd& rhs) const {
    return solve_triangular_sylvester(schur_a.U, schur_b.U, rhs);
}

MatrixXd TriangularizedProblem::perturbation_apply(const MatrixXd& Y) const {
    MatrixXd R = MatrixXd::Zero(Y.rows(), Y.cols());
    for (size_t i = 0; i < Nt.size(); ++i)
        R.noalias() += Nt[i] * Y * Mt[i].transpose();
    return R;
}

MatrixXd TriangularizedProblem::back_transform(const MatrixXd& Xt) const {
    return schur_a.Q * Xt * schur_b.Q.transpose();
}

NeumannResult neumann_solve(const DenseCoefficients& co, double tol,
                            int ell_max) {
    const double rhs_norm = (co.C1 * co.C2.transpose()).norm();
    NeumannResult out;
    if (rhs_norm == 0.0) {
        out.X = MatrixXd::Zero(co.rows(), co.B.rows());
        out.residual_history.push_back(0.0);
        return out;
    }

    const TriangularizedProblem tp = TriangularizedProblem::from(co);
    MatrixXd Y = tp.solve_sylvester(tp.C1t * tp.C2t.transpose());
    MatrixXd Xt = Y;

    MatrixXd PiY = tp.perturbation_apply(Y);
    double res = PiY.norm();
    out.residual_history.push_back(res);

    double prev_term_norm = Y.norm();
    int growth_streak = 0;
    int ell = 0;
    while (res > tol * rhs_norm) {
        if (ell >= ell_max)
            throw DivergenceError(
                "neumann_solve: series did not reach tolerance within the "
                "term cap");
        Y = tp.solve_sylvester(-PiY);
        Xt += Y;
        ++ell;
        PiY = tp.perturbation_apply(Y);
        res = PiY.norm();
        out.residual_history.push_back(res);

        const double term_norm = Y.norm();
        growth_streak = term_norm > prev_term_norm ? growth_streak + 1 : 0;
        prev_term_norm = term_norm;
        if (growth_streak >= 3)
            throw DivergenceError(
                "neumann_solve: series terms grew three times in a row "
                "(rho(L^{-1} Pi) >= 1)");
    }

    out.X = tp.back_transform(Xt);
    out.terms_used = ell;
    return out;
}

double truncation_error_bound(double norm_L_inv_C, double rho, int ell) {
    if (!(rho >= 0.0 && rho < 1.0))
        throw std::domain_error("truncation_error_bound: requires 0 <= rho < 1");
    if (ell < 0) throw std::domain_error("truncation_error_bound: ell >= 0");
    return norm_L_inv_C * std::pow(rho, ell + 1) / (1.0 - rho);
}

}  // namespace gsylv
