// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <vector>

#include "gsylv/dense_kernels.hpp"
#include "gsylv/krylov.hpp"
#include "gsylv/neumann.hpp"
#include "gsylv/operators.hpp"
#include "gsylv/rng.hpp"

namespace gsylv {

namespace {

// Geometric mean of the trailing `window` growth ratios; power iterations on
// operators with a dominant complex pair oscillate, the mean does not.
class RatioTracker {
  public:
    explicit RatioTracker(double tol) : tol_(tol) {}

    // Returns true once the estimate has stabilized.
    bool push(double ratio) {
        ratios_.push_back(ratio);
        if (ratios_.size() < static_cast<size_t>(window_)) return false;
        double g = 1.0;
        for (size_t i = ratios_.size() - static_cast<size_t>(window_);
             i < ratios_.size(); ++i)
            g *= ratios_[i];
        const double est = std::pow(g, 1.0 / window_);
        const bool stable =
            have_est_ && std::abs(est - est_) <= tol_ * std::max(est, 1e-30);
        est_ = est;
        have_est_ = true;
        return stable;
    }

    double estimate() const { return est_; }

  private:
    double tol_;
    int window_ = 6;
    std::vector<double> ratios_;
    double est_ = 0.0;
    bool have_est_ = false;
};

}  // namespace

SpectralRadiusEstimate estimate_spectral_radius(
    const GeneralizedSylvesterProblem& pb, int max_iters, double tol,
    std::uint64_t seed) {
    SpectralRadiusEstimate out;
    if (pb.num_terms() == 0) {
        out.converged = true;
        return out;
    }
    const Index n = pb.dim();
    GaussianRng rng(seed);
    RatioTracker tracker(tol);

    if (n <= kDenseLimit) {
        const TriangularizedProblem tp =
            TriangularizedProblem::from(pb.densify());
        MatrixXd X = rng.matrix(n, n);
        X /= X.norm();
        for (int it = 1; it <= max_iters; ++it) {
            out.iterations = it;
            const MatrixXd Y = tp.solve_sylvester(tp.perturbation_apply(X));
            const double nrm = Y.norm();
            if (nrm == 0.0) {
                out.rho = 0.0;
                out.converged = true;
                return out;
            }
            X = Y / nrm;
            if (tracker.push(nrm)) {
                out.converged = true;
                break;
            }
        }
        out.rho = tracker.estimate();
        return out;
    }

    // Factored path: every step solves one Sylvester equation L(Y) = Pi(X)
    // with the extended Krylov method and truncates the iterate.
    SolveConfig cfg;
    cfg.blocks = StartingBlockMode::Plain;
    cfg.tol = 1e-8;
    cfg.max_iters = 80;
    cfg.truncate_tol = 1e-10;

    LowRankFactorPair X(rng.unit_vector(n), rng.unit_vector(n));
    for (int it = 1; it <= max_iters; ++it) {
        out.iterations = it;
        const LowRankFactorPair piX = apply_Pi(pb, X);
        const double pinorm = factor_product_norm(piX);
        if (piX.cols() == 0 || pinorm == 0.0) {
            out.rho = 0.0;
            out.converged = true;
            return out;
        }
        GeneralizedSylvesterProblem sylvester(pb.A_ptr(), pb.B_ptr(), {}, piX.L,
                                              piX.R);
        auto [Y, rep] = solve(sylvester, cfg);
        const double nrm = factor_product_norm(Y);
        if (nrm == 0.0) {
            out.rho = 0.0;
            out.converged = true;
            return out;
        }
        Y.L /= nrm;
        X = truncate_factors(Y, 1e-8);
        if (tracker.push(nrm)) {
            out.converged = true;
            break;
        }
    }
    out.rho = tracker.estimate();
    return out;
}

}  // namespace gsylv
