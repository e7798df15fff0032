#include "hcb/linear_model.hpp"

#include <cmath>

namespace hcb {

LinearModel::LinearModel(int dim, double lambda) : dim_(dim), lambda_(lambda) {
    if (dim < 1) throw ConfigError("LinearModel: dim must be >= 1");
    if (!(lambda > 0.0)) throw ConfigError("LinearModel: lambda must be positive");
    v_ = lambda * Eigen::MatrixXd::Identity(dim, dim);
    v_inv_ = (1.0 / lambda) * Eigen::MatrixXd::Identity(dim, dim);
    b_ = Eigen::VectorXd::Zero(dim);
    theta_ = Eigen::VectorXd::Zero(dim);
}

void LinearModel::absorb(const Eigen::VectorXd& x, double y) {
    if (x.size() != dim_) throw ConfigError("LinearModel::absorb: dimension mismatch");
    if (!x.allFinite() || !std::isfinite(y)) throw ConfigError("LinearModel::absorb: non-finite input");
    const double norm = x.norm();
    if (norm > 1.0 + 1e-12) throw ConfigError("LinearModel::absorb: context norm exceeds 1");

    potential_ += x.dot(v_inv_ * x);
    v_.noalias() += x * x.transpose();
    b_.noalias() += y * x;
    ++count_;

    if (count_ % kRefactorPeriod == 0) {
        refactorize();
        return;
    }

    // Sherman-Morrison: (V + xx^T)^-1 = V^-1 - (V^-1 x x^T V^-1) / (1 + x^T V^-1 x)
    const Eigen::VectorXd u = v_inv_ * x;
    const double denom = 1.0 + x.dot(u);
    v_inv_.noalias() -= (u * u.transpose()) / denom;
    // Symmetrize; rank-one drift is asymmetric.
    v_inv_ = 0.5 * (v_inv_ + v_inv_.transpose()).eval();
    theta_.noalias() = v_inv_ * b_;
}

void LinearModel::refactorize() {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(v_);
    v_inv_ = ldlt.solve(Eigen::MatrixXd::Identity(dim_, dim_));
    v_inv_ = 0.5 * (v_inv_ + v_inv_.transpose()).eval();
    theta_ = ldlt.solve(b_);
}

double LinearModel::mahalanobis_bonus(const Eigen::VectorXd& x) const {
    if (x.size() != dim_) throw ConfigError("LinearModel::mahalanobis_bonus: dimension mismatch");
    if (!x.allFinite()) throw ConfigError("LinearModel::mahalanobis_bonus: non-finite input");
    const double q = x.dot(v_inv_ * x);
    return q > 0.0 ? std::sqrt(q) : 0.0;
}

double compute_beta(const ConfidenceConfig& cfg, long t) {
    cfg.validate();
    if (t < 0) throw ConfigError("compute_beta: t must be nonnegative");
    const double d = static_cast<double>(cfg.dim);
    const double log_term = 2.0 * std::log(1.0 / cfg.delta) +
                            d * std::log1p(static_cast<double>(t) / (cfg.lambda * d));
    return std::sqrt(cfg.lambda) * cfg.s_bound + cfg.sigma_factor * std::sqrt(log_term);
}

}  // namespace hcb
