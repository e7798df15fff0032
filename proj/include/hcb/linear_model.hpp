#pragma once

#include <stdexcept>

#include <Eigen/Dense>

namespace hcb {

struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// One online ridge regressor: V_t = lambda*I + sum x x^T maintained together
// with its inverse via rank-one updates, re-factorized densely every
// kRefactorPeriod absorptions to contain floating-point drift.
class LinearModel {
public:
    static constexpr long kRefactorPeriod = 512;

    LinearModel(int dim, double lambda);

    void absorb(const Eigen::VectorXd& x, double y);

    // sqrt(x^T V^-1 x)
    double mahalanobis_bonus(const Eigen::VectorXd& x) const;

    int dim() const { return dim_; }
    double lambda() const { return lambda_; }
    long count() const { return count_; }
    const Eigen::MatrixXd& v_matrix() const { return v_; }
    const Eigen::MatrixXd& v_inverse() const { return v_inv_; }
    const Eigen::VectorXd& b_vector() const { return b_; }
    const Eigen::VectorXd& theta_hat() const { return theta_; }

    double predict(const Eigen::VectorXd& x) const { return theta_.dot(x); }

    // Running sum of ||x_t||^2 in the V_{t-1}^-1 norm over absorbed contexts.
    double elliptical_potential() const { return potential_; }

private:
    void refactorize();

    int dim_;
    double lambda_;
    long count_ = 0;
    Eigen::MatrixXd v_;
    Eigen::MatrixXd v_inv_;
    Eigen::VectorXd b_;
    Eigen::VectorXd theta_;
    double potential_ = 0.0;
};

// Arguments of the confidence radius beta_t(delta). sigma_factor scales the
// sub-Gaussian term and defaults to 1 (the unit-sigma convention).
struct ConfidenceConfig {
    double delta;
    double s_bound = 1.0;
    double lambda = 1.0;
    int dim = 1;
    double sigma_factor = 1.0;

    void validate() const {
        if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie strictly in (0,1)");
        if (!(s_bound > 0.0)) throw ConfigError("s_bound must be positive");
        if (!(lambda > 0.0)) throw ConfigError("lambda must be positive");
        if (dim < 1) throw ConfigError("dim must be >= 1");
    }
};

// beta_t(delta) = sqrt(lambda)*S + sigma*sqrt(2 ln(1/delta) + d ln(1 + t/(lambda d)))
double compute_beta(const ConfidenceConfig& cfg, long t);

}  // namespace hcb
