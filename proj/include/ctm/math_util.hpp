#pragma once

#include <Eigen/Dense>
#include <cmath>

namespace ctm {

// log(sum_i exp(x_i)), computed with max subtraction.
inline double log_sum_exp(const Eigen::VectorXd& x) {
    const double m = x.maxCoeff();
    if (!std::isfinite(m)) return m;
    return m + std::log((x.array() - m).exp().sum());
}

inline Eigen::VectorXd softmax(const Eigen::VectorXd& x) {
    const double m = x.maxCoeff();
    Eigen::VectorXd e = (x.array() - m).exp();
    return e / e.sum();
}

}  // namespace ctm
