#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string>

#include "error.hpp"

namespace pinn_spectral {

using Point = Eigen::VectorXd;
/// d x n matrix, one point per column.
using PointSet = Eigen::MatrixXd;
using PointRef = Eigen::Ref<const Eigen::VectorXd>;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr const char* kLibraryVersion = "1.0.0";

inline void require_finite(PointRef x, const char* what) {
    if (!x.allFinite()) {
        throw DomainError(std::string(what) + ": non-finite coordinate");
    }
}

inline void require_positive(double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw DomainError(std::string(what) + " must be positive and finite");
    }
}

inline PointSet points_1d(std::initializer_list<double> xs) {
    PointSet p(1, static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) p(0, i++) = x;
    return p;
}

inline PointSet points_1d(const Vector& xs) {
    return xs.transpose();
}

}  // namespace pinn_spectral
