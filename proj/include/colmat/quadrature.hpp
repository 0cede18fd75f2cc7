#pragma once

#include <cstddef>
#include <functional>

namespace colmat {

struct QuadratureResult {
    double value = 0.0;
    double error_estimate = 0.0; // accumulated local Richardson estimates
    std::size_t evaluations = 0;
};

// Adaptive Simpson on [a, b]. Panels split until the local Richardson error
// fits their share of tol; panels that hit max_depth contribute their achieved
// error, and if the total exceeds tol a NumericalError carrying the achieved
// tolerance is raised.
QuadratureResult integrate(const std::function<double(double)>& f, double a, double b,
                           double tol = 1e-10, int max_depth = 60);

} // namespace colmat
