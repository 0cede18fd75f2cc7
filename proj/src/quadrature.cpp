#include "colmat/quadrature.hpp"

#include <cmath>

#include "colmat/errors.hpp"

namespace colmat {

namespace {

struct Worker {
    const std::function<double(double)>& f;
    int max_depth;
    std::size_t evals = 0;
    double achieved = 0.0; // error mass from panels that hit max_depth

    double eval(double x) {
        ++evals;
        return f(x);
    }

    // Simpson panel (a,b) with cached endpoint/midpoint values and previous estimate.
    double refine(double a, double b, double fa, double fm, double fb, double whole, double tol,
                  int depth) {
        double m = 0.5 * (a + b);
        double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
        double flm = eval(lm), frm = eval(rm);
        double h6 = (b - a) / 12.0;
        double left = h6 * (fa + 4.0 * flm + fm);
        double right = h6 * (fm + 4.0 * frm + fb);
        double delta = left + right - whole;
        if (std::abs(delta) <= 15.0 * tol || depth >= max_depth) {
            if (std::abs(delta) > 15.0 * tol) achieved += std::abs(delta) / 15.0;
            return left + right + delta / 15.0;
        }
        return refine(a, m, fa, flm, fm, left, 0.5 * tol, depth + 1) +
               refine(m, b, fm, frm, fb, right, 0.5 * tol, depth + 1);
    }
};

} // namespace

QuadratureResult integrate(const std::function<double(double)>& f, double a, double b, double tol,
                           int max_depth) {
    if (!(tol > 0.0)) throw ConfigError("integrate: tol must be positive");
    Worker w{f, max_depth};
    double fa = w.eval(a), fb = w.eval(b), fm = w.eval(0.5 * (a + b));
    double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    double value = w.refine(a, b, fa, fm, fb, whole, tol, 0);
    if (w.achieved > tol)
        throw NumericalError("integrate: tolerance " + std::to_string(tol) + " not reached",
                             w.achieved);
    return {value, w.achieved, w.evals};
}

} // namespace colmat
