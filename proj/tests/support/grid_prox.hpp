#pragma once

// Brute-force 1-D prox oracle used as an independent route in tests:
// minimizes F(t) = phi(t) + (t - z)^2 / (2*step) on a wide bracket by
// dense scanning plus subgrid refinement. Tolerates +inf values of phi
// (indicator penalties), so no derivative-based search is used.

#include <cmath>
#include <functional>
#include <limits>

namespace sfb_test {

inline double grid_prox(const std::function<double(double)>& phi, double step, double z) {
    auto objective = [&](double t) {
        double p = phi(t);
        if (!std::isfinite(p)) return std::numeric_limits<double>::infinity();
        return p + (t - z) * (t - z) / (2.0 * step);
    };
    // every catalog penalty has a minimizer near 0; the quadratic term pins
    // the solution near z, so [min(0,z)-2-step, max(0,z)+2+step] brackets it
    double lo = std::min(0.0, z) - 2.0 - step;
    double hi = std::max(0.0, z) + 2.0 + step;
    const int kCoarse = 4001;
    double best_t = lo;
    double best_f = std::numeric_limits<double>::infinity();
    for (int i = 0; i < kCoarse; ++i) {
        double t = lo + (hi - lo) * static_cast<double>(i) / (kCoarse - 1);
        double f = objective(t);
        if (f < best_f) {
            best_f = f;
            best_t = t;
        }
    }
    double h = (hi - lo) / (kCoarse - 1);
    for (int round = 0; round < 6; ++round) {
        double a = best_t - h;
        double b = best_t + h;
        const int kFine = 101;
        for (int i = 0; i < kFine; ++i) {
            double t = a + (b - a) * static_cast<double>(i) / (kFine - 1);
            double f = objective(t);
            if (f < best_f) {
                best_f = f;
                best_t = t;
            }
        }
        h /= 25.0;
    }
    return best_t;
}

}  // namespace sfb_test
