#include "htev/bessel.hpp"

#include <cmath>
#include <numbers>

#include "htev/errors.hpp"

namespace htev {

double bessel_j1_series(double x) {
    // J1(x) = sum_k (-1)^k (x/2)^(2k+1) / (k! (k+1)!)
    double q = 0.25 * x * x;
    double term = 0.5 * x;
    double sum = term;
    for (int k = 1; k < 200; ++k) {
        term *= -q / (k * (k + 1.0));
        sum += term;
        if (std::abs(term) < 1e-17 * std::abs(sum)) break;
    }
    return sum;
}

double bessel_j1_asymptotic(double x) {
    // Hankel expansion, summed until the terms stop decreasing
    double ax = std::abs(x);
    const double mu = 4.0;
    double p = 1.0, q = 0.0;
    double term = 1.0;
    double last = 1e300;
    for (int k = 1; k < 60; ++k) {
        double odd = 2.0 * k - 1.0;
        term *= (mu - odd * odd) / (k * 8.0 * ax);
        if (std::abs(term) > last) break;
        last = std::abs(term);
        if (k % 2 == 1) {
            q += ((k / 2) % 2 == 0 ? 1.0 : -1.0) * term;
        } else {
            p += ((k / 2) % 2 == 0 ? 1.0 : -1.0) * term;
        }
        if (last < 1e-17) break;
    }
    double chi = ax - 0.75 * std::numbers::pi;
    double v = std::sqrt(2.0 / (std::numbers::pi * ax)) * (p * std::cos(chi) - q * std::sin(chi));
    return x < 0 ? -v : v;
}

double bessel_j1(double x) {
    if (std::abs(x) < kBesselSwitch) return bessel_j1_series(x);
    return bessel_j1_asymptotic(x);
}

double bessel_j1_ratio(double u) {
    if (u < 0) throw DomainError("bessel_j1_ratio needs u >= 0");
    if (u < 36.0) {
        // sum_k (-u)^k / (k! (k+1)!), argument 2 sqrt(u) < 12
        double term = 1.0, sum = 1.0;
        for (int k = 1; k < 200; ++k) {
            term *= -u / (k * (k + 1.0));
            sum += term;
            if (std::abs(term) < 1e-17 * std::abs(sum)) break;
        }
        return sum;
    }
    double r = std::sqrt(u);
    return bessel_j1_asymptotic(2.0 * r) / r;
}

double bessel_switch_gap() {
    static const double gap =
        std::abs(bessel_j1_series(kBesselSwitch) - bessel_j1_asymptotic(kBesselSwitch));
    return gap;
}

}  // namespace htev
