#include "htev/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include "htev/errors.hpp"

namespace htev {

namespace {

Rule compute_gl(int order) {
    Rule r;
    r.x.resize(order);
    r.w.resize(order);
    const int m = (order + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (order + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= order; ++k) {
                double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (order == 1) {
                p1 = x;
                p0 = 1.0;
            }
            dp = order * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        r.x[i] = -x;
        r.x[order - 1 - i] = x;
        double w = 2.0 / ((1.0 - x * x) * dp * dp);
        r.w[i] = w;
        r.w[order - 1 - i] = w;
    }
    return r;
}

}  // namespace

const Rule& gauss_legendre(int order) {
    if (order < 2) throw ParameterError("Gauss-Legendre order must be >= 2");
    static std::mutex mu;
    static std::map<int, Rule> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(order);
    if (it == cache.end()) it = cache.emplace(order, compute_gl(order)).first;
    return it->second;
}

void Rule::add_panel(double a, double b, int order) {
    const Rule& gl = gauss_legendre(order);
    double h = 0.5 * (b - a), c = 0.5 * (b + a);
    for (int i = 0; i < order; ++i) {
        x.push_back(c + h * gl.x[i]);
        w.push_back(h * gl.w[i]);
    }
}

Rule panel_rule(double a, double b, int panels, int order) {
    Rule r;
    double h = (b - a) / panels;
    for (int k = 0; k < panels; ++k) r.add_panel(a + k * h, a + (k + 1) * h, order);
    return r;
}

}  // namespace htev
