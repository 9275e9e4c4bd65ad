#pragma once

#include <vector>

namespace htev {

struct Rule {
    std::vector<double> x;
    std::vector<double> w;

    std::size_t size() const { return x.size(); }
    // append an order-point Gauss-Legendre panel on [a, b]
    void add_panel(double a, double b, int order);
};

// nodes and weights on [-1, 1]; cached per order
const Rule& gauss_legendre(int order);

// [a, b] split into `panels` equal Gauss-Legendre panels
Rule panel_rule(double a, double b, int panels, int order);

}  // namespace htev
