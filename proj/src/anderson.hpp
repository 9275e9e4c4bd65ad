#pragma once

#include <cmath>
#include <deque>
#include <utility>

#include <Eigen/Dense>

#include "htev/errors.hpp"
#include "htev/fixedpoint.hpp"

namespace htev::detail {

// Anderson-accelerated damped Picard iteration for x = F(x)
template <class Map>
std::pair<double, int> fixed_point(Eigen::VectorXcd& x, const Map& F, const SolverConfig& cfg, double tol) {
    const double beta = cfg.damping;
    const int m = cfg.anderson_depth;
    std::deque<Eigen::VectorXcd> dX, dR;
    Eigen::VectorXcd fx = F(x);
    Eigen::VectorXcd r = fx - x;
    double res = r.cwiseAbs().maxCoeff();
    double best = res;
    Eigen::VectorXcd best_x = x;
    int stall = 0;
    for (int it = 1; it <= cfg.max_iterations; ++it) {
        if (!std::isfinite(res)) break;
        if (res <= tol) return {res, it - 1};
        Eigen::VectorXcd xn;
        if (m > 0 && !dR.empty()) {
            Eigen::MatrixXcd Rm(x.size(), dR.size()), Xm(x.size(), dX.size());
            for (std::size_t k = 0; k < dR.size(); ++k) {
                Rm.col(k) = dR[k];
                Xm.col(k) = dX[k];
            }
            Eigen::VectorXcd gam = Rm.colPivHouseholderQr().solve(r);
            xn = x + beta * r - (Xm + beta * Rm) * gam;
        } else {
            xn = x + beta * r;
        }
        Eigen::VectorXcd fxn = F(xn);
        Eigen::VectorXcd rn = fxn - xn;
        double resn = rn.cwiseAbs().maxCoeff();
        if (!std::isfinite(resn) || resn > 1e3 * best) {
            // restart from the best iterate with plain damped steps
            dX.clear();
            dR.clear();
            x = best_x;
            fx = F(x);
            r = fx - x;
            res = r.cwiseAbs().maxCoeff();
            xn = x + 0.5 * beta * r;
            fxn = F(xn);
            rn = fxn - xn;
            resn = rn.cwiseAbs().maxCoeff();
        }
        if (m > 0) {
            dX.push_back(xn - x);
            dR.push_back(rn - r);
            if (static_cast<int>(dX.size()) > m) {
                dX.pop_front();
                dR.pop_front();
            }
        }
        x = std::move(xn);
        r = std::move(rn);
        res = resn;
        if (res < best * 0.999) {
            best = res;
            best_x = x;
            stall = 0;
        } else if (++stall > 50) {
            dX.clear();
            dR.clear();
            stall = 0;
        }
    }
    if (res <= tol) return {res, cfg.max_iterations};
    throw SolverError("fixed-point iteration did not converge", res, cfg.max_iterations);
}

}  // namespace htev::detail
