#include "htev/stats.hpp"

#include <cmath>

#include "htev/errors.hpp"

namespace htev {

double jackknife_se(const std::vector<double>& loo) {
    const double R = static_cast<double>(loo.size());
    if (loo.size() < 2) throw ParameterError("jackknife needs at least two replicates");
    double mean = 0.0;
    for (double v : loo) mean += v;
    mean /= R;
    double ss = 0.0;
    for (double v : loo) ss += (v - mean) * (v - mean);
    return std::sqrt((R - 1.0) / R * ss);
}

double jackknife_se(std::size_t R, const std::function<double(std::size_t)>& stat_without) {
    std::vector<double> loo(R);
    for (std::size_t i = 0; i < R; ++i) loo[i] = stat_without(i);
    return jackknife_se(loo);
}

GaussianityReport gaussianity_diag(const std::vector<double>& x) {
    const double N = static_cast<double>(x.size());
    if (x.size() < 8) throw ParameterError("gaussianity_diag needs at least 8 samples");
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= N;
    double m2 = 0, m3 = 0, m4 = 0;
    for (double v : x) {
        double d = v - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m2 /= N;
    m3 /= N;
    m4 /= N;
    if (!(m2 > 1e-300) || m2 <= 1e-24 * (mean * mean)) throw NumericError("samples have zero variance");
    GaussianityReport r;
    r.skewness = m3 / std::pow(m2, 1.5);
    r.excess_kurtosis = m4 / (m2 * m2) - 3.0;
    double se_skew = std::sqrt(6.0 * N * (N - 1.0) / ((N - 2.0) * (N + 1.0) * (N + 3.0)));
    double se_kurt = 2.0 * se_skew * std::sqrt((N * N - 1.0) / ((N - 3.0) * (N + 5.0)));
    r.skew_z = r.skewness / se_skew;
    r.kurt_z = r.excess_kurtosis / se_kurt;
    return r;
}

LinearFit weighted_linear_fit(const std::vector<double>& x, const std::vector<double>& y,
                              const std::vector<double>& sigma) {
    if (x.size() != y.size() || x.size() != sigma.size() || x.size() < 2)
        throw ParameterError("fit needs matching inputs with at least two points");
    double S = 0, Sx = 0, Sy = 0, Sxx = 0, Sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double w = 1.0 / (sigma[i] * sigma[i]);
        S += w;
        Sx += w * x[i];
        Sy += w * y[i];
        Sxx += w * x[i] * x[i];
        Sxy += w * x[i] * y[i];
    }
    double det = S * Sxx - Sx * Sx;
    if (!(det > 0)) throw NumericError("degenerate fit");
    LinearFit f;
    f.slope = (S * Sxy - Sx * Sy) / det;
    f.intercept = (Sxx * Sy - Sx * Sxy) / det;
    f.slope_se = std::sqrt(S / det);
    return f;
}

}  // namespace htev
