#pragma once

#include <functional>
#include <vector>

namespace htev {

// leave-one-out jackknife standard error from the R leave-one-out values
double jackknife_se(const std::vector<double>& loo);

// jackknife standard error of an arbitrary statistic of R samples
double jackknife_se(std::size_t R, const std::function<double(std::size_t skip)>& stat_without);

struct GaussianityReport {
    double skewness;
    double excess_kurtosis;
    double skew_z;
    double kurt_z;
};

GaussianityReport gaussianity_diag(const std::vector<double>& samples);

struct LinearFit {
    double slope;
    double intercept;
    double slope_se;
};

// weighted least squares y = a + b x with weights 1/sigma^2
LinearFit weighted_linear_fit(const std::vector<double>& x, const std::vector<double>& y,
                              const std::vector<double>& sigma);

}  // namespace htev
