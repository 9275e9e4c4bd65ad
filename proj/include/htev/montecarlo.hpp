#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "htev/eigenprocess.hpp"
#include "htev/ensembles.hpp"

namespace htev {

enum class PointKind { Bivariate, Eigenvalue, Resolvent };

struct ProcessPoint {
    PointKind kind = PointKind::Bivariate;
    double s = 0.0;
    double t = 0.0;  // t for B^n, lambda for C^n
    cplx z = 0.0;    // for X^n

    static ProcessPoint bivariate(double s, double t) { return {PointKind::Bivariate, s, t, 0.0}; }
    static ProcessPoint eigenvalue(double s, double lambda) { return {PointKind::Eigenvalue, s, lambda, 0.0}; }
    static ProcessPoint resolvent(double s, cplx z) { return {PointKind::Resolvent, s, 0.0, z}; }
};

cplx evaluate_point(const SpectralDecomposition& dec, const ProcessPoint& p);

struct CovEstimate {
    std::vector<ProcessPoint> points;
    int R = 0;
    int n = 0;
    Eigen::VectorXcd mean;
    Eigen::MatrixXcd cov;       // E[(X - m)(X' - m)]
    Eigen::MatrixXcd cov_conj;  // E[(X - m) conj(X' - m)]
    Eigen::MatrixXcd se_cov;    // jackknife, real and imaginary parts separately
    Eigen::MatrixXcd se_cov_conj;
    Eigen::MatrixXcd samples;   // R x P raw values
};

// Run f(dec, r) for r = 0..R-1 over `workers` threads. Each r is handled
// exactly once; callers write into slot r so reductions stay ordered.
void for_each_replicate(const EnsembleSpec& spec, int n, int R, int workers,
                        const std::function<void(const SpectralDecomposition&, int)>& f);

CovEstimate estimate_cov(const EnsembleSpec& spec, int n, int R, const std::vector<ProcessPoint>& points,
                         int workers = 1);

// covariance with jackknife errors from an R x P sample matrix
CovEstimate covariance_from_samples(const Eigen::MatrixXcd& samples);

// (s_n - s_n^2) E^[X_1 (X_1 - X_2)] for a single decomposition
double exchangeable_variance_stat(const SpectralDecomposition& dec, double s, double lambda);

struct ExchangeableComparison {
    double exchangeable;  // mean over replicates of the row-pair estimator
    double exchangeable_se;
    double direct;        // sample variance of C^n_{s,lambda}
    double direct_se;
    double difference_se; // jackknife of the difference
};

ExchangeableComparison variance_exchangeable(const std::vector<SpectralDecomposition>& batch, double s,
                                             double lambda);
ExchangeableComparison variance_exchangeable(const EnsembleSpec& spec, int n, int R, double s, double lambda,
                                             int workers = 1);

struct ScalingReport {
    std::vector<int> n_list;
    std::vector<double> variance;
    std::vector<double> variance_se;
    double slope = 0.0;
    double slope_se = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
};

ScalingReport scaling_scan(const EnsembleSpec& spec, const std::vector<int>& n_list, int R, double s, double t,
                           int workers = 1);

struct TightnessEntry {
    double s, sp, t, tp;
    double fourth_moment;
    double std_err;
    double bound;
    double ratio;  // (estimate - 3 std_err) / bound
};

struct TightnessReport {
    std::vector<TightnessEntry> entries;
    double max_ratio = 0.0;
    bool pass = true;
};

// 7/n + 6 a^2 b^2 with a = |I|/n (1 - |I|/n), b^2 = |J|^2/(n(n-1)), the
// discrete form of the fourth-moment increment bound
double tightness_bound(int n, double s, double sp, double t, double tp);

TightnessReport tightness_check(const EnsembleSpec& spec, int n, int R, const std::vector<double>& grid,
                                int workers = 1);

}  // namespace htev
