#pragma once

#include <functional>
#include <span>
#include <vector>

namespace mfgsec::stats {

// Gaussian upper tail Q(x) = P(N(0,1) > x).
double gaussian_q(double x);

double mean(std::span<const double> v);
// Unbiased sample variance; 0 for fewer than two values.
double variance(std::span<const double> v);
double median(std::vector<double> v);

// One-sample Kolmogorov-Smirnov statistic sup |F_n - F|.
double ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf);

// Asymptotic p-value of the KS statistic d for sample size n (Kolmogorov distribution).
double ks_pvalue(double d, std::size_t n);

// Kendall rank correlation (tau-b) and its large-sample z score.
struct KendallResult {
    double tau = 0.0;
    double z = 0.0;
};
KendallResult kendall_tau(std::span<const double> x, std::span<const double> y);

// Trapezoid weights for a grid of n points with constant spacing h.
std::vector<double> trapezoid_weights(std::size_t n, double h);
double trapezoid(std::span<const double> f, double h);

}  // namespace mfgsec::stats
