#pragma once

// Closed-form concentration bounds behind the convergence guarantee, and a
// one-sided Monte Carlo check of the guarantee.

#include "mfgsec/algorithm_runner.hpp"

#include <cstdint>
#include <limits>

namespace mfgsec::bounds {

struct BoundParams {
    double n = 1.0;
    double c0 = 0.0, c1 = 0.0, c2 = 0.0, c3 = 0.0, c4 = 0.0;
    double m_norm_max = 1.0;
    double varsigma1 = 0.0;
    double varsigma2 = 0.0;
    double theta_eve_minus = 0.0;
    double theta_eve_plus = 0.0;
    double kl_inf = 0.0;
    double set_size = 0.0;

    void validate() const;
};

struct BoundTerms {
    double a = 0.0;  // 2 exp(-n c1^2 / 2)
    double b = 0.0;  // 2 exp(-c2^2 / (2 max|M|^2))
    double c = 0.0;  // exp((theta- - theta+)^2 / 8 - c3)
};

BoundTerms bound_terms(const BoundParams& params);

struct ClampFlags {
    bool a = false;
    bool b = false;
    bool c = false;
    bool any() const { return a || b || c; }
};

struct BoundReport {
    double a = 0.0, b = 0.0, c = 0.0;
    double p1 = 0.0;
    double p2 = 0.0;
    double varrho = 1.0;
    double complexity = 0.0;
    bool complexity_infinite = false;
    ClampFlags clamped;
};

// Each complement 1 - a, 1 - b, 1 - c is clamped into [0, 1] (and flagged)
// before the product. P1 ignores c, so p2 = p1.
BoundReport convergence_probability(const BoundParams& params, algo::Problem problem);

struct ClampedProbability {
    double value = 0.0;
    double raw = 0.0;
    bool clamped = false;
};

// 2 exp(-2 c0^2 / (steps (varsigma2 - varsigma1)^2)).
ClampedProbability azuma_bound(const BoundParams& params, std::size_t steps);

// set_size * exp(-n kl_inf).
double sanov_bound(const BoundParams& params);

// exp((theta_minus - theta_plus)^2 / 8).
double hoeffding_mgf_bound(double theta_minus, double theta_plus);

struct ValidationReport {
    std::size_t reps = 0;
    std::size_t converged = 0;
    double frequency = 0.0;
    double bound = 0.0;
    double upper = 0.0;  // frequency + 3 sqrt(f (1 - f) / reps)
    bool pass = false;
};

// One-sided check of a claimed lower bound from `successes` out of `reps`.
ValidationReport one_sided_check(std::size_t successes, std::size_t reps, double bound);

// Runs the algorithm `reps` times with seeds derived from config.seed and
// checks the convergence frequency against p2 of the matching problem.
ValidationReport empirical_convergence_check(const algo::AlgorithmConfig& config, const BoundParams& params,
                                             std::size_t reps);

}  // namespace mfgsec::bounds
