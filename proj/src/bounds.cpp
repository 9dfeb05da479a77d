#include "mfgsec/bounds.hpp"

#include "mfgsec/errors.hpp"
#include "mfgsec/random.hpp"

#include <algorithm>
#include <cmath>

namespace mfgsec::bounds {

namespace {

double clamp_flag(double v, bool& flag) {
    const double c = std::clamp(v, 0.0, 1.0);
    flag = c != v;
    return c;
}

}  // namespace

void BoundParams::validate() const {
    for (double v : {n, c0, c1, c2, c3, c4, m_norm_max, kl_inf, set_size})
        if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidInput("bound constants must be finite and >= 0");
    if (!std::isfinite(varsigma1) || !std::isfinite(varsigma2)) throw InvalidInput("varsigma must be finite");
    if (!std::isfinite(theta_eve_minus) || !std::isfinite(theta_eve_plus)) throw InvalidInput("theta_eve bounds must be finite");
}

BoundTerms bound_terms(const BoundParams& params) {
    params.validate();
    if (!(params.m_norm_max > 0.0)) throw InvalidInput("m_norm_max must be positive");
    const double d = params.theta_eve_minus - params.theta_eve_plus;
    return {2.0 * std::exp(-params.n * params.c1 * params.c1 / 2.0),
            2.0 * std::exp(-params.c2 * params.c2 / (2.0 * params.m_norm_max * params.m_norm_max)),
            std::exp(d * d / 8.0 - params.c3)};
}

BoundReport convergence_probability(const BoundParams& params, algo::Problem problem) {
    const auto t = bound_terms(params);
    BoundReport r;
    r.a = t.a;
    r.b = t.b;
    r.c = problem == algo::Problem::P2 ? t.c : 0.0;
    const double fa = clamp_flag(1.0 - r.a, r.clamped.a);
    const double fb = clamp_flag(1.0 - r.b, r.clamped.b);
    const double fc = clamp_flag(1.0 - r.c, r.clamped.c);
    r.p1 = fa * fb;
    r.p2 = r.p1 * fc;
    r.varrho = 1.0 - r.p2;
    if (r.varrho > 0.0) {
        r.complexity = std::log(1.0 / r.varrho);
    } else {
        r.complexity = std::numeric_limits<double>::infinity();
        r.complexity_infinite = true;
    }
    return r;
}

ClampedProbability azuma_bound(const BoundParams& params, std::size_t steps) {
    params.validate();
    if (params.varsigma2 < params.varsigma1) throw InvalidInput("azuma_bound needs varsigma2 >= varsigma1");
    const double range = params.varsigma2 - params.varsigma1;
    const double denom = static_cast<double>(steps) * range * range;
    ClampedProbability p;
    if (denom == 0.0) {
        // Deterministic martingale: no deviation is possible unless c0 = 0.
        p.raw = params.c0 > 0.0 ? 0.0 : 1.0;
    } else {
        p.raw = 2.0 * std::exp(-2.0 * params.c0 * params.c0 / denom);
    }
    p.value = clamp_flag(p.raw, p.clamped);
    return p;
}

double sanov_bound(const BoundParams& params) {
    params.validate();
    if (params.kl_inf == 0.0) return params.set_size;
    return params.set_size * std::exp(-params.n * params.kl_inf);
}

double hoeffding_mgf_bound(double theta_minus, double theta_plus) {
    if (!std::isfinite(theta_minus) || !std::isfinite(theta_plus)) throw InvalidInput("hoeffding_mgf_bound needs finite inputs");
    const double d = theta_minus - theta_plus;
    return std::exp(d * d / 8.0);
}

ValidationReport one_sided_check(std::size_t successes, std::size_t reps, double bound) {
    if (reps == 0 || successes > reps) throw InvalidInput("one_sided_check: bad counts");
    ValidationReport r;
    r.reps = reps;
    r.converged = successes;
    r.frequency = static_cast<double>(successes) / static_cast<double>(reps);
    r.bound = bound;
    r.upper = r.frequency + 3.0 * std::sqrt(r.frequency * (1.0 - r.frequency) / static_cast<double>(reps));
    r.pass = r.upper >= bound;
    return r;
}

ValidationReport empirical_convergence_check(const algo::AlgorithmConfig& config, const BoundParams& params,
                                             std::size_t reps) {
    if (reps < 50) throw InvalidInput("empirical_convergence_check needs at least 50 replications");
    const double bound = convergence_probability(params, config.mode).p2;
    std::size_t successes = 0;
    for (std::size_t i = 0; i < reps; ++i) {
        algo::AlgorithmConfig run = config;
        run.seed = derive_seed(config.seed, 0xD0 + i);
        try {
            const auto result = algo::run_algorithm1(run);
            if (!result.error.empty()) throw StateError(result.error);
            if (result.converged) ++successes;
        } catch (const Error& e) {
            throw RunError(e.what(), i);
        }
    }
    return one_sided_check(successes, reps, bound);
}

}  // namespace mfgsec::bounds
