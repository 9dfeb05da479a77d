#include "mfgsec/mr_pipeline.hpp"

#include "mfgsec/errors.hpp"
#include "mfgsec/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

namespace mfgsec::mr {

namespace {

bool finite(double v) { return std::isfinite(v); }

bool all_finite(const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

// Unit-variance draw from the requested law.
double unit_error(Rng& rng, ErrorLaw law) {
    switch (law) {
    case ErrorLaw::gaussian:
        return rng.normal();
    case ErrorLaw::uniform:
        return std::sqrt(3.0) * (2.0 * rng.uniform() - 1.0);
    case ErrorLaw::laplace: {
        const double e = rng.exponential(1.0);
        return (rng.uniform() < 0.5 ? -e : e) / std::sqrt(2.0);
    }
    }
    return 0.0;
}

struct Slope {
    double beta = 0.0;
    double se = 0.0;
};

Slope univariate_slope(const Eigen::Ref<const Eigen::VectorXd>& g, const Eigen::VectorXd& target) {
    const auto n = static_cast<double>(g.size());
    const double gm = g.mean();
    const double tm = target.mean();
    const Eigen::ArrayXd gc = g.array() - gm;
    const Eigen::ArrayXd tc = target.array() - tm;
    const double sxx = (gc * gc).sum();
    if (!(sxx > 0.0)) throw SingularityError("summary_stats: constant instrument column");
    Slope s;
    s.beta = (gc * tc).sum() / sxx;
    const double rss = ((tc - s.beta * gc).square()).sum();
    s.se = std::sqrt(std::max(rss, 0.0) / (n - 2.0) / sxx);
    return s;
}

}  // namespace

void validate(const DesignParams& p) {
    const bool numbers_ok = finite(p.power_threshold) && finite(p.user_radius) &&
                            finite(p.channel_magnitude) && all_finite(p.angular_positions) &&
                            all_finite(p.rotation_angles);
    if (!numbers_ok) throw InvalidInput("design parameters must be finite");
    if (p.min_antennas < 1) throw InvalidInput("L must be a positive integer");
    if (p.ell < 0 || p.ell > p.min_antennas) throw InvalidInput("mode index must lie in [0, L]");
    if (p.power_threshold < 0.0) throw InvalidInput("psi0 must be non-negative");
    if (p.antenna_pairs < 1) throw InvalidInput("psi1 must be at least 1");
    if (!(p.user_radius > 0.0)) throw InvalidInput("psi3 must be positive");
}

double default_mode_gain(int ell, int min_antennas) {
    const double l = ell;
    const double big_l = min_antennas;
    return std::exp(-l * l / (2.0 * big_l * big_l));
}

double sinr_quality(const DesignParams& params, const SinrModel& model) {
    validate(params);
    const double gain = model.gain(params.ell, params.min_antennas);
    const double crosstalk = model.crosstalk(params);
    if (!finite(gain) || !finite(crosstalk) || crosstalk <= -1.0)
        throw InvalidInput("SINR model returned an invalid gain or crosstalk");
    return params.power_threshold * params.channel_magnitude * params.channel_magnitude * gain /
           (1.0 + crosstalk);
}

void validate(const StructuralModel& m) {
    const auto p = m.beta_x.size();
    if (p < 1) throw InvalidInput("structural model needs at least one instrument");
    if (m.alpha.size() != 0 && m.alpha.size() != p)
        throw InvalidInput("alpha must have one entry per instrument");
    // var = 0 is accepted as the noiseless limit.
    if (!(m.var_x >= 0.0) || !(m.var_y >= 0.0)) throw InvalidInput("noise variances must be non-negative");
    const bool ok = finite(m.beta_x0) && finite(m.gamma_x) && finite(m.theta0) && finite(m.theta) &&
                    finite(m.gamma_y) && finite(m.var_x) && finite(m.var_y) && m.beta_x.allFinite() &&
                    m.alpha.allFinite();
    if (!ok) throw InvalidInput("structural model parameters must be finite");
}

SampleBatch generate_samples(const StructuralModel& model, std::size_t n, std::uint64_t seed) {
    if (n == 0) throw InvalidInput("generate_samples: n must be at least 1");
    validate(model);
    const auto p = model.instruments();
    const auto rows = static_cast<Eigen::Index>(n);
    const Eigen::VectorXd alpha = model.alpha.size() == 0 ? Eigen::VectorXd::Zero(p) : model.alpha;
    const double sx = std::sqrt(model.var_x);
    const double sy = std::sqrt(model.var_y);

    Rng rng(seed);
    SampleBatch b;
    b.g.resize(rows, p);
    b.x.resize(rows);
    b.y.resize(rows);
    b.v.resize(rows);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < p; ++j) b.g(i, j) = rng.normal();
        b.v(i) = rng.normal();
        const double ex = unit_error(rng, model.err_x);
        const double ey = unit_error(rng, model.err_y);
        const double gx = b.g.row(i).dot(model.beta_x);
        const double ga = b.g.row(i).dot(alpha);
        b.x(i) = model.beta_x0 + gx + model.gamma_x * b.v(i) + sx * ex;
        b.y(i) = model.theta0 + model.theta * b.x(i) + ga + model.gamma_y * b.v(i) + sy * ey;
    }
    return b;
}

SummaryStats summary_stats(const SampleBatch& batch) {
    const auto n = batch.size();
    const auto p = batch.instruments();
    if (batch.g.rows() != n || batch.y.size() != n || batch.v.size() != n)
        throw InvalidInput("summary_stats: inconsistent batch lengths");
    if (n < p + 2) throw InvalidInput("summary_stats: need n >= p + 2");
    SummaryStats s;
    s.beta_hat_x.resize(p);
    s.beta_hat_y.resize(p);
    s.se_x.resize(p);
    s.se_y.resize(p);
    for (Eigen::Index j = 0; j < p; ++j) {
        const Slope sx = univariate_slope(batch.g.col(j), batch.x);
        const Slope sy = univariate_slope(batch.g.col(j), batch.y);
        s.beta_hat_x(j) = sx.beta;
        s.se_x(j) = sx.se;
        s.beta_hat_y(j) = sy.beta;
        s.se_y(j) = sy.se;
    }
    return s;
}

namespace {

Eigen::VectorXd ivw_weights(const SummaryStats& s) {
    const auto p = s.instruments();
    if (s.beta_hat_y.size() != p || s.se_y.size() != p)
        throw InvalidInput("summary statistics have inconsistent lengths");
    Eigen::VectorXd w(p);
    bool exact = false;
    for (Eigen::Index j = 0; j < p; ++j) exact = exact || s.se_y(j) <= 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
        if (exact) {
            w(j) = s.se_y(j) <= 0.0 ? 1.0 : 0.0;
        } else {
            w(j) = 1.0 / (s.se_y(j) * s.se_y(j));
        }
    }
    return w;
}

}  // namespace

double estimate_theta(const SummaryStats& stats) {
    const Eigen::VectorXd w = ivw_weights(stats);
    const Eigen::ArrayXd bx = stats.beta_hat_x.array();
    const Eigen::ArrayXd by = stats.beta_hat_y.array();
    const double den = (w.array() * bx * bx).sum();
    if (!(den > 0.0)) throw NoInstrumentError("estimate_theta: no instrument with non-zero exposure effect");
    return (w.array() * bx * by).sum() / den;
}

InterceptFit estimate_theta_intercept(const SummaryStats& stats) {
    const auto p = stats.instruments();
    if (p < 2) throw UnderdeterminedError("estimate_theta_intercept: need at least two instruments");
    const Eigen::VectorXd w = ivw_weights(stats);
    const double sw = w.sum();
    const double mx = (w.array() * stats.beta_hat_x.array()).sum() / sw;
    const double my = (w.array() * stats.beta_hat_y.array()).sum() / sw;
    const Eigen::ArrayXd dx = stats.beta_hat_x.array() - mx;
    const Eigen::ArrayXd dy = stats.beta_hat_y.array() - my;
    const double sxx = (w.array() * dx * dx).sum();
    if (!(sxx > 0.0))
        throw UnderdeterminedError("estimate_theta_intercept: exposure effects are all identical");
    InterceptFit fit;
    fit.theta = (w.array() * dx * dy).sum() / sxx;
    fit.theta0 = my - fit.theta * mx;
    return fit;
}

std::vector<int> quantize(std::span<const double> v, int bins) {
    if (bins < 2) throw InvalidInput("quantize: bins must be at least 2");
    std::vector<int> out(v.size(), 0);
    if (v.empty()) return out;
    const auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
    const double lo = *lo_it;
    const double hi = *hi_it;
    if (!std::isfinite(lo) || !std::isfinite(hi)) throw InvalidInput("quantize: non-finite value");
    if (!(hi > lo)) return out;
    const double width = (hi - lo) / bins;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const int k = static_cast<int>((v[i] - lo) / width);
        out[i] = std::clamp(k, 0, bins - 1);
    }
    return out;
}

double conditional_mi(std::span<const double> a, std::span<const double> b,
                      const std::vector<std::span<const double>>& cond, int bins) {
    const std::size_t n = a.size();
    if (b.size() != n) throw InvalidInput("conditional_mi: length mismatch");
    for (const auto& c : cond)
        if (c.size() != n) throw InvalidInput("conditional_mi: length mismatch");
    if (bins < 2) throw InvalidInput("conditional_mi: bins must be at least 2");
    if (n == 0) return 0.0;

    const auto qa = quantize(a, bins);
    const auto qb = quantize(b, bins);
    std::vector<long long> cell(n, 0);
    for (const auto& c : cond) {
        const auto qc = quantize(c, bins);
        for (std::size_t i = 0; i < n; ++i) cell[i] = cell[i] * bins + qc[i];
    }

    const auto nb = static_cast<long long>(bins);
    std::unordered_map<long long, double> n_abc, n_ac, n_bc, n_c;
    for (std::size_t i = 0; i < n; ++i) {
        const long long c = cell[i];
        n_abc[(c * nb + qa[i]) * nb + qb[i]] += 1.0;
        n_ac[c * nb + qa[i]] += 1.0;
        n_bc[c * nb + qb[i]] += 1.0;
        n_c[c] += 1.0;
    }
    double mi = 0.0;
    for (const auto& [key, count] : n_abc) {
        const long long bq = key % nb;
        const long long aq = (key / nb) % nb;
        const long long c = key / (nb * nb);
        mi += count * std::log(count * n_c[c] / (n_ac[c * nb + aq] * n_bc[c * nb + bq]));
    }
    return std::max(0.0, mi / static_cast<double>(n));
}

double conditional_mi(std::span<const double> a, std::span<const double> b,
                      std::span<const double> cond, int bins) {
    return conditional_mi(a, b, std::vector<std::span<const double>>{cond}, bins);
}

double mutual_information(std::span<const double> a, std::span<const double> b, int bins) {
    return conditional_mi(a, b, std::vector<std::span<const double>>{}, bins);
}

MarkovReport validate_markov_conditions(const SampleBatch& batch, int bins, const MarkovThresholds& t) {
    const auto n = batch.size();
    const auto p = batch.instruments();
    if (n < 1 || p < 1 || batch.g.rows() != n || batch.y.size() != n || batch.v.size() != n)
        throw InvalidInput("validate_markov_conditions: invalid batch");
    if (!batch.g.allFinite() || !batch.x.allFinite() || !batch.y.allFinite() || !batch.v.allFinite())
        throw InvalidInput("validate_markov_conditions: non-finite entries");

    const std::span<const double> x(batch.x.data(), static_cast<std::size_t>(n));
    const std::span<const double> y(batch.y.data(), static_cast<std::size_t>(n));
    const std::span<const double> v(batch.v.data(), static_cast<std::size_t>(n));

    MarkovReport r;
    r.independence.threshold = t.mi_nats;
    r.exclusion.threshold = t.mi_nats;
    r.relevance.threshold = t.min_t_stat;
    r.relevance.statistic = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < p; ++j) {
        const Eigen::VectorXd col = batch.g.col(j);
        const std::span<const double> g(col.data(), static_cast<std::size_t>(n));
        r.independence.statistic = std::max(r.independence.statistic, mutual_information(g, v, bins));
        r.exclusion.statistic = std::max(r.exclusion.statistic, conditional_mi(g, y, {x, v}, bins));
    }
    const SummaryStats s = summary_stats(batch);
    for (Eigen::Index j = 0; j < p; ++j) {
        const double tstat = s.se_x(j) > 0.0 ? std::abs(s.beta_hat_x(j)) / s.se_x(j)
                                              : (s.beta_hat_x(j) != 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
        r.relevance.statistic = std::min(r.relevance.statistic, tstat);
    }
    r.independence.pass = r.independence.statistic < t.mi_nats;
    r.exclusion.pass = r.exclusion.statistic < t.mi_nats;
    r.relevance.pass = r.relevance.statistic >= t.min_t_stat;
    return r;
}

}  // namespace mfgsec::mr
