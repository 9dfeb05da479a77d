#include "mfgsec/randomization_outage.hpp"

#include "mfgsec/errors.hpp"
#include "mfgsec/random.hpp"
#include "mfgsec/stats.hpp"

#include <algorithm>
#include <cmath>

namespace mfgsec::outage {

SvdFactors decompose_design(const Eigen::MatrixXd& g) {
    if (g.size() == 0) throw InvalidInput("decompose_design: empty matrix");
    if (!g.allFinite()) throw InvalidInput("decompose_design: non-finite entries");
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(g, Eigen::ComputeThinU | Eigen::ComputeThinV);
    SvdFactors f;
    f.u1 = svd.matrixU();
    f.sigma = svd.singularValues();
    f.u2 = svd.matrixV().transpose();
    return f;
}

double PdfTable::mass() const { return stats::trapezoid(density, dx); }

void PdfTable::validate() const {
    if (density.size() < 2) throw InvalidInput("pdf table needs at least two points");
    if (!(dx > 0.0) || !std::isfinite(dx) || !std::isfinite(x0)) throw InvalidInput("pdf table grid is invalid");
    for (double d : density)
        if (!(d >= 0.0) || !std::isfinite(d)) throw InvalidInput("pdf table densities must be finite and >= 0");
    if (!(mass() > 0.0)) throw InvalidInput("pdf table has zero mass");
}

PdfTable PdfTable::from_function(const std::function<double(double)>& f, double a, double b, std::size_t points) {
    if (points < 2 || !(b > a)) throw InvalidInput("pdf table needs b > a and at least two points");
    PdfTable t;
    t.x0 = a;
    t.dx = (b - a) / static_cast<double>(points - 1);
    t.density.resize(points);
    for (std::size_t i = 0; i < points; ++i) t.density[i] = f(t.x(i));
    t.validate();
    return t;
}

PdfTable PdfTable::normalized() const {
    validate();
    PdfTable t = *this;
    const double m = mass();
    for (double& d : t.density) d /= m;
    return t;
}

PdfTable scaled_control_pdf(const PdfTable& table, double theta_prime) {
    table.validate();
    if (theta_prime == 0.0 || !std::isfinite(theta_prime))
        throw DegenerateScaleError("scaled_control_pdf: theta_prime must be finite and non-zero");
    const double scale = std::abs(theta_prime);
    PdfTable out;
    out.dx = table.dx * scale;
    out.density.resize(table.size());
    if (theta_prime > 0.0) {
        out.x0 = table.x0 * theta_prime;
        for (std::size_t i = 0; i < table.size(); ++i) out.density[i] = table.density[i] / scale;
    } else {
        out.x0 = table.x_end() * theta_prime;
        const std::size_t n = table.size();
        for (std::size_t i = 0; i < n; ++i) out.density[i] = table.density[n - 1 - i] / scale;
    }
    return out;
}

std::vector<double> cdf_nodes(const PdfTable& table) {
    table.validate();
    std::vector<double> cdf(table.size(), 0.0);
    for (std::size_t i = 1; i < table.size(); ++i)
        cdf[i] = cdf[i - 1] + 0.5 * table.dx * (table.density[i - 1] + table.density[i]);
    const double total = cdf.back();
    for (double& c : cdf) c /= total;
    cdf.back() = 1.0;
    return cdf;
}

std::vector<double> inverse_cdf_sample(const PdfTable& table, std::span<const double> u) {
    const auto cdf = cdf_nodes(table);
    std::vector<double> out(u.size());
    for (std::size_t k = 0; k < u.size(); ++k) {
        const double p = u[k];
        if (!(p >= 0.0 && p <= 1.0)) throw InvalidInput("inverse_cdf_sample: uniforms must lie in [0, 1]");
        // First node with cdf >= p; flat stretches map to their right end for p > 0.
        auto it = std::lower_bound(cdf.begin(), cdf.end(), p);
        auto j = static_cast<std::size_t>(it - cdf.begin());
        if (j == 0) {
            // p == 0: start of the support.
            std::size_t s = 0;
            while (s + 1 < cdf.size() && cdf[s + 1] == 0.0) ++s;
            out[k] = table.x(s);
            continue;
        }
        const double lo = cdf[j - 1];
        const double hi = cdf[j];
        const double frac = hi > lo ? (p - lo) / (hi - lo) : 1.0;
        out[k] = table.x(j - 1) + frac * table.dx;
    }
    return out;
}

double effective_theta_prime(const mr::StructuralModel& model, const SvdFactors& design, Eigen::Index rows) {
    if (design.sigma.size() == 0 || rows < 1) throw InvalidInput("effective_theta_prime: empty design");
    if (design.u2.cols() != model.beta_x.size()) throw InvalidInput("effective_theta_prime: design width mismatch");
    const double loading = std::abs(design.u2.row(0).dot(model.beta_x));
    return model.theta * loading * design.sigma(0) / std::sqrt(static_cast<double>(rows));
}

OutageReport outage_probability(const OutageConfig& config, std::uint64_t seed) {
    if (config.mc_samples < 100) throw InvalidInput("outage_probability: need at least 100 samples");
    if (!config.theta_prime) throw ConfigurationError("outage_probability: theta_prime is not set");
    const PdfTable base = config.pdf_table;
    base.validate();
    if (std::abs(base.mass() - 1.0) > 1e-6) throw InvalidInput("outage_probability: pdf table must integrate to 1");
    const PdfTable scaled = scaled_control_pdf(base, *config.theta_prime);

    Rng rng(derive_seed(seed, 0xA0));
    std::vector<double> u(config.mc_samples);
    for (double& v : u) v = rng.uniform();
    const auto draws = inverse_cdf_sample(scaled, u);

    OutageReport r;
    r.threshold = config.threshold();
    r.samples = config.mc_samples;
    r.theta_prime = *config.theta_prime;
    const auto hits = std::count_if(draws.begin(), draws.end(), [&](double z) { return z <= r.threshold; });
    const double n = static_cast<double>(config.mc_samples);
    r.estimate = static_cast<double>(hits) / n;
    r.std_error = std::sqrt(r.estimate * (1.0 - r.estimate) / n);
    return r;
}

OutageReport outage_probability(const OutageConfig& config, const mr::StructuralModel& model, std::uint64_t seed) {
    if (config.theta_prime) return outage_probability(config, seed);
    if (config.design_rows < 1) throw InvalidInput("outage_probability: design_rows must be positive");
    const auto batch = mr::generate_samples(model, config.design_rows, derive_seed(seed, 0xA1));
    const auto svd = decompose_design(batch.g);
    OutageConfig resolved = config;
    resolved.theta_prime = effective_theta_prime(model, svd, batch.g.rows());
    return outage_probability(resolved, seed);
}

}  // namespace mfgsec::outage
