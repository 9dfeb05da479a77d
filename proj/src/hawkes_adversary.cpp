#include "mfgsec/hawkes_adversary.hpp"

#include "mfgsec/errors.hpp"
#include "mfgsec/random.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <string>

namespace mfgsec::hawkes {

namespace {

constexpr std::uint64_t kThinningStream = 0xB0;
constexpr std::uint64_t kClusterStream = 0xB1;
constexpr std::uint64_t kEveStream = 0xB2;

void check_time(const HawkesModel& model, double t) {
    if (!(t >= 0.0) || t > model.horizon) throw InvalidInput("time " + std::to_string(t) + " outside [0, horizon]");
}

void check_state(const HawkesModel& model, const HawkesState& state) {
    if (state.events.size() != static_cast<std::size_t>(model.dims()))
        throw InvalidInput("hawkes state dimension does not match the model");
}

}  // namespace

HawkesModel HawkesModel::univariate(double gamma, double alpha, double beta, double horizon) {
    HawkesModel m;
    m.gamma = Eigen::VectorXd::Constant(1, gamma);
    m.alpha = Eigen::MatrixXd::Constant(1, 1, alpha);
    m.beta = Eigen::MatrixXd::Constant(1, 1, beta);
    m.horizon = horizon;
    return m;
}

Eigen::MatrixXd HawkesModel::branching_matrix() const { return alpha.cwiseQuotient(beta); }

double HawkesModel::spectral_radius() const {
    const Eigen::VectorXcd ev = branching_matrix().eigenvalues();
    return ev.cwiseAbs().maxCoeff();
}

void HawkesModel::validate() const {
    const Eigen::Index n = dims();
    if (n < 1) throw InvalidInput("hawkes model needs at least one dimension");
    if (alpha.rows() != n || alpha.cols() != n || beta.rows() != n || beta.cols() != n)
        throw InvalidInput("alpha and beta must be dims x dims");
    if (!gamma.allFinite() || gamma.minCoeff() < 0.0) throw InvalidInput("gamma must be finite and >= 0");
    if (!alpha.allFinite() || alpha.minCoeff() < 0.0) throw InvalidInput("alpha must be finite and >= 0");
    if (!beta.allFinite() || !(beta.minCoeff() > 0.0)) throw InvalidInput("beta must be finite and > 0");
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw InvalidInput("horizon must be positive");
    const double rho = spectral_radius();
    if (rho >= 1.0 && !allow_nonstationary)
        throw NonStationaryError("branching spectral radius " + std::to_string(rho) + " >= 1", rho);
}

IntensityCursor::IntensityCursor(const HawkesModel& model, const std::vector<std::vector<double>>& events)
    : model_(&model), events_(&events) {
    reset();
}

void IntensityCursor::reset() {
    const Eigen::Index n = model_->dims();
    next_.assign(static_cast<std::size_t>(n), 0);
    excitation_ = Eigen::MatrixXd::Zero(n, n);
    time_ = 0.0;
}

Eigen::VectorXd IntensityCursor::at(double t) {
    if (t < time_) reset();
    const Eigen::Index n = model_->dims();
    const auto& ev = *events_;
    while (true) {
        // Earliest unprocessed event strictly before t.
        Eigen::Index j_min = -1;
        double s_min = t;
        for (Eigen::Index j = 0; j < n; ++j) {
            const auto& ej = ev[static_cast<std::size_t>(j)];
            const std::size_t k = next_[static_cast<std::size_t>(j)];
            if (k < ej.size() && ej[k] < s_min) {
                s_min = ej[k];
                j_min = j;
            }
        }
        if (j_min < 0) break;
        excitation_ = excitation_.cwiseProduct((-model_->beta * (s_min - time_)).array().exp().matrix());
        excitation_.col(j_min) += model_->alpha.col(j_min);
        time_ = s_min;
        ++next_[static_cast<std::size_t>(j_min)];
    }
    const Eigen::MatrixXd decayed = excitation_.cwiseProduct((-model_->beta * (t - time_)).array().exp().matrix());
    return model_->gamma + decayed.rowwise().sum();
}

std::size_t HawkesState::total_events() const {
    std::size_t s = 0;
    for (const auto& e : events) s += e.size();
    return s;
}

HawkesState simulate_hawkes(const HawkesModel& model, std::uint64_t seed) {
    model.validate();
    const Eigen::Index n = model.dims();
    HawkesState state;
    state.events.resize(static_cast<std::size_t>(n));
    state.intensity_at_event.resize(static_cast<std::size_t>(n));
    Rng rng(derive_seed(seed, kThinningStream));

    Eigen::MatrixXd excitation = Eigen::MatrixXd::Zero(n, n);
    double t = 0.0;
    while (true) {
        // Kernels are non-increasing, so the intensity just after t bounds it until the next event.
        const double bound = model.gamma.sum() + excitation.sum();
        if (!(bound > 0.0)) break;
        const double dt = rng.exponential(bound);
        if (t + dt > model.horizon) break;
        excitation = excitation.cwiseProduct((-model.beta * dt).array().exp().matrix());
        t += dt;
        const Eigen::VectorXd lam = model.gamma + excitation.rowwise().sum();
        const double u = rng.uniform() * bound;
        if (u >= lam.sum()) continue;
        Eigen::Index dim = 0;
        double acc = lam(0);
        while (u >= acc && dim + 1 < n) acc += lam(++dim);
        state.events[static_cast<std::size_t>(dim)].push_back(t);
        state.intensity_at_event[static_cast<std::size_t>(dim)].push_back(lam(dim));
        excitation.col(dim) += model.alpha.col(dim);
    }
    return state;
}

Eigen::VectorXd intensity_eval(const HawkesModel& model, const HawkesState& state, double t) {
    check_time(model, t);
    check_state(model, state);
    IntensityCursor cursor(model, state.events);
    return cursor.at(t);
}

Eigen::VectorXd compensator(const HawkesModel& model, const HawkesState& state, double t) {
    check_time(model, t);
    check_state(model, state);
    const Eigen::Index n = model.dims();
    Eigen::VectorXd out = model.gamma * t;
    for (Eigen::Index j = 0; j < n; ++j) {
        for (double s : state.events[static_cast<std::size_t>(j)]) {
            if (s > t) break;
            for (Eigen::Index i = 0; i < n; ++i) {
                const double b = model.beta(i, j);
                out(i) += model.alpha(i, j) / b * -std::expm1(-b * (t - s));
            }
            out(j) -= 1.0;
        }
    }
    return out;
}

std::vector<double> rescaled_intervals(const HawkesModel& model, const HawkesState& state, Eigen::Index dim) {
    check_state(model, state);
    if (dim < 0 || dim >= model.dims()) throw InvalidInput("dimension out of range");
    const Eigen::Index n = model.dims();

    // Merge all events in time order and integrate the intensity of `dim` piecewise.
    std::vector<std::pair<double, Eigen::Index>> merged;
    for (Eigen::Index j = 0; j < n; ++j)
        for (double s : state.events[static_cast<std::size_t>(j)]) merged.emplace_back(s, j);
    std::sort(merged.begin(), merged.end());

    Eigen::VectorXd excitation = Eigen::VectorXd::Zero(n);  // row `dim` of the excitation matrix
    double t = 0.0;
    double lambda_int = 0.0;
    double last = 0.0;
    std::vector<double> gaps;
    for (const auto& [s, j] : merged) {
        const double h = s - t;
        lambda_int += model.gamma(dim) * h;
        for (Eigen::Index k = 0; k < n; ++k) {
            const double b = model.beta(dim, k);
            lambda_int += excitation(k) / b * -std::expm1(-b * h);
            excitation(k) *= std::exp(-b * h);
        }
        t = s;
        if (j == dim) {
            gaps.push_back(lambda_int - last);
            last = lambda_int;
        }
        excitation(j) += model.alpha(dim, j);
    }
    return gaps;
}

std::size_t ClusterProcess::live_at(double t) const {
    std::size_t a = 0;
    for (const auto& c : clusters)
        if (c.start <= t && t < c.last) ++a;
    return a;
}

std::size_t ClusterProcess::total_events() const {
    std::size_t s = 0;
    for (const auto& c : clusters) s += c.size;
    return s;
}

ClusterProcess simulate_clusters(const HawkesModel& model, std::uint64_t seed, std::size_t max_events) {
    if (model.dims() != 1) throw InvalidInput("cluster simulation needs a univariate model");
    HawkesModel checked = model;
    checked.allow_nonstationary = true;
    checked.validate();
    const double gamma = model.gamma(0);
    const double beta = model.beta(0, 0);
    const double m = model.alpha(0, 0) / beta;

    Rng rng(derive_seed(seed, kClusterStream));
    ClusterProcess proc;
    proc.horizon = model.horizon;
    std::size_t total = 0;
    std::vector<double> frontier;
    for (double t = gamma > 0.0 ? rng.exponential(gamma) : model.horizon + 1.0; t <= model.horizon;
         t += rng.exponential(gamma)) {
        Cluster c{t, t, 1};
        frontier.assign(1, t);
        while (!frontier.empty()) {
            const double parent = frontier.back();
            frontier.pop_back();
            const int kids = rng.poisson(m);
            for (int k = 0; k < kids; ++k) {
                const double child = parent + rng.exponential(beta);
                if (child > model.horizon) continue;
                frontier.push_back(child);
                c.last = std::max(c.last, child);
                ++c.size;
            }
            if (total + c.size > max_events) throw StateError("cluster simulation exceeded max_events");
        }
        total += c.size;
        proc.clusters.push_back(c);
    }
    return proc;
}

double extinction_probability(double m) {
    if (!(m >= 0.0) || !std::isfinite(m)) throw InvalidInput("offspring mean must be finite and >= 0");
    if (m <= 1.0) return 1.0;
    // Iteration from 0 increases monotonically to the smallest fixed point.
    double q = 0.0;
    for (int it = 0; it < 10000; ++it) {
        const double next = std::exp(m * (q - 1.0));
        const bool done = std::abs(next - q) < 1e-14;
        q = next;
        if (done) break;
    }
    for (int it = 0; it < 20; ++it) {
        const double f = std::exp(m * (q - 1.0)) - q;
        if (std::abs(f) < 1e-15) break;
        q -= f / (m * std::exp(m * (q - 1.0)) - 1.0);
    }
    return std::clamp(q, 0.0, 1.0);
}

void LatticeRegion::validate() const {
    if (omega_sides.empty()) throw InvalidInput("lattice region needs at least one side");
    if (n_dim != static_cast<int>(omega_sides.size())) throw InvalidInput("n_dim must equal the number of sides");
    for (double s : omega_sides)
        if (!(s > 0.0) || !std::isfinite(s)) throw InvalidInput("region sides must be positive");
    if (!(var_pp > 0.0) || !std::isfinite(var_pp)) throw InvalidInput("var_pp must be positive");
    if (!std::isfinite(cte)) throw InvalidInput("cte must be finite");
    if (!(err_prob >= 0.0 && err_prob <= 1.0)) throw InvalidInput("err_prob must lie in [0, 1]");
}

double volume_to_noise_ratio(const LatticeRegion& region) {
    region.validate();
    double log_vol = 0.0;
    for (double s : region.omega_sides) log_vol += std::log(s);
    return std::exp(region.cte / region.n_dim * log_vol) / region.var_pp;
}

void AdversaryState::validate() const {
    if (!(offspring_mean >= 0.0)) throw InvalidInput("offspring mean must be >= 0");
    if (!(extinction_prob >= 0.0 && extinction_prob <= 1.0)) throw InvalidInput("extinction probability must lie in [0, 1]");
    if (offspring_mean <= 1.0 && extinction_prob != 1.0)
        throw InvalidInput("extinction probability must be 1 when offspring mean <= 1");
    if (!(r_conv > 0.0)) throw InvalidInput("r_conv must be positive");
}

AdversaryState make_adversary(const HawkesModel& model, double r_conv) {
    HawkesModel checked = model;
    checked.allow_nonstationary = true;
    checked.validate();
    AdversaryState adv;
    adv.offspring_mean = model.spectral_radius();
    adv.extinction_prob = extinction_probability(adv.offspring_mean);
    adv.r_conv = r_conv;
    adv.model = model;
    return adv;
}

std::vector<double> eve_activity(const HawkesModel& model, const HawkesState& state, std::span<const double> times) {
    check_state(model, state);
    IntensityCursor cursor(model, state.events);
    std::vector<double> out;
    out.reserve(times.size());
    for (double t : times) {
        check_time(model, t);
        out.push_back((cursor.at(t) - model.gamma).sum());
    }
    return out;
}

double secrecy_outage(const AdversaryState& adversary) {
    return secrecy_outage(adversary, [](double q) { return 1.0 - q; });
}

double secrecy_outage(const AdversaryState& adversary, const OutageLaw& law) {
    adversary.validate();
    const double p = law(adversary.extinction_prob);
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidInput("outage law returned a value outside [0, 1]");
    return p;
}

EveTrajectory eve_control_law(const mfg::MFGGrid& grid, const Eigen::MatrixXd& theta, const AdversaryState& adversary,
                              const mfg::NoiseSpec& noise, EveMode mode, double x0) {
    grid.validate();
    noise.validate();
    adversary.validate();
    if (theta.rows() != grid.nt || theta.cols() != grid.nx) throw InvalidInput("theta must be nt x nx");

    if (mode == EveMode::compensated) {
        if (!adversary.model || !adversary.events)
            throw ConfigurationError("compensated mode needs a Hawkes model and event history");
        if (adversary.model->horizon < grid.horizon)
            throw ConfigurationError("Hawkes horizon is shorter than the grid horizon");
    } else if (!adversary.clusters && adversary.offspring_mean > 0.0) {
        throw ConfigurationError("extinction mode needs a cluster process");
    }

    const auto nt = static_cast<std::size_t>(grid.nt);
    EveTrajectory out;
    out.t = grid.ts();
    out.drift.resize(nt);
    if (mode == EveMode::compensated) {
        for (std::size_t n = 0; n < nt; ++n)
            out.drift[n] = compensator(*adversary.model, *adversary.events, std::min(out.t[n], adversary.model->horizon)).sum();
    } else {
        const double q = adversary.extinction_prob;
        for (std::size_t n = 0; n < nt; ++n) {
            const std::size_t live = adversary.clusters ? adversary.clusters->live_at(out.t[n]) : 0;
            out.drift[n] = std::pow(q, static_cast<double>(live));
        }
    }

    const double w = noise.amplitude(mode == EveMode::compensated ? 7 : 8);
    const double dt = grid.dt();
    const double sdt = std::sqrt(dt);
    Rng rng(derive_seed(noise.seed, kEveStream));
    out.state.resize(nt);
    out.state[0] = x0;
    std::vector<double> row(static_cast<std::size_t>(grid.nx));
    for (std::size_t n = 0; n + 1 < nt; ++n) {
        Eigen::Map<Eigen::RowVectorXd>(row.data(), grid.nx) = theta.row(static_cast<Eigen::Index>(n));
        const double th = mfg::interpolate(grid, row, out.state[n]);
        double next = out.state[n] + (-th + out.drift[n]) * dt;
        if (w > 0.0) next += w * sdt * rng.normal();
        out.state[n + 1] = next;
    }
    return out;
}

}  // namespace mfgsec::hawkes
