#include "mfgsec/algorithm_runner.hpp"

#include "mfgsec/errors.hpp"
#include "mfgsec/random.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

namespace mfgsec::algo {

namespace {

constexpr std::uint64_t kOuterStream = 0xC0;
constexpr std::uint64_t kEveProcessStream = 0xC1;
constexpr std::uint64_t kDeviationStream = 0xC2;

std::vector<double> row_vector(const Eigen::MatrixXd& a, Eigen::Index n) {
    std::vector<double> r(static_cast<std::size_t>(a.cols()));
    Eigen::Map<Eigen::RowVectorXd>(r.data(), a.cols()) = a.row(n);
    return r;
}

}  // namespace

const char* to_string(Problem p) { return p == Problem::P1 ? "P1" : "P2"; }

Problem problem_from_string(const std::string& s) {
    if (s == "P1" || s == "p1") return Problem::P1;
    if (s == "P2" || s == "p2") return Problem::P2;
    throw InvalidInput("unknown problem mode '" + s + "'");
}

void AlgorithmConfig::validate() const {
    if (!(r_conv > 0.0)) throw InvalidInput("r_conv must be positive");
    if (max_outer < 1) throw InvalidInput("max_outer must be at least 1");
    grid.validate();
    noise.validate();
    if (problem.m0.size() != static_cast<std::size_t>(grid.nx)) throw InvalidInput("m0 must have nx values");
    if (mode == Problem::P2) {
        hawkes::HawkesModel m = adversary.model;
        m.allow_nonstationary = true;
        m.validate();
        if (adversary.model.dims() != 1 && adversary.mode == hawkes::EveMode::extinction)
            throw ConfigurationError("extinction mode needs a univariate adversary model");
    }
}

std::string AlgorithmConfig::canonical() const {
    std::ostringstream o;
    o << "r_conv=" << format_double(r_conv) << '\n'
      << "max_outer=" << max_outer << '\n'
      << "mode=" << to_string(mode) << '\n'
      << "grid=" << format_double(grid.horizon) << ',' << format_double(grid.x_min) << ','
      << format_double(grid.x_max) << ',' << grid.nt << ',' << grid.nx << '\n'
      << "lambda=" << format_double(problem.lambda_reg) << '\n'
      << "bounds=" << format_double(problem.bounds.lo) << ',' << format_double(problem.bounds.hi) << '\n'
      << "diffusion=" << problem.diffusion << '\n'
      << "picard=" << format_double(picard.damping) << ',' << format_double(picard.tol) << ',' << picard.max_iter << '\n';
    o << "noise=";
    for (int k = 1; k <= 8; ++k) o << format_double(noise.amplitude(k)) << ',';
    o << format_double(noise.w_prime) << '\n';
    o << "m0=";
    for (double v : problem.m0) o << format_double(v) << ',';
    o << "\nterminal=";
    for (double v : problem.terminal) o << format_double(v) << ',';
    o << '\n';
    if (mode == Problem::P2) {
        const auto& m = adversary.model;
        o << "adversary=" << (adversary.mode == hawkes::EveMode::extinction ? "extinction" : "compensated") << ','
          << format_double(m.horizon);
        for (Eigen::Index i = 0; i < m.dims(); ++i) o << ',' << format_double(m.gamma(i));
        for (Eigen::Index i = 0; i < m.alpha.size(); ++i)
            o << ',' << format_double(m.alpha.data()[i]) << ',' << format_double(m.beta.data()[i]);
        o << '\n';
    }
    o << "seed=" << seed << '\n';
    return o.str();
}

AlgorithmConfig analytic_config(int nt, int nx) {
    AlgorithmConfig c;
    c.grid = {1.0, -2.0, 2.0, nt, nx};
    c.problem.lambda_reg = 1.0;
    c.problem.diffusion = false;
    const double sd = 0.25;
    std::vector<double> m0(static_cast<std::size_t>(nx));
    for (int i = 0; i < nx; ++i) {
        const double z = (c.grid.x(i) - 0.5) / sd;
        m0[static_cast<std::size_t>(i)] = std::exp(-0.5 * z * z);
    }
    const double mass = mfg::density_mass(m0, c.grid.dx());
    for (double& v : m0) v /= mass;
    c.problem.m0 = std::move(m0);
    c.picard.tol = 1e-10;
    c.picard.max_iter = 20;
    return c;
}

double stopping_residual(const mfg::MFGField& field, const mfg::MFGGrid& grid, double extinction_term) {
    if (field.state == mfg::FieldState::fresh) throw StateError("stopping_residual: field has not been solved");
    grid.validate();
    if (field.m.rows() != grid.nt || field.theta.rows() != grid.nt) throw InvalidInput("field does not match the grid");
    const auto last = static_cast<Eigen::Index>(grid.nt - 1);
    const double xbar = mfg::density_mean(grid, row_vector(field.m, last));
    const double xprev = mfg::density_mean(grid, row_vector(field.m, last - 1));
    const double xplus = 2.0 * xbar - xprev;
    const double theta = mfg::interpolate(grid, row_vector(field.theta, last), xbar);
    return std::abs(xplus + theta - extinction_term);
}

RunResult run_algorithm1(const AlgorithmConfig& config) {
    config.validate();
    RunResult result;

    if (config.mode == Problem::P2) {
        auto adv = hawkes::make_adversary(config.adversary.model, config.r_conv);
        const auto process_seed = derive_seed(config.seed, kEveProcessStream);
        if (config.adversary.mode == hawkes::EveMode::extinction)
            adv.clusters = hawkes::simulate_clusters(config.adversary.model, process_seed);
        else {
            hawkes::HawkesModel m = config.adversary.model;
            m.allow_nonstationary = true;
            adv.events = hawkes::simulate_hawkes(m, process_seed);
        }
        result.adversary = std::move(adv);
    }

    mfg::MfgProblem problem = config.problem;
    mfg::PicardOptions picard = config.picard;
    for (int k = 1; k <= config.max_outer; ++k) {
        const auto started = std::chrono::steady_clock::now();
        RunRecord rec;
        rec.iteration = k;
        rec.seed = derive_seed(config.seed, kOuterStream + static_cast<std::uint64_t>(k));
        problem.noise = config.noise;
        problem.noise.seed = rec.seed;
        try {
            auto solved = mfg::picard_solve(config.grid, problem, picard);
            result.field = std::move(solved.field);
            rec.picard_iterations = solved.iterations;

            double extinction_term = 0.0;
            if (config.mode == Problem::P2) {
                const double x0 = mfg::density_mean(config.grid, problem.m0);
                const auto traj = hawkes::eve_control_law(config.grid, result.field.theta, *result.adversary,
                                                          problem.noise, config.adversary.mode, x0);
                result.eve_drift = traj.drift;
                problem.drift = traj.drift;
                extinction_term = traj.drift.back();
            }
            rec.residual = stopping_residual(result.field, config.grid, extinction_term);
        } catch (const Error& e) {
            result.error = "outer iteration " + std::to_string(k) + ": " + e.what();
            break;
        }
        rec.theta_bar.assign(result.field.theta_bar.data(), result.field.theta_bar.data() + result.field.theta_bar.size());
        picard.theta_bar_init = rec.theta_bar;
        rec.converged = rec.residual <= config.r_conv;
        rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        result.records.push_back(std::move(rec));
        if (result.records.back().converged) break;
    }
    result.converged = result.error.empty() && !result.records.empty() && result.records.back().converged;
    return result;
}

double agent_cost(const mfg::MFGField& field, const mfg::MFGGrid& grid, const mfg::MfgProblem& problem,
                  const Eigen::MatrixXd& theta, double x0) {
    const double dt = grid.dt();
    const double lambda = field.lambda_reg;
    double x = x0;
    double cost = 0.0;
    std::vector<double> row(static_cast<std::size_t>(grid.nx));
    for (int n = 0; n < grid.nt; ++n) {
        Eigen::Map<Eigen::RowVectorXd>(row.data(), grid.nx) = theta.row(n);
        const double th = mfg::interpolate(grid, row, x);
        const double t = grid.t(n);
        const double running = problem.running_cost(x, t) - field.theta_bar(n) + 0.5 * lambda * th * th;
        cost += (n == 0 || n == grid.nt - 1 ? 0.5 : 1.0) * running * dt;
        if (n + 1 < grid.nt) {
            const double drift = problem.drift.empty() ? 0.0 : problem.drift[static_cast<std::size_t>(n)];
            x += (drift - th) * dt;
        }
    }
    if (!problem.terminal.empty()) cost += mfg::interpolate(grid, problem.terminal, x);
    return cost;
}

double nash_gap_diagnostic(const mfg::MFGField& field, const mfg::MFGGrid& grid, const mfg::MfgProblem& problem,
                           int deviations, std::uint64_t seed) {
    if (field.state != mfg::FieldState::converged) throw StateError("nash_gap_diagnostic: field has not converged");
    if (deviations < 0) throw InvalidInput("deviations must be >= 0");
    grid.validate();
    if (deviations == 0) return 0.0;

    const double x0 = mfg::density_mean(grid, row_vector(field.m, 0));
    const double base = agent_cost(field, grid, problem, field.theta, x0);
    Rng rng(derive_seed(seed, kDeviationStream));
    double gap = 0.0;
    Eigen::MatrixXd perturbed(field.theta.rows(), field.theta.cols());
    for (int d = 0; d < deviations; ++d) {
        std::array<double, 4> c{};
        for (double& ck : c) ck = rng.normal(0.25);
        for (int n = 0; n < grid.nt; ++n) {
            double delta = 0.0;
            for (std::size_t k = 0; k < c.size(); ++k)
                delta += c[k] * std::cos(static_cast<double>(k) * std::numbers::pi * grid.t(n) / grid.horizon);
            for (int i = 0; i < grid.nx; ++i) perturbed(n, i) = field.theta_bounds.clip(field.theta(n, i) + delta);
        }
        gap = std::max(gap, base - agent_cost(field, grid, problem, perturbed, x0));
    }
    return gap;
}

std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
    out << '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_double(row[i]);
        out << '\n';
    }
    if (!out) throw IoError("failed writing " + path.string());
}

void emit_run(const AlgorithmConfig& config, const RunResult& result, const std::filesystem::path& dir) {
    if (result.records.empty()) throw InvalidInput("emit_run: no records");
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

    std::vector<std::vector<double>> rows;
    for (const auto& r : result.records)
        rows.push_back({static_cast<double>(r.iteration), r.residual, r.converged ? 1.0 : 0.0,
                        static_cast<double>(r.picard_iterations)});
    write_csv(dir / "residuals.csv", {"iteration", "residual", "converged", "picard_iterations"}, rows);

    rows.clear();
    const auto& bar = result.records.back().theta_bar;
    for (std::size_t n = 0; n < bar.size(); ++n) rows.push_back({config.grid.t(static_cast<int>(n)), bar[n]});
    write_csv(dir / "theta_bar.csv", {"t", "theta_bar"}, rows);

    if (!result.eve_drift.empty()) {
        rows.clear();
        for (std::size_t n = 0; n < result.eve_drift.size(); ++n)
            rows.push_back({config.grid.t(static_cast<int>(n)), result.eve_drift[n]});
        write_csv(dir / "eve_drift.csv", {"t", "drift"}, rows);
    }

    char hash[17];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(fnv1a(config.canonical())));
    nlohmann::json manifest;
    manifest["config_hash"] = hash;
    manifest["seed"] = config.seed;
    manifest["mode"] = to_string(config.mode);
    manifest["converged"] = result.converged;
    manifest["iterations"] = result.records.size();
    manifest["final_residual"] = result.records.back().residual;
    if (!result.error.empty()) manifest["error"] = result.error;
    if (result.adversary) {
        manifest["offspring_mean"] = result.adversary->offspring_mean;
        manifest["extinction_prob"] = result.adversary->extinction_prob;
    }
    std::ofstream out(dir / "manifest.json", std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + (dir / "manifest.json").string());
    out << manifest.dump(2) << '\n';
}

}  // namespace mfgsec::algo
