#include "mfgsec/mfg_solver.hpp"

#include "mfgsec/errors.hpp"
#include "mfgsec/random.hpp"
#include "mfgsec/stats.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mfgsec::mfg {

namespace {

// Random-stream tags; every noisy term draws from its own derived stream.
constexpr std::uint64_t kHjbStream = 0x48a1;
constexpr std::uint64_t kFpkStream = 0x4f9c;
constexpr std::uint64_t kBarStream = 0x7ba2;
constexpr std::uint64_t kFkStream = 0x0fc6;

// Solves a tridiagonal system in place (Thomas algorithm). lower[0] and
// upper[n-1] are ignored.
void solve_tridiagonal(std::vector<double> lower, std::vector<double> diag, std::vector<double> upper,
                       std::vector<double>& rhs) {
    const std::size_t n = diag.size();
    for (std::size_t i = 1; i < n; ++i) {
        const double w = lower[i] / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    rhs[n - 1] /= diag[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] = (rhs[i] - upper[i] * rhs[i + 1]) / diag[i];
}

double drift_at(const std::vector<double>& drift, int n) { return drift.empty() ? 0.0 : drift[static_cast<std::size_t>(n)]; }

void check_drift(const MFGGrid& grid, const std::vector<double>& drift) {
    if (!drift.empty() && drift.size() != static_cast<std::size_t>(grid.nt))
        throw InvalidInput("drift must have one value per time level");
}

void ensure_shape(Eigen::MatrixXd& a, const MFGGrid& grid) {
    if (a.size() == 0) a = Eigen::MatrixXd::Zero(grid.nt, grid.nx);
    if (a.rows() != grid.nt || a.cols() != grid.nx) throw InvalidInput("field arrays must be nt x nx");
}

std::vector<double> row_of(const Eigen::MatrixXd& a, int n) {
    std::vector<double> r(static_cast<std::size_t>(a.cols()));
    for (Eigen::Index i = 0; i < a.cols(); ++i) r[static_cast<std::size_t>(i)] = a(n, i);
    return r;
}

double central_gradient(const std::vector<double>& u, std::size_t i, double h) {
    const std::size_t n = u.size();
    if (i == 0) return (u[1] - u[0]) / h;
    if (i == n - 1) return (u[n - 1] - u[n - 2]) / h;
    return (u[i + 1] - u[i - 1]) / (2.0 * h);
}

}  // namespace

void MFGGrid::validate() const {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw InvalidInput("grid horizon must be positive");
    if (nt < 3 || nx < 3) throw InvalidInput("grid needs at least 3 points per axis");
    if (!(x_max > x_min) || !std::isfinite(x_min) || !std::isfinite(x_max))
        throw InvalidInput("grid state bounds must satisfy x_min < x_max");
}

std::vector<double> MFGGrid::xs() const {
    std::vector<double> v(static_cast<std::size_t>(nx));
    for (int i = 0; i < nx; ++i) v[static_cast<std::size_t>(i)] = x(i);
    return v;
}

std::vector<double> MFGGrid::ts() const {
    std::vector<double> v(static_cast<std::size_t>(nt));
    for (int n = 0; n < nt; ++n) v[static_cast<std::size_t>(n)] = t(n);
    return v;
}

double NoiseSpec::amplitude(int k) const {
    if (k < 1 || k > 8) throw InvalidInput("noise term index must be in 1..8");
    return w[static_cast<std::size_t>(k - 1)];
}

void NoiseSpec::set(int k, double value) {
    if (k < 1 || k > 8) throw InvalidInput("noise term index must be in 1..8");
    w[static_cast<std::size_t>(k - 1)] = value;
}

bool NoiseSpec::silent() const {
    return w_prime == 0.0 && std::all_of(w.begin(), w.end(), [](double a) { return a == 0.0; });
}

void NoiseSpec::validate() const {
    for (double a : w)
        if (!(a >= 0.0) || !std::isfinite(a)) throw InvalidInput("noise amplitudes must be finite and >= 0");
    if (!(w_prime >= 0.0) || !std::isfinite(w_prime)) throw InvalidInput("noise amplitudes must be finite and >= 0");
}

MFGField MFGField::zeros(const MFGGrid& grid, double lambda_reg, ThetaBounds bounds) {
    grid.validate();
    MFGField f;
    f.u = Eigen::MatrixXd::Zero(grid.nt, grid.nx);
    f.m = Eigen::MatrixXd::Zero(grid.nt, grid.nx);
    f.theta = Eigen::MatrixXd::Zero(grid.nt, grid.nx);
    f.theta_bar = Eigen::VectorXd::Zero(grid.nt);
    f.lambda_reg = lambda_reg;
    f.theta_bounds = bounds;
    return f;
}

MFGField solve_hjb(const MFGGrid& grid, std::span<const double> theta_bar, const NoiseSpec& noise,
                   MFGField field, const HjbOptions& options) {
    grid.validate();
    noise.validate();
    check_drift(grid, options.drift);
    if (theta_bar.size() != static_cast<std::size_t>(grid.nt))
        throw InvalidInput("theta_bar must have one value per time level");
    if (!(field.lambda_reg > 0.0)) throw InvalidInput("lambda_reg must be positive");
    if (field.theta_bounds.lo > field.theta_bounds.hi) throw InvalidInput("theta bounds are inverted");
    ensure_shape(field.u, grid);
    ensure_shape(field.theta, grid);
    ensure_shape(field.m, grid);
    if (field.theta_bar.size() != grid.nt) field.theta_bar = Eigen::VectorXd::Zero(grid.nt);

    const bool optimize = options.control == ControlMode::optimize;
    const double lambda = field.lambda_reg;
    const ThetaBounds bounds = field.theta_bounds;
    const double h = grid.dx();
    const double dt = grid.dt();
    const double diff = options.diffusion ? 0.5 * noise.amplitude(1) * noise.amplitude(1) : 0.0;
    const double forcing = std::sqrt(dt) * std::hypot(noise.amplitude(2), noise.amplitude(3));
    const auto nx = static_cast<std::size_t>(grid.nx);
    const auto xs = grid.xs();
    Rng rng(derive_seed(noise.seed, kHjbStream));

    auto store_control = [&](int n) {
        if (!optimize) return;
        const auto u = row_of(field.u, n);
        for (std::size_t i = 0; i < nx; ++i)
            field.theta(n, static_cast<Eigen::Index>(i)) = bounds.clip(central_gradient(u, i, h) / lambda);
    };

    store_control(grid.nt - 1);
    std::vector<double> next(nx);
    for (int n = grid.nt - 2; n >= 0; --n) {
        const auto up = row_of(field.u, n + 1);
        const double t1 = grid.t(n + 1);
        const double d = drift_at(options.drift, n + 1);
        for (std::size_t i = 0; i < nx; ++i) {
            const double dm = i > 0 ? (up[i] - up[i - 1]) / h : (up[1] - up[0]) / h;
            const double dp = i + 1 < nx ? (up[i + 1] - up[i]) / h : (up[i] - up[i - 1]) / h;
            // Monotone upwind Hamiltonian: forward difference when the state moves right.
            auto objective = [&](double th) {
                const double a = d - th;
                return 0.5 * lambda * th * th + std::max(a, 0.0) * dp + std::min(a, 0.0) * dm;
            };
            double th;
            if (optimize) {
                const double left = bounds.clip(std::min(dp / lambda, d));
                const double right = bounds.clip(std::max(dm / lambda, d));
                th = objective(left) <= objective(right) ? left : right;
            } else {
                th = field.theta(n + 1, static_cast<Eigen::Index>(i));
            }
            const double speed = std::abs(d - th);
            if (dt * speed > h) {
                const double suggested = 0.9 * h / speed;
                throw StabilityError("HJB transport violates CFL (dt=" + std::to_string(dt) +
                                         ", suggested dt <= " + std::to_string(suggested) + ")",
                                     suggested);
            }
            next[i] = up[i] + dt * (options.running_cost(xs[i], t1) - theta_bar[static_cast<std::size_t>(n + 1)] +
                                    objective(th));
        }
        if (diff > 0.0) {
            // Backward Euler diffusion; wall rows keep zero curvature (linear extrapolation).
            const double k = diff * dt / (h * h);
            std::vector<double> lower(nx, -k), diag(nx, 1.0 + 2.0 * k), upper(nx, -k);
            lower[0] = upper[0] = 0.0;
            diag[0] = 1.0;
            lower[nx - 1] = upper[nx - 1] = 0.0;
            diag[nx - 1] = 1.0;
            solve_tridiagonal(lower, diag, upper, next);
        }
        if (forcing > 0.0) {
            const double shock = forcing * rng.normal();
            for (double& v : next) v += shock;
        }
        for (std::size_t i = 0; i < nx; ++i) field.u(n, static_cast<Eigen::Index>(i)) = next[i];
        store_control(n);
    }
    field.state = FieldState::solved;
    return field;
}

Eigen::MatrixXd solve_fpk(const MFGGrid& grid, const Eigen::MatrixXd& theta, std::span<const double> m0,
                          const NoiseSpec& noise, const FpkOptions& options) {
    grid.validate();
    noise.validate();
    check_drift(grid, options.drift);
    const auto nx = static_cast<std::size_t>(grid.nx);
    if (theta.rows() != grid.nt || theta.cols() != grid.nx) throw InvalidInput("theta must be nt x nx");
    if (m0.size() != nx) throw InvalidInput("initial density must have nx values");
    for (double v : m0)
        if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidInput("initial density must be finite and non-negative");
    const double h = grid.dx();
    const double dt = grid.dt();
    const double mass0 = density_mass(m0, h);
    if (std::abs(mass0 - 1.0) > 1e-6) throw InvalidInput("initial density must integrate to 1");

    const auto widths = stats::trapezoid_weights(nx, h);
    const double diff = options.diffusion ? 0.5 * noise.amplitude(1) * noise.amplitude(1) : 0.0;
    const double forcing = std::sqrt(dt) * noise.amplitude(4);
    Rng rng(derive_seed(noise.seed, kFpkStream));

    Eigen::MatrixXd m(grid.nt, grid.nx);
    for (std::size_t i = 0; i < nx; ++i) m(0, static_cast<Eigen::Index>(i)) = m0[i];

    std::vector<double> cur(m0.begin(), m0.end()), vel(nx), flux(nx + 1, 0.0);
    for (int n = 0; n + 1 < grid.nt; ++n) {
        const double d = 0.5 * (drift_at(options.drift, n) + drift_at(options.drift, n + 1));
        for (std::size_t i = 0; i < nx; ++i) {
            const auto col = static_cast<Eigen::Index>(i);
            vel[i] = d - 0.5 * (theta(n, col) + theta(n + 1, col));
        }
        // flux[i] sits on the interface between nodes i-1 and i; walls carry none.
        for (std::size_t i = 1; i < nx; ++i) {
            const double a = 0.5 * (vel[i - 1] + vel[i]);
            flux[i] = std::max(a, 0.0) * cur[i - 1] + std::min(a, 0.0) * cur[i];
        }
        for (std::size_t i = 0; i < nx; ++i) {
            const double out_right = i + 1 < nx ? std::max(0.5 * (vel[i] + vel[i + 1]), 0.0) : 0.0;
            const double out_left = i > 0 ? std::max(-0.5 * (vel[i - 1] + vel[i]), 0.0) : 0.0;
            const double courant = dt * (out_right + out_left) / widths[i];
            if (courant > 1.0) {
                const double suggested = 0.9 * dt / courant;
                throw StabilityError("FPK transport violates CFL (dt=" + std::to_string(dt) +
                                         ", suggested dt <= " + std::to_string(suggested) + ")",
                                     suggested);
            }
        }
        for (std::size_t i = 0; i < nx; ++i) cur[i] -= dt * (flux[i + 1] - flux[i]) / widths[i];

        if (diff > 0.0) {
            const double k = diff * dt / h;
            std::vector<double> lower(nx, 0.0), diag(nx, 0.0), upper(nx, 0.0);
            for (std::size_t i = 0; i < nx; ++i) {
                diag[i] = widths[i];
                if (i > 0) {
                    lower[i] = -k;
                    diag[i] += k;
                }
                if (i + 1 < nx) {
                    upper[i] = -k;
                    diag[i] += k;
                }
                cur[i] *= widths[i];
            }
            solve_tridiagonal(lower, diag, upper, cur);
        }
        if (forcing > 0.0)
            for (double& v : cur) v = std::max(0.0, v + forcing * rng.normal());
        for (std::size_t i = 0; i < nx; ++i) m(n + 1, static_cast<Eigen::Index>(i)) = cur[i];
    }
    return m;
}

double mean_control(std::span<const double> theta, std::span<const double> m, double dx) {
    if (theta.size() != m.size()) throw InvalidInput("mean_control: length mismatch");
    std::vector<double> prod(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i) prod[i] = theta[i] * m[i];
    return stats::trapezoid(prod, dx);
}

double density_mass(std::span<const double> m, double dx) { return stats::trapezoid(m, dx); }

double density_mean(const MFGGrid& grid, std::span<const double> m) {
    const auto xs = grid.xs();
    const double mass = density_mass(m, grid.dx());
    if (!(mass > 0.0)) throw StateError("density row has no mass");
    return mean_control(xs, m, grid.dx()) / mass;
}

double interpolate(const MFGGrid& grid, std::span<const double> row, double x) {
    const double s = std::clamp((x - grid.x_min) / grid.dx(), 0.0, static_cast<double>(grid.nx - 1));
    const auto i = std::min(static_cast<std::size_t>(s), static_cast<std::size_t>(grid.nx - 2));
    const double f = s - static_cast<double>(i);
    return (1.0 - f) * row[i] + f * row[i + 1];
}

PicardResult picard_solve(const MFGGrid& grid, const MfgProblem& problem, const PicardOptions& options) {
    grid.validate();
    if (!(options.tol > 0.0)) throw InvalidInput("picard_solve: tol must be positive");
    if (!(options.damping > 0.0) || options.damping > 1.0) throw InvalidInput("picard_solve: damping must lie in (0, 1]");
    if (options.max_iter < 1) throw InvalidInput("picard_solve: max_iter must be at least 1");
    const auto nt = static_cast<std::size_t>(grid.nt);
    const auto nx = static_cast<std::size_t>(grid.nx);

    PicardResult result;
    result.field = MFGField::zeros(grid, problem.lambda_reg, problem.bounds);
    MFGField& field = result.field;
    if (!problem.terminal.empty()) {
        if (problem.terminal.size() != nx) throw InvalidInput("terminal condition must have nx values");
        for (std::size_t i = 0; i < nx; ++i) field.u(grid.nt - 1, static_cast<Eigen::Index>(i)) = problem.terminal[i];
    }
    std::vector<double> bar(nt, 0.0);
    if (!options.theta_bar_init.empty()) {
        if (options.theta_bar_init.size() != nt) throw InvalidInput("theta_bar_init must have nt values");
        bar = options.theta_bar_init;
    }

    HjbOptions hjb;
    hjb.running_cost = problem.running_cost;
    hjb.diffusion = problem.diffusion;
    hjb.drift = problem.drift;
    FpkOptions fpk;
    fpk.diffusion = problem.diffusion;
    fpk.drift = problem.drift;
    const double bar_noise = problem.noise.w_prime * std::sqrt(grid.dt());

    for (int it = 1; it <= options.max_iter; ++it) {
        NoiseSpec noise = problem.noise;
        noise.seed = derive_seed(problem.noise.seed, static_cast<std::uint64_t>(it));
        field = solve_hjb(grid, bar, noise, std::move(field), hjb);
        field.m = solve_fpk(grid, field.theta, problem.m0, noise, fpk);

        Rng rng(derive_seed(noise.seed, kBarStream));
        double residual = 0.0;
        for (std::size_t n = 0; n < nt; ++n) {
            const auto th = row_of(field.theta, static_cast<int>(n));
            const auto mm = row_of(field.m, static_cast<int>(n));
            double fresh = mean_control(th, mm, grid.dx());
            if (bar_noise > 0.0) fresh += bar_noise * rng.normal();
            const double updated = (1.0 - options.damping) * bar[n] + options.damping * fresh;
            residual = std::max(residual, std::abs(updated - bar[n]));
            bar[n] = updated;
        }
        for (std::size_t n = 0; n < nt; ++n) field.theta_bar(static_cast<Eigen::Index>(n)) = bar[n];
        result.residuals.push_back(residual);
        result.iterations = it;
        if (residual < options.tol) {
            result.converged = true;
            break;
        }
    }
    field.state = result.converged ? FieldState::converged : FieldState::solved;
    return result;
}

McEstimate feynman_kac_estimate(const FeynmanKacSpec& spec, const MFGGrid& grid, double x0, double t0) {
    grid.validate();
    if (spec.paths == 0) throw InvalidInput("feynman_kac_estimate: paths must be at least 1");
    if (!(t0 >= 0.0) || t0 > grid.horizon) throw InvalidInput("feynman_kac_estimate: t0 outside [0, T]");
    if (!(spec.sigma >= 0.0)) throw InvalidInput("feynman_kac_estimate: sigma must be non-negative");
    const double span = grid.horizon - t0;
    const auto steps = static_cast<std::size_t>(std::ceil(span / grid.dt() - 1e-9));
    const double h = steps > 0 ? span / static_cast<double>(steps) : 0.0;
    const double sqrt_h = std::sqrt(h);

    Rng rng(derive_seed(spec.seed, kFkStream));
    std::vector<double> values(spec.paths);
    for (auto& value : values) {
        double x = x0, t = t0, disc = 0.0, acc = 0.0;
        double f_prev = spec.running(x, t);
        double y_prev = spec.discount(x, t);
        for (std::size_t k = 0; k < steps; ++k) {
            x += spec.drift(x, t) * h + spec.sigma * sqrt_h * rng.normal();
            t = t0 + static_cast<double>(k + 1) * h;
            const double y_next = spec.discount(x, t);
            const double disc_next = disc + 0.5 * h * (y_prev + y_next);
            const double f_next = spec.running(x, t);
            acc += 0.5 * h * (std::exp(-disc) * f_prev + std::exp(-disc_next) * f_next);
            disc = disc_next;
            f_prev = f_next;
            y_prev = y_next;
        }
        value = acc + std::exp(-disc) * spec.terminal(x);
    }
    McEstimate est;
    est.mean = stats::mean(values);
    est.std_error = std::sqrt(stats::variance(values) / static_cast<double>(values.size()));
    return est;
}

HermiteHadamardReport hermite_hadamard_check(std::span<const double> values, double tol) {
    const std::size_t n = values.size();
    if (n < 3) throw InvalidInput("hermite_hadamard_check: need at least 3 samples");
    HermiteHadamardReport r;
    r.midpoint_value = n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
    r.average = stats::trapezoid(values, 1.0 / static_cast<double>(n - 1));
    r.endpoint_mean = 0.5 * (values.front() + values.back());
    r.lower_margin = r.average - r.midpoint_value;
    r.upper_margin = r.endpoint_mean - r.average;
    r.pass = r.lower_margin >= -tol && r.upper_margin >= -tol;
    return r;
}

double utility_eval(const MFGGrid& grid, std::span<const double> path, int start_index) {
    grid.validate();
    if (start_index < 0 || start_index >= grid.nt) throw InvalidInput("utility_eval: start index outside grid");
    if (path.size() != static_cast<std::size_t>(grid.nt - start_index))
        throw InvalidInput("utility_eval: path must cover the remaining time levels");
    const double slack = 1e-12 * (grid.x_max - grid.x_min);
    for (double x : path)
        if (!(x >= grid.x_min - slack && x <= grid.x_max + slack))
            throw InvalidInput("utility_eval: path leaves the state grid (extrapolation)");
    return stats::trapezoid(path, grid.dt());
}

}  // namespace mfgsec::mfg
