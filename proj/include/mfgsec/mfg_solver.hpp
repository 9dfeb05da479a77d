#pragma once

// Coupled HJB / FPK mean-field-game solver on a uniform space-time grid.
//
// State dynamics: dx = (drift(t) - theta) dt + w1 dW.
// Value function: dU/dt + r(x,t) - theta_bar(t) + min_theta { lambda/2 theta^2 + (drift - theta) dU/dx }
//                 + (w1^2/2) d2U/dx2 = 0, U(T, .) = terminal.
// Density:        dM/dt = d/dx((theta - drift) M) + (w1^2/2) d2M/dx2.
//
// Rows of every nt x nx array are time levels, columns are state nodes.

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace mfgsec::mfg {

struct MFGGrid {
    double horizon = 1.0;
    double x_min = 0.0;
    double x_max = 1.0;
    int nt = 51;
    int nx = 51;

    void validate() const;
    double dt() const { return horizon / (nt - 1); }
    double dx() const { return (x_max - x_min) / (nx - 1); }
    double t(int n) const { return n * dt(); }
    double x(int i) const { return x_min + i * dx(); }
    std::vector<double> xs() const;
    std::vector<double> ts() const;
};

// Amplitudes of the random-walk terms W1..W8 and W'. Each term is a scaled
// Wiener increment N(0, w^2 dt); amplitude zero disables it.
struct NoiseSpec {
    std::array<double, 8> w{};
    double w_prime = 0.0;
    std::uint64_t seed = 0;

    double amplitude(int k) const;  // k in 1..8
    void set(int k, double value);
    bool silent() const;
    void validate() const;
};

struct ThetaBounds {
    double lo = -10.0;
    double hi = 10.0;
    double clip(double v) const { return v < lo ? lo : (v > hi ? hi : v); }
};

enum class FieldState { fresh, solved, converged };

struct MFGField {
    Eigen::MatrixXd u;      // value function
    Eigen::MatrixXd m;      // population density
    Eigen::MatrixXd theta;  // feedback control
    Eigen::VectorXd theta_bar;
    double lambda_reg = 1.0;
    ThetaBounds theta_bounds;
    FieldState state = FieldState::fresh;

    static MFGField zeros(const MFGGrid& grid, double lambda_reg = 1.0, ThetaBounds bounds = {});
};

using SpaceTimeFn = std::function<double(double x, double t)>;

inline double state_cost(double x, double) { return x; }

enum class ControlMode { optimize, frozen };

struct HjbOptions {
    ControlMode control = ControlMode::optimize;
    SpaceTimeFn running_cost = state_cost;
    bool diffusion = true;
    std::vector<double> drift;  // per time level; empty means zero
};

// Backward sweep. The terminal row of field.u is the terminal condition. In
// optimize mode field.theta receives clip(dU/dx / lambda); in frozen mode the
// given field.theta is used unchanged.
MFGField solve_hjb(const MFGGrid& grid, std::span<const double> theta_bar, const NoiseSpec& noise,
                   MFGField field, const HjbOptions& options = {});

struct FpkOptions {
    bool diffusion = true;
    std::vector<double> drift;
};

// Forward finite-volume sweep with zero-flux walls. Mass is measured with
// trapezoid weights (half cells at the walls) and is conserved exactly by the
// deterministic part of the scheme.
Eigen::MatrixXd solve_fpk(const MFGGrid& grid, const Eigen::MatrixXd& theta, std::span<const double> m0,
                          const NoiseSpec& noise, const FpkOptions& options = {});

// Trapezoid rule for int theta(x) m(x) dx.
double mean_control(std::span<const double> theta, std::span<const double> m, double dx);
double density_mass(std::span<const double> m, double dx);
// Mean state of a density row (normalized by its mass).
double density_mean(const MFGGrid& grid, std::span<const double> m);
// Linear interpolation of a row at x, clamped to the grid ends.
double interpolate(const MFGGrid& grid, std::span<const double> row, double x);

struct MfgProblem {
    std::vector<double> m0;
    double lambda_reg = 1.0;
    ThetaBounds bounds;
    NoiseSpec noise;
    SpaceTimeFn running_cost = state_cost;
    std::vector<double> terminal;  // empty means zero
    bool diffusion = true;
    std::vector<double> drift;
};

struct PicardOptions {
    double damping = 1.0;
    double tol = 1e-6;
    int max_iter = 50;
    std::vector<double> theta_bar_init;  // empty means zero
};

struct PicardResult {
    MFGField field;
    std::vector<double> residuals;
    bool converged = false;
    int iterations = 0;
};

// Damped fixed-point iteration on the mean control. Reaching max_iter is
// reported through `converged`, not thrown.
PicardResult picard_solve(const MFGGrid& grid, const MfgProblem& problem, const PicardOptions& options);

struct FeynmanKacSpec {
    SpaceTimeFn discount = [](double, double) { return 0.0; };
    SpaceTimeFn running = [](double, double) { return 0.0; };
    std::function<double(double)> terminal = [](double) { return 0.0; };
    SpaceTimeFn drift = [](double, double) { return 0.0; };
    double sigma = 0.0;  // W6 amplitude
    std::size_t paths = 1000;
    std::uint64_t seed = 0;
};

struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;
};

// E[ int_t0^T e^{-int Y} f dt' + e^{-int Y} phi(x_T) ] over Euler-Maruyama paths
// using the grid's time step.
McEstimate feynman_kac_estimate(const FeynmanKacSpec& spec, const MFGGrid& grid, double x0, double t0);

struct HermiteHadamardReport {
    bool pass = false;
    double midpoint_value = 0.0;  // f((a+b)/2)
    double average = 0.0;         // 1/(b-a) int f
    double endpoint_mean = 0.0;   // (f(a)+f(b))/2
    double lower_margin = 0.0;    // average - midpoint_value
    double upper_margin = 0.0;    // endpoint_mean - average
};

// Samples are equally spaced on [a, b] (endpoints included, at least three).
HermiteHadamardReport hermite_hadamard_check(std::span<const double> values, double tol = 1e-12);

// Trapezoid quadrature of int_{t_start}^T x(v) dv for a path sampled on the
// grid's time levels start_index..nt-1.
double utility_eval(const MFGGrid& grid, std::span<const double> path, int start_index = 0);

}  // namespace mfgsec::mfg
