#pragma once

// Outer loop of the secure MFG algorithm: repeated Picard solves, optional
// adversary drift refresh, stopping residual, Nash-gap check and artifact
// emission.

#include "mfgsec/hawkes_adversary.hpp"
#include "mfgsec/mfg_solver.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mfgsec::algo {

enum class Problem { P1, P2 };

const char* to_string(Problem p);
Problem problem_from_string(const std::string& s);

struct AdversaryConfig {
    hawkes::HawkesModel model = hawkes::HawkesModel::univariate(0.5, 0.0, 1.0, 1.0);
    hawkes::EveMode mode = hawkes::EveMode::extinction;
};

struct AlgorithmConfig {
    double r_conv = 1e-3;
    int max_outer = 30;
    Problem mode = Problem::P1;
    mfg::MFGGrid grid;
    mfg::MfgProblem problem;    // its noise field is replaced by `noise`
    mfg::PicardOptions picard;  // inner iterations per outer step
    AdversaryConfig adversary;
    mfg::NoiseSpec noise;
    std::uint64_t seed = 0;
    std::filesystem::path emit_path;

    void validate() const;
    // Canonical key=value text used for hashing.
    std::string canonical() const;
};

// Standard test case: zero noise, lambda = 1, zero terminal cost, running cost
// x and a Gaussian m0 centred at 0.5 on [-2, 2] x [0, 1].
AlgorithmConfig analytic_config(int nt = 101, int nx = 101);

struct RunRecord {
    int iteration = 0;
    double residual = 0.0;
    std::vector<double> theta_bar;
    bool converged = false;
    int picard_iterations = 0;
    double wall_seconds = 0.0;  // diagnostic only, never emitted
    std::uint64_t seed = 0;
};

struct RunResult {
    std::vector<RunRecord> records;
    mfg::MFGField field;
    std::optional<hawkes::AdversaryState> adversary;
    std::vector<double> eve_drift;
    bool converged = false;
    std::string error;  // set when an inner solve failed and the trail is partial
};

// |xbar(T+) + theta(T, xbar(T)) - extinction_term| with xbar the density mean,
// xbar(T+) = 2 xbar(T) - xbar(T - dt). Pass extinction_term = 0 for P1.
double stopping_residual(const mfg::MFGField& field, const mfg::MFGGrid& grid, double extinction_term = 0.0);

RunResult run_algorithm1(const AlgorithmConfig& config);

// Largest cost improvement a representative agent starting at the mean of
// m(0, .) gets from `deviations` random additive control perturbations against
// the frozen mean control. 0 when no deviation helps.
double nash_gap_diagnostic(const mfg::MFGField& field, const mfg::MFGGrid& grid, const mfg::MfgProblem& problem,
                           int deviations, std::uint64_t seed);

// Cost of the feedback control theta for an agent starting at x0 (Euler
// dynamics, trapezoid running cost).
double agent_cost(const mfg::MFGField& field, const mfg::MFGGrid& grid, const mfg::MfgProblem& problem,
                  const Eigen::MatrixXd& theta, double x0);

std::uint64_t fnv1a(const std::string& text);

std::string format_double(double v);  // "%.17g"

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

// Writes residuals.csv, theta_bar.csv and manifest.json under `dir`.
void emit_run(const AlgorithmConfig& config, const RunResult& result, const std::filesystem::path& dir);

}  // namespace mfgsec::algo
