#pragma once

// Synthetic G -> X -> Y chain with confounder V, per-instrument summary
// statistics, inverse-variance-weighted control-gain estimation and
// binned information-theoretic checks of the instrument conditions.

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace mfgsec::mr {

// Transmit design parameters feeding the quality-of-goods stub.
struct DesignParams {
    int ell = 0;                       // OAM mode index
    int min_antennas = 1;              // L
    double power_threshold = 0.0;      // psi0
    int antenna_pairs = 1;             // psi1
    std::vector<double> angular_positions;  // psi2, radians
    double user_radius = 1.0;          // psi3
    std::vector<double> rotation_angles;    // psi4, radians
    double channel_magnitude = 1.0;    // |psi5|
};

// Throws InvalidInput on a non-finite or out-of-range field.
void validate(const DesignParams& params);

using ModeGain = std::function<double(int ell, int min_antennas)>;
using Crosstalk = std::function<double(const DesignParams&)>;

double default_mode_gain(int ell, int min_antennas);

struct SinrModel {
    ModeGain gain = default_mode_gain;
    Crosstalk crosstalk = [](const DesignParams&) { return 0.0; };
};

// psi = psi0 * |psi5|^2 * g(ell) / (1 + crosstalk).
double sinr_quality(const DesignParams& params, const SinrModel& model = {});

enum class ErrorLaw { gaussian, uniform, laplace };

struct StructuralModel {
    double beta_x0 = 0.0;
    Eigen::VectorXd beta_x;     // G -> X, length p
    double gamma_x = 0.0;       // V -> X
    double theta0 = 0.0;
    double theta = 0.0;         // causal X -> Y
    Eigen::VectorXd alpha;      // direct G -> Y (pleiotropy), length p
    double gamma_y = 0.0;       // V -> Y
    double var_x = 1.0;
    double var_y = 1.0;
    ErrorLaw err_x = ErrorLaw::gaussian;
    ErrorLaw err_y = ErrorLaw::gaussian;

    Eigen::Index instruments() const { return beta_x.size(); }
};

void validate(const StructuralModel& model);

struct SampleBatch {
    Eigen::MatrixXd g;  // n x p
    Eigen::VectorXd x, y, v;

    Eigen::Index size() const { return x.size(); }
    Eigen::Index instruments() const { return g.cols(); }
};

struct SummaryStats {
    Eigen::VectorXd beta_hat_x, beta_hat_y;
    Eigen::VectorXd se_x, se_y;

    Eigen::Index instruments() const { return beta_hat_x.size(); }
};

SampleBatch generate_samples(const StructuralModel& model, std::size_t n, std::uint64_t seed);

SummaryStats summary_stats(const SampleBatch& batch);

// Minimizer of sum_j (bY_j - bX_j theta)^2 / seY_j^2. Instruments with zero
// outcome standard error dominate: when any are present only they are used,
// with equal weights.
double estimate_theta(const SummaryStats& stats);

struct InterceptFit {
    double theta0 = 0.0;
    double theta = 0.0;
};

// Weighted least squares of bY on bX with an intercept.
InterceptFit estimate_theta_intercept(const SummaryStats& stats);

// Plug-in I(A;B|C) in nats on equal-width bins.
double conditional_mi(std::span<const double> a, std::span<const double> b,
                      std::span<const double> cond, int bins = 8);

// Same estimator with a joint conditioning set (the cells are the product of
// the per-variable bins). An empty set gives the unconditional MI.
double conditional_mi(std::span<const double> a, std::span<const double> b,
                      const std::vector<std::span<const double>>& cond, int bins = 8);

double mutual_information(std::span<const double> a, std::span<const double> b, int bins = 8);

// Equal-width bin indices over [min, max]; a constant vector maps to bin 0.
std::vector<int> quantize(std::span<const double> v, int bins);

struct ConditionCheck {
    double statistic = 0.0;
    double threshold = 0.0;
    bool pass = false;
};

struct MarkovReport {
    ConditionCheck independence;  // (i) max_j I(G_j; V) below threshold
    ConditionCheck exclusion;     // (ii) max_j I(G_j; Y | X, V) below threshold
    ConditionCheck relevance;     // (iii) min_j |bX_j / seX_j| above threshold
    bool all_pass() const { return independence.pass && exclusion.pass && relevance.pass; }
};

struct MarkovThresholds {
    double mi_nats = 0.05;
    double min_t_stat = 4.0;
};

MarkovReport validate_markov_conditions(const SampleBatch& batch, int bins = 8,
                                        const MarkovThresholds& thresholds = {});

}  // namespace mfgsec::mr
