#pragma once

// Multivariate Hawkes process with exponential triggering kernels, the
// Galton-Watson view of its clusters, and the eavesdropper control laws built
// on them.

#include "mfgsec/mfg_solver.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace mfgsec::hawkes {

// zeta_ij(t) = alpha_ij exp(-beta_ij t): excitation of dimension i by events in j.
struct HawkesModel {
    Eigen::VectorXd gamma;
    Eigen::MatrixXd alpha;
    Eigen::MatrixXd beta;
    double horizon = 1.0;
    bool allow_nonstationary = false;

    static HawkesModel univariate(double gamma, double alpha, double beta, double horizon);

    Eigen::Index dims() const { return gamma.size(); }
    Eigen::MatrixXd branching_matrix() const;  // alpha / beta
    double spectral_radius() const;
    void validate() const;
};

// Replays the exponential recursion forward so repeated queries at increasing
// times cost O(new events).
class IntensityCursor {
public:
    IntensityCursor() = default;
    IntensityCursor(const HawkesModel& model, const std::vector<std::vector<double>>& events);

    Eigen::VectorXd at(double t);

private:
    const HawkesModel* model_ = nullptr;
    const std::vector<std::vector<double>>* events_ = nullptr;
    std::vector<std::size_t> next_;
    Eigen::MatrixXd excitation_;  // sum_k alpha_ij exp(-beta_ij (time_ - t_k^j))
    double time_ = 0.0;

    void reset();
};

struct HawkesState {
    std::vector<std::vector<double>> events;              // per dimension, increasing
    std::vector<std::vector<double>> intensity_at_event;  // left limit of the own-dimension intensity

    std::size_t total_events() const;
};

HawkesState simulate_hawkes(const HawkesModel& model, std::uint64_t seed);

// Left-continuous intensity gamma + sum over events strictly before t.
Eigen::VectorXd intensity_eval(const HawkesModel& model, const HawkesState& state, double t);

// int_0^t intensity - N(t), closed form.
Eigen::VectorXd compensator(const HawkesModel& model, const HawkesState& state, double t);

// Gaps of Lambda_i at the events of dimension i; Exp(1) under the model.
std::vector<double> rescaled_intervals(const HawkesModel& model, const HawkesState& state, Eigen::Index dim);

// Cluster representation of a univariate process: immigrants at rate gamma,
// Poisson(alpha / beta) children per event, Exp(beta) delays.
struct Cluster {
    double start = 0.0;
    double last = 0.0;  // last event time within the horizon
    std::size_t size = 0;
};

struct ClusterProcess {
    std::vector<Cluster> clusters;
    double horizon = 0.0;

    // Clusters with start <= t < last.
    std::size_t live_at(double t) const;
    std::size_t total_events() const;
};

ClusterProcess simulate_clusters(const HawkesModel& model, std::uint64_t seed, std::size_t max_events = 2'000'000);

// Smallest root of q = exp(m (q - 1)).
double extinction_probability(double offspring_mean);

struct LatticeRegion {
    std::vector<double> omega_sides;
    int n_dim = 1;
    double cte = 2.0;
    double var_pp = 1.0;
    double err_prob = 0.0;

    void validate() const;
};

double volume_to_noise_ratio(const LatticeRegion& region);

struct AdversaryState {
    std::vector<double> theta_eve;  // above-baseline intensity on the time grid
    double offspring_mean = 0.0;
    double extinction_prob = 1.0;
    double r_conv = 1e-3;
    LatticeRegion region;

    std::optional<HawkesModel> model;
    std::optional<HawkesState> events;
    std::optional<ClusterProcess> clusters;

    void validate() const;
};

// Fills offspring_mean and extinction_prob from a univariate model.
AdversaryState make_adversary(const HawkesModel& model, double r_conv = 1e-3);

// theta_eve(t) = intensity(t) - gamma, summed over dimensions.
std::vector<double> eve_activity(const HawkesModel& model, const HawkesState& state, std::span<const double> times);

using OutageLaw = std::function<double(double q)>;

double secrecy_outage(const AdversaryState& adversary);
double secrecy_outage(const AdversaryState& adversary, const OutageLaw& law);

enum class EveMode { compensated, extinction };

struct EveTrajectory {
    std::vector<double> t;
    std::vector<double> state;
    std::vector<double> drift;
};

// Euler-Maruyama for d beta = (-theta(v, beta) + drift(v)) dv + w dW with
// w = W7 (compensated) or W8 (extinction). The drift is the summed compensator
// or q^A(v), A the number of live clusters.
EveTrajectory eve_control_law(const mfg::MFGGrid& grid, const Eigen::MatrixXd& theta, const AdversaryState& adversary,
                              const mfg::NoiseSpec& noise, EveMode mode, double x0 = 0.0);

}  // namespace mfgsec::hawkes
