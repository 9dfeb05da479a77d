#pragma once

// SVD randomization of the design matrix, change of variables for the scaled
// control law, inverse-CDF sampling of tabulated densities and Monte Carlo
// outage probability.

#include "mfgsec/mr_pipeline.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace mfgsec::outage {

struct SvdFactors {
    Eigen::MatrixXd u1;     // left singular vectors, orthonormal columns
    Eigen::VectorXd sigma;  // descending, non-negative
    Eigen::MatrixXd u2;     // right factor (V^T), orthonormal rows

    Eigen::MatrixXd reconstruct() const { return u1 * sigma.asDiagonal() * u2; }
};

SvdFactors decompose_design(const Eigen::MatrixXd& g);

// Density tabulated on a uniform grid x_i = x0 + i dx.
struct PdfTable {
    double x0 = 0.0;
    double dx = 1.0;
    std::vector<double> density;

    std::size_t size() const { return density.size(); }
    double x(std::size_t i) const { return x0 + static_cast<double>(i) * dx; }
    double x_end() const { return x(size() - 1); }
    double mass() const;  // trapezoid
    void validate() const;

    static constexpr std::size_t default_points = 1024;
    static PdfTable from_function(const std::function<double(double)>& f, double a, double b,
                                  std::size_t points = default_points);
    PdfTable normalized() const;
};

// Density of theta_prime * Z for Z distributed as `table`.
PdfTable scaled_control_pdf(const PdfTable& table, double theta_prime);

// Cumulative trapezoid CDF at the grid nodes, normalized to end at 1.
std::vector<double> cdf_nodes(const PdfTable& table);

std::vector<double> inverse_cdf_sample(const PdfTable& table, std::span<const double> u);

// phi2 = scale * phi1 + offset.
struct ThresholdMap {
    double scale = 1.0;
    double offset = 0.0;
    double apply(double phi1) const { return scale * phi1 + offset; }
};

struct OutageConfig {
    double phi1 = 0.0;
    std::optional<double> phi2;  // overrides the threshold map when set
    ThresholdMap threshold_map;
    std::optional<double> theta_prime;  // derived from the structural model when unset
    PdfTable pdf_table;                 // law of the randomized factor before scaling
    std::size_t mc_samples = 10000;
    std::size_t design_rows = 1000;     // rows of the sampled design matrix

    double threshold() const { return phi2 ? *phi2 : threshold_map.apply(phi1); }
};

struct OutageReport {
    double estimate = 0.0;
    double std_error = 0.0;
    std::size_t samples = 0;
    double threshold = 0.0;
    double theta_prime = 0.0;
};

// Gain of the leading rank-one component of the design:
// theta * <v1, beta_x> * sigma1 / sqrt(n), sign fixed so <v1, beta_x> >= 0.
double effective_theta_prime(const mr::StructuralModel& model, const SvdFactors& design, Eigen::Index rows);

OutageReport outage_probability(const OutageConfig& config, const mr::StructuralModel& model, std::uint64_t seed);

// Same, with an explicit theta_prime and no structural model.
OutageReport outage_probability(const OutageConfig& config, std::uint64_t seed);

}  // namespace mfgsec::outage
