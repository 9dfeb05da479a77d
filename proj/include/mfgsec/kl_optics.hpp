#pragma once

// Ring-sampled OAM irradiance, Nystrom Karhunen-Loeve decomposition of its
// covariance, and the average SNR / BER read off the eigenvalues.

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <vector>

namespace mfgsec::kl {

struct BeamSet {
    std::vector<int> modes;
    std::vector<std::complex<double>> amps;
    double turb_sigma = 0.0;       // std of the per-mode phase perturbation
    std::size_t ring_points = 64;

    int max_mode() const;
    void validate() const;
    double angle(std::size_t k) const;
};

// One realization of I(phi_k) = |sum_l a_l exp(i(l phi_k + eps_l))|^2.
std::vector<double> irradiance_field(const BeamSet& beams, std::uint64_t seed);

// count x K matrix, one independent realization per row.
Eigen::MatrixXd irradiance_realizations(const BeamSet& beams, std::size_t count, std::uint64_t seed);

enum class QuadratureRule { trapezoid, periodic, unit };

struct Quadrature {
    double a = 0.0;
    double b = 1.0;
    QuadratureRule rule = QuadratureRule::trapezoid;

    // Trapezoid places nodes on [a, b] with both ends; periodic drops b.
    Eigen::VectorXd nodes(Eigen::Index k) const;
    Eigen::VectorXd weights(Eigen::Index k) const;
};

struct KLBasis {
    Eigen::VectorXd grid;
    Eigen::VectorXd weights;
    Eigen::MatrixXd kernel;
    Eigen::VectorXd eigvals;   // descending, clipped at 0
    Eigen::MatrixXd eigfuncs;  // columns, orthonormal in the weighted inner product
    Eigen::VectorXd mean;      // empty for analytic kernels
    Eigen::MatrixXd coeffs;    // realizations x modes, unit variance scaling
    Eigen::Index trunc = 0;

    Eigen::Index size() const { return grid.size(); }
};

KLBasis nystrom_eigenpairs(const Eigen::MatrixXd& kernel, const Quadrature& quad);

// Empirical covariance of the rows of `samples`, its eigenpairs and the
// standardized coefficients of every sample.
KLBasis kl_from_realizations(const Eigen::MatrixXd& samples, const Quadrature& quad);

// a_n = <x - mean, phi_n> / sqrt(lambda_n); zero for modes with negligible lambda.
Eigen::MatrixXd kl_coefficients(const KLBasis& basis, const Eigen::MatrixXd& samples);

struct Reconstruction {
    Eigen::MatrixXd kernel;
    double error = 0.0;           // Frobenius
    double relative_error = 0.0;
};

Reconstruction kl_reconstruct(const KLBasis& basis, Eigen::Index trunc);

struct SnrBer {
    double avg_snr = 0.0;
    double ber = 0.0;
};

SnrBer snr_ber(const KLBasis& basis, double noise_var, Eigen::Index trunc);

}  // namespace mfgsec::kl
