#include "mfgsec/kl_optics.hpp"

#include "mfgsec/errors.hpp"
#include "mfgsec/random.hpp"
#include "mfgsec/stats.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace mfgsec::kl {

namespace {

constexpr double kSymmetryTol = 1e-10;
constexpr double kNegligibleEig = 1e-12;

void check_trunc(const KLBasis& basis, Eigen::Index trunc) {
    if (trunc < 1 || trunc > basis.eigvals.size())
        throw InvalidInput("truncation must lie in [1, " + std::to_string(basis.eigvals.size()) + "]");
}

}  // namespace

int BeamSet::max_mode() const {
    int m = 0;
    for (int l : modes) m = std::max(m, std::abs(l));
    return m;
}

void BeamSet::validate() const {
    if (modes.empty()) throw InvalidInput("beam set has no modes");
    if (amps.size() != modes.size()) throw InvalidInput("beam set needs one amplitude per mode");
    for (const auto& a : amps)
        if (!std::isfinite(a.real()) || !std::isfinite(a.imag())) throw InvalidInput("beam amplitudes must be finite");
    if (!(turb_sigma >= 0.0) || !std::isfinite(turb_sigma)) throw InvalidInput("turb_sigma must be finite and >= 0");
    const std::size_t need = 2 * static_cast<std::size_t>(max_mode()) + 1;
    if (ring_points < need)
        throw AliasingError("ring_points " + std::to_string(ring_points) + " below Nyquist bound " + std::to_string(need));
}

double BeamSet::angle(std::size_t k) const {
    return 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(ring_points);
}

std::vector<double> irradiance_field(const BeamSet& beams, std::uint64_t seed) {
    beams.validate();
    Rng rng(seed);
    std::vector<double> eps(beams.modes.size(), 0.0);
    if (beams.turb_sigma > 0.0)
        for (double& e : eps) e = rng.normal(beams.turb_sigma);

    std::vector<double> field(beams.ring_points);
    for (std::size_t k = 0; k < beams.ring_points; ++k) {
        const double phi = beams.angle(k);
        std::complex<double> sum{0.0, 0.0};
        for (std::size_t j = 0; j < beams.modes.size(); ++j)
            sum += beams.amps[j] * std::polar(1.0, beams.modes[j] * phi + eps[j]);
        field[k] = std::norm(sum);
    }
    return field;
}

Eigen::MatrixXd irradiance_realizations(const BeamSet& beams, std::size_t count, std::uint64_t seed) {
    beams.validate();
    Eigen::MatrixXd out(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(beams.ring_points));
    for (std::size_t r = 0; r < count; ++r) {
        const auto f = irradiance_field(beams, derive_seed(seed, r));
        for (std::size_t k = 0; k < f.size(); ++k) out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = f[k];
    }
    return out;
}

Eigen::VectorXd Quadrature::nodes(Eigen::Index k) const {
    if (k < 2) throw InvalidInput("quadrature needs at least two nodes");
    if (!(b > a)) throw InvalidInput("quadrature interval must satisfy b > a");
    if (rule == QuadratureRule::periodic) {
        Eigen::VectorXd x(k);
        const double h = (b - a) / static_cast<double>(k);
        for (Eigen::Index i = 0; i < k; ++i) x(i) = a + static_cast<double>(i) * h;
        return x;
    }
    return Eigen::VectorXd::LinSpaced(k, a, b);
}

Eigen::VectorXd Quadrature::weights(Eigen::Index k) const {
    if (k < 2) throw InvalidInput("quadrature needs at least two nodes");
    switch (rule) {
        case QuadratureRule::unit:
            return Eigen::VectorXd::Ones(k);
        case QuadratureRule::periodic:
            return Eigen::VectorXd::Constant(k, (b - a) / static_cast<double>(k));
        case QuadratureRule::trapezoid: {
            const auto w = stats::trapezoid_weights(static_cast<std::size_t>(k), (b - a) / static_cast<double>(k - 1));
            return Eigen::Map<const Eigen::VectorXd>(w.data(), k);
        }
    }
    return {};
}

KLBasis nystrom_eigenpairs(const Eigen::MatrixXd& kernel, const Quadrature& quad) {
    const Eigen::Index k = kernel.rows();
    if (k != kernel.cols()) throw InvalidInput("kernel must be square");
    if (!kernel.allFinite()) throw InvalidInput("kernel has non-finite entries");
    const double asym = (kernel - kernel.transpose()).cwiseAbs().maxCoeff();
    if (asym > kSymmetryTol * std::max(1.0, kernel.cwiseAbs().maxCoeff()))
        throw InvalidInput("kernel is not symmetric");

    KLBasis basis;
    basis.grid = quad.nodes(k);
    basis.weights = quad.weights(k);
    basis.kernel = kernel;

    const Eigen::VectorXd sw = basis.weights.cwiseSqrt();
    Eigen::MatrixXd a = sw.asDiagonal() * kernel * sw.asDiagonal();
    a = 0.5 * (a + a.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
    if (es.info() != Eigen::Success) throw InvalidInput("eigen-decomposition failed");

    // Eigen returns ascending order.
    basis.eigvals = es.eigenvalues().reverse().cwiseMax(0.0);
    basis.eigfuncs = sw.cwiseInverse().asDiagonal() * es.eigenvectors().rowwise().reverse();
    basis.trunc = k;
    return basis;
}

KLBasis kl_from_realizations(const Eigen::MatrixXd& samples, const Quadrature& quad) {
    if (samples.rows() < 2) throw InvalidInput("need at least two realizations");
    const Eigen::VectorXd mean = samples.colwise().mean().transpose();
    const Eigen::MatrixXd centered = samples.rowwise() - mean.transpose();
    Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(samples.rows() - 1);
    cov = 0.5 * (cov + cov.transpose());

    KLBasis basis = nystrom_eigenpairs(cov, quad);
    basis.mean = mean;
    basis.coeffs = kl_coefficients(basis, samples);
    return basis;
}

Eigen::MatrixXd kl_coefficients(const KLBasis& basis, const Eigen::MatrixXd& samples) {
    if (samples.cols() != basis.size()) throw InvalidInput("sample width does not match the basis grid");
    Eigen::MatrixXd centered = samples;
    if (basis.mean.size() == basis.size()) centered = samples.rowwise() - basis.mean.transpose();

    Eigen::MatrixXd proj = centered * basis.weights.asDiagonal() * basis.eigfuncs;
    const double floor = kNegligibleEig * std::max(basis.eigvals.size() ? basis.eigvals(0) : 0.0, 1e-300);
    for (Eigen::Index n = 0; n < proj.cols(); ++n) {
        const double lam = basis.eigvals(n);
        if (lam > floor) proj.col(n) /= std::sqrt(lam);
        else proj.col(n).setZero();
    }
    return proj;
}

Reconstruction kl_reconstruct(const KLBasis& basis, Eigen::Index trunc) {
    check_trunc(basis, trunc);
    const auto phi = basis.eigfuncs.leftCols(trunc);
    Reconstruction r;
    r.kernel = phi * basis.eigvals.head(trunc).asDiagonal() * phi.transpose();
    r.error = (r.kernel - basis.kernel).norm();
    const double ref = basis.kernel.norm();
    r.relative_error = ref > 0.0 ? r.error / ref : r.error;
    return r;
}

SnrBer snr_ber(const KLBasis& basis, double noise_var, Eigen::Index trunc) {
    if (!(noise_var > 0.0)) throw InvalidInput("noise_var must be positive");
    check_trunc(basis, trunc);
    SnrBer out;
    out.avg_snr = basis.eigvals.head(trunc).sum() / noise_var;
    out.ber = stats::gaussian_q(std::sqrt(out.avg_snr));
    return out;
}

}  // namespace mfgsec::kl
