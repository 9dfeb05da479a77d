#include "doctest.h"

#include "mfgsec/errors.hpp"
#include "mfgsec/kl_optics.hpp"

#include <cmath>
#include <numbers>

using namespace mfgsec;
using namespace mfgsec::kl;

namespace {

Eigen::MatrixXd brownian_kernel(const Eigen::VectorXd& t) {
    const Eigen::Index k = t.size();
    Eigen::MatrixXd r(k, k);
    for (Eigen::Index i = 0; i < k; ++i)
        for (Eigen::Index j = 0; j < k; ++j) r(i, j) = std::min(t(i), t(j));
    return r;
}

double q_oracle(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

BeamSet turbulent_beams() {
    BeamSet b;
    b.modes = {-1, 0, 1, 2, 3};
    b.amps = {1.0, {0.6, 0.4}, 0.6, {0.3, -0.4}, 0.45};
    b.turb_sigma = 1.0;
    b.ring_points = 16;
    return b;
}

const Quadrature ring{0.0, 2.0 * std::numbers::pi, QuadratureRule::periodic};

}  // namespace

TEST_CASE("irradiance_field") {
    SUBCASE("single unit mode is flat") {
        BeamSet b{{3}, {std::polar(1.0, 0.4)}, 0.0, 32};
        for (double v : irradiance_field(b, 1)) CHECK(v == doctest::Approx(1.0).epsilon(1e-14));
    }
    SUBCASE("two modes interfere as 2 + 2 cos(phi)") {
        BeamSet b{{0, 1}, {1.0, 1.0}, 0.0, 24};
        const auto f = irradiance_field(b, 1);
        for (std::size_t k = 0; k < f.size(); ++k) CHECK(std::abs(f[k] - (2.0 + 2.0 * std::cos(b.angle(k)))) < 1e-12);
    }
    SUBCASE("deterministic under seed") {
        const auto b = turbulent_beams();
        CHECK(irradiance_field(b, 9) == irradiance_field(b, 9));
        CHECK(irradiance_field(b, 9) != irradiance_field(b, 10));
        BeamSet calm = b;
        calm.turb_sigma = 0.0;
        CHECK(irradiance_field(calm, 1) == irradiance_field(calm, 2));
    }
    SUBCASE("non-negative") {
        const auto r = irradiance_realizations(turbulent_beams(), 50, 3);
        CHECK(r.minCoeff() >= 0.0);
    }
    SUBCASE("aliasing") {
        BeamSet b{{0, 4}, {1.0, 1.0}, 0.0, 8};
        CHECK_THROWS_AS(irradiance_field(b, 1), AliasingError);
        b.ring_points = 9;
        CHECK_NOTHROW(irradiance_field(b, 1));
    }
    SUBCASE("amplitude count mismatch") {
        BeamSet b{{0, 1}, {1.0}, 0.0, 8};
        CHECK_THROWS_AS(irradiance_field(b, 1), InvalidInput);
    }
}

TEST_CASE("nystrom_eigenpairs") {
    SUBCASE("Brownian motion covariance") {
        const Quadrature q{0.0, 1.0, QuadratureRule::trapezoid};
        const auto basis = nystrom_eigenpairs(brownian_kernel(q.nodes(200)), q);
        for (int n = 1; n <= 5; ++n) {
            const double exact = 1.0 / std::pow((n - 0.5) * std::numbers::pi, 2);
            CHECK(std::abs(basis.eigvals(n - 1) - exact) / exact < 0.01);
        }
        const Eigen::MatrixXd gram = basis.eigfuncs.transpose() * basis.weights.asDiagonal() * basis.eigfuncs;
        CHECK((gram - Eigen::MatrixXd::Identity(200, 200)).cwiseAbs().maxCoeff() < 1e-8);
        for (Eigen::Index n = 1; n < basis.eigvals.size(); ++n) CHECK(basis.eigvals(n) <= basis.eigvals(n - 1));
    }
    SUBCASE("constant kernel has rank one") {
        const Quadrature q{-1.0, 2.0, QuadratureRule::trapezoid};
        const auto basis = nystrom_eigenpairs(Eigen::MatrixXd::Constant(41, 41, 0.7), q);
        CHECK(basis.eigvals(0) == doctest::Approx(0.7 * 3.0).epsilon(1e-12));
        CHECK(basis.eigvals.tail(40).maxCoeff() < 1e-12);
    }
    SUBCASE("isotropic discrete kernel") {
        const Quadrature q{0.0, 1.0, QuadratureRule::unit};
        const auto basis = nystrom_eigenpairs(2.5 * Eigen::MatrixXd::Identity(12, 12), q);
        for (Eigen::Index n = 0; n < 12; ++n) CHECK(basis.eigvals(n) == doctest::Approx(2.5));
    }
    SUBCASE("Parseval against the trapezoid trace") {
        const Quadrature q{0.0, 1.0, QuadratureRule::trapezoid};
        const auto t = q.nodes(150);
        Eigen::MatrixXd r(150, 150);
        for (Eigen::Index i = 0; i < 150; ++i)
            for (Eigen::Index j = 0; j < 150; ++j) r(i, j) = std::exp(-std::abs(t(i) - t(j)) / 0.3);
        const auto basis = nystrom_eigenpairs(r, q);
        const double trace = basis.weights.dot(r.diagonal());
        CHECK(std::abs(basis.eigvals.sum() - trace) / trace < 1e-6);
    }
    SUBCASE("asymmetric kernel") {
        Eigen::MatrixXd r = Eigen::MatrixXd::Identity(5, 5);
        r(0, 1) = 1e-6;
        CHECK_THROWS_AS(nystrom_eigenpairs(r, Quadrature{}), InvalidInput);
    }
}

TEST_CASE("kl_reconstruct") {
    const Quadrature q{0.0, 1.0, QuadratureRule::trapezoid};
    const auto basis = nystrom_eigenpairs(brownian_kernel(q.nodes(80)), q);
    SUBCASE("full basis is exact") { CHECK(kl_reconstruct(basis, 80).relative_error < 1e-8); }
    SUBCASE("error is non-increasing in the truncation") {
        double prev = kl_reconstruct(basis, 1).error;
        for (Eigen::Index n = 2; n <= 80; ++n) {
            const double e = kl_reconstruct(basis, n).error;
            CHECK(e <= prev + 1e-12);
            prev = e;
        }
        CHECK(kl_reconstruct(basis, 10).error <= kl_reconstruct(basis, 5).error);
    }
    SUBCASE("rank-one kernel with one term") {
        const auto b1 = nystrom_eigenpairs(Eigen::MatrixXd::Constant(30, 30, 2.0), q);
        CHECK(kl_reconstruct(b1, 1).relative_error < 1e-12);
    }
    SUBCASE("truncation out of range") {
        CHECK_THROWS_AS(kl_reconstruct(basis, 0), InvalidInput);
        CHECK_THROWS_AS(kl_reconstruct(basis, 81), InvalidInput);
    }
}

TEST_CASE("snr_ber") {
    const auto unit = nystrom_eigenpairs(Eigen::MatrixXd::Constant(2, 2, 1.0),
                                         Quadrature{0.0, 1.0, QuadratureRule::trapezoid});
    SUBCASE("unit energy at unit noise") {
        const auto r = snr_ber(unit, 1.0, 2);
        CHECK(r.avg_snr == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(r.ber == doctest::Approx(q_oracle(1.0)).epsilon(1e-12));
        CHECK(r.ber == doctest::Approx(0.15866).epsilon(1e-4));
    }
    SUBCASE("limits and monotonicity along a noise sweep") {
        CHECK(snr_ber(unit, 1e12, 2).ber == doctest::Approx(0.5).epsilon(1e-5));
        CHECK(snr_ber(unit, 1e-4, 2).ber < 1e-20);
        double prev = 0.0;
        for (double nv = 1e-2; nv < 1e3; nv *= 1.5) {
            const double ber = snr_ber(unit, nv, 2).ber;
            CHECK(ber > prev);
            prev = ber;
        }
    }
    SUBCASE("non-positive noise") {
        CHECK_THROWS_AS(snr_ber(unit, 0.0, 1), InvalidInput);
        CHECK_THROWS_AS(snr_ber(unit, -1.0, 1), InvalidInput);
    }
}

TEST_CASE("KL of turbulent irradiance") {
    const auto beams = turbulent_beams();
    const auto train = irradiance_realizations(beams, 2000, 11);
    const auto basis = kl_from_realizations(train, ring);
    constexpr Eigen::Index modes = 3;

    SUBCASE("in-sample coefficients are uncorrelated") {
        const Eigen::MatrixXd c = basis.coeffs.leftCols(modes);
        const Eigen::MatrixXd corr = c.transpose() * c / static_cast<double>(c.rows() - 1);
        CHECK((corr - Eigen::MatrixXd::Identity(modes, modes)).cwiseAbs().maxCoeff() < 0.05);
        CHECK((corr - Eigen::MatrixXd::Identity(modes, modes)).cwiseAbs().maxCoeff() < 1e-8);
    }
    SUBCASE("fresh realizations stay uncorrelated") {
        // Each moment E[a_m a_n] is compared with delta_mn within four standard errors.
        const auto test = irradiance_realizations(beams, 2000, 12);
        const Eigen::MatrixXd c = kl_coefficients(basis, test).leftCols(modes);
        const double n = static_cast<double>(c.rows());
        for (Eigen::Index i = 0; i < modes; ++i)
            for (Eigen::Index j = i; j < modes; ++j) {
                const Eigen::ArrayXd prod = c.col(i).array() * c.col(j).array();
                const double m = prod.mean();
                const double se = std::sqrt((prod - m).square().sum() / (n - 1.0) / n);
                CHECK(std::abs(m - (i == j ? 1.0 : 0.0)) <= 4.0 * se);
            }
    }
    SUBCASE("energy bookkeeping") {
        const double trace = basis.weights.dot(basis.kernel.diagonal());
        CHECK(std::abs(basis.eigvals.sum() - trace) / trace < 1e-6);
    }
}
