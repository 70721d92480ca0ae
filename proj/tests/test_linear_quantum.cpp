#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "dopo/classical.hpp"
#include "dopo/errors.hpp"
#include "dopo/linear_quantum.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

using namespace dopo;
using namespace dopo::linquant;

TEST_CASE("empty-mode system structure") {
    const double kappa = 0.5;
    const auto sys = empty_mode_system(kappa);

    SUBCASE("eigenvalues -gamma(1 -+ kappa), each twice") {
        Eigen::EigenSolver<Eigen::MatrixXd> es(sys.drift);
        std::vector<double> evs;
        for (int i = 0; i < 4; ++i) {
            CHECK(std::abs(es.eigenvalues()(i).imag()) < 1e-12);
            evs.push_back(es.eigenvalues()(i).real());
        }
        std::sort(evs.begin(), evs.end());
        CHECK(evs[0] == doctest::Approx(-1.5).epsilon(1e-12));
        CHECK(evs[1] == doctest::Approx(-1.5).epsilon(1e-12));
        CHECK(evs[2] == doctest::Approx(-0.5).epsilon(1e-12));
        CHECK(evs[3] == doctest::Approx(-0.5).epsilon(1e-12));
    }
    SUBCASE("the printed eigenvectors diagonalize the drift and are orthonormal") {
        Eigen::MatrixXd W(4, 4);
        W.col(0) << 1, 1, 1, 1;    // lambda = -(1-k)
        W.col(1) << 1, -1, -1, 1;  // lambda = -(1-k)
        W.col(2) << 1, 1, -1, -1;  // lambda = -(1+k)
        W.col(3) << 1, -1, 1, -1;  // lambda = -(1+k)
        W *= 0.5;
        const double lam[4] = {-(1 - kappa), -(1 - kappa), -(1 + kappa), -(1 + kappa)};
        for (int j = 0; j < 4; ++j)
            CHECK((sys.drift * W.col(j) - lam[j] * W.col(j)).norm() < 1e-14);
        CHECK((W.transpose() * W - Eigen::MatrixXd::Identity(4, 4)).norm() < 1e-14);
    }
    SUBCASE("diffusion carries only the +l/-l cross blocks") {
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) {
                const double expect =
                    ((i == 0 && j == 2) || (i == 2 && j == 0) || (i == 1 && j == 3) ||
                     (i == 3 && j == 1))
                        ? kappa
                        : 0.0;
                CHECK(sys.diffusion(i, j) == doctest::Approx(expect));
            }
    }
    SUBCASE("kappa outside (0,1) rejected") {
        CHECK_THROWS_AS(empty_mode_system(0.0), ValidationError);
        CHECK_THROWS_AS(empty_mode_system(1.0), ValidationError);
    }
}

TEST_CASE("empty-mode closed forms") {
    SUBCASE("spot values at omega = 0") {
        CHECK(empty_mode_spectrum(0.5, 0.0).y == doctest::Approx(-8.0 / 9.0).epsilon(1e-14));
        CHECK(empty_mode_spectrum(2.0 / 3.0, 0.0).y ==
              doctest::Approx(-24.0 / 25.0).epsilon(1e-14));
        CHECK(empty_mode_spectrum(0.5, 0.0).x == doctest::Approx(8.0).epsilon(1e-14));
    }
    SUBCASE("vacuum at large noise frequency") {
        CHECK(std::abs(empty_mode_spectrum(0.5, 1e5).y) < 1e-9);
    }
    SUBCASE("perfect squeezing as kappa -> 1") {
        CHECK(empty_mode_spectrum(1.0 - 1e-7, 0.0).y == doctest::Approx(-1.0).epsilon(1e-11));
    }
}

TEST_CASE("projection spectra relations") {
    const auto grid = omega_grid(10.0, 100);
    for (double kappa : {1.0 / 6.0, 0.5}) {
        for (double w : grid) {
            const auto c = projection_spectra(kappa, w);
            const auto s = empty_mode_spectrum(kappa, w);
            CHECK(std::abs(4.0 * c[2] - s.y) < 1e-12);
            CHECK(std::abs(4.0 * c[0] - s.x) < 1e-12);
            CHECK(c[0] + c[1] == 0.0);
            CHECK(c[2] + c[3] == 0.0);
        }
    }
}

TEST_CASE("resolvent engine reproduces the closed forms") {
    const auto grid = omega_grid(10.0, 100);
    for (double kappa : {1.0 / 6.0, 1.0 / 3.0, 0.5, 2.0 / 3.0}) {
        const auto sys = empty_mode_system(kappa);
        for (auto mode : {ModeKind::hybrid_c, ModeKind::hybrid_s}) {
            const auto Sy = spectrum_grid(sys, {mode, Quadrature::y}, grid);
            const auto Sx = spectrum_grid(sys, {mode, Quadrature::x}, grid);
            for (size_t i = 0; i < grid.size(); ++i) {
                const auto closed = empty_mode_spectrum(kappa, grid[i]);
                CHECK(std::abs(Sy.S[i] - closed.y) < 1e-10);
                CHECK(std::abs(Sx.S[i] - closed.x) < 1e-10);
            }
        }
    }
}

TEST_CASE("hybrid equivalence and orientation invariance") {
    const auto sys = empty_mode_system(0.37);
    const auto grid = omega_grid(6.0, 31);
    const auto yc = spectrum_grid(sys, {ModeKind::hybrid_c, Quadrature::y}, grid);
    const auto ys = spectrum_grid(sys, {ModeKind::hybrid_s, Quadrature::y}, grid);
    for (size_t i = 0; i < grid.size(); ++i)
        CHECK(yc.S[i] == doctest::Approx(ys.S[i]).epsilon(1e-13));

    const auto rotated =
        spectrum_grid(sys, {ModeKind::hybrid_c, Quadrature::y, 0.7}, grid);
    for (size_t i = 0; i < grid.size(); ++i)
        CHECK(std::abs(rotated.S[i] - yc.S[i]) < 1e-12);
}

TEST_CASE("bright mode, even families (l0 = 0)") {
    SUBCASE("near-threshold critical squeezing") {
        const auto sys = bright_mode_system(0, 1.001, 0.01);
        const double Sy = matrix_spectrum(sys, {ModeKind::oam_plus, Quadrature::y}, 0.0);
        CHECK(1.0 + Sy < 0.01);
        CHECK(1.0 + Sy == doctest::Approx(1.0 - 1.0 / (1.001 * 1.001)).epsilon(1e-9));
    }
    SUBCASE("amplitude quadrature is critical at threshold") {
        const auto sys = bright_mode_system(0, 1.0, 0.01);
        CHECK_THROWS_AS(
            matrix_spectrum(sys, {ModeKind::oam_plus, Quadrature::x}, 0.0),
            GoldstoneOverlapError);
    }
    SUBCASE("above threshold the amplitude spectrum is finite") {
        const auto sys = bright_mode_system(0, 2.0, 0.01);
        const double Sx = matrix_spectrum(sys, {ModeKind::oam_plus, Quadrature::x}, 0.0);
        CHECK(Sx == doctest::Approx(1.0).epsilon(1e-10)); // 4/(4(sigma-1)^2) at sigma=2
    }
    SUBCASE("below threshold rejected") {
        CHECK_THROWS_AS(bright_mode_system(0, 0.99, 0.01), ValidationError);
    }
}

TEST_CASE("bright mode, odd families (l0 = 1)") {
    for (double sigma : {1.5, 4.0}) {
        const auto sys = bright_mode_system(1, sigma, 0.02);

        SUBCASE(("Goldstone zero eigenvalue, sigma = " + std::to_string(sigma)).c_str()) {
            Eigen::EigenSolver<Eigen::MatrixXd> es(sys.drift);
            int zeros = 0;
            for (int i = 0; i < 4; ++i)
                if (std::abs(es.eigenvalues()(i)) < 1e-12) ++zeros;
            CHECK(zeros == 1);
        }
        SUBCASE(("perfect crossed-hybrid squeezing, sigma = " + std::to_string(sigma)).c_str()) {
            const double Sy =
                matrix_spectrum(sys, {ModeKind::hybrid_s, Quadrature::y}, 0.0);
            CHECK(std::abs(Sy + 1.0) < 1e-10);
        }
        SUBCASE(("orientation quadrature diffuses, sigma = " + std::to_string(sigma)).c_str()) {
            CHECK_THROWS_AS(
                matrix_spectrum(sys, {ModeKind::hybrid_s, Quadrature::x}, 0.0),
                GoldstoneOverlapError);
        }
        SUBCASE(("bright pair matches the single-mode phase spectrum, sigma = " +
                 std::to_string(sigma)).c_str()) {
            const auto grid = omega_grid(5.0, 21);
            const auto yc = spectrum_grid(sys, {ModeKind::hybrid_c, Quadrature::y}, grid);
            for (size_t i = 0; i < grid.size(); ++i) {
                const double w = grid[i];
                CHECK(yc.S[i] ==
                      doctest::Approx(-4.0 / (4.0 * sigma * sigma + w * w)).epsilon(1e-10));
            }
        }
    }
}

TEST_CASE("engine edge cases") {
    SUBCASE("zero diffusion gives the vacuum spectrum") {
        auto sys = empty_mode_system(0.4);
        sys.diffusion.setZero();
        for (double w : {0.0, 0.7, 3.0})
            CHECK(matrix_spectrum(sys, {ModeKind::hybrid_c, Quadrature::y}, w) == 0.0);
    }
    SUBCASE("marginal oscillatory mode hit by omega") {
        LinearSystem sys;
        sys.gamma_s = 1.0;
        sys.labels = {"a", "b"};
        sys.drift.resize(2, 2);
        sys.drift << 0, 1, -1, 0; // eigenvalues +-i
        sys.diffusion = Eigen::MatrixXd::Identity(2, 2);
        Eigen::VectorXcd v(2);
        v << 1.0, 0.0;
        CHECK_THROWS_AS(matrix_spectrum(sys, v, 1.0), NumericalError);
        CHECK(std::isfinite(matrix_spectrum(sys, v, 0.5)));
    }
    SUBCASE("physicality: V >= 0 on analytic grids") {
        const auto grid = omega_grid(10.0, 41);
        for (double kappa = 0.05; kappa < 1.0; kappa += 0.1) {
            const auto sys = empty_mode_system(kappa);
            for (auto quad : {Quadrature::x, Quadrature::y}) {
                const auto res = spectrum_grid(sys, {ModeKind::hybrid_c, quad}, grid);
                for (double v : res.V) CHECK(v >= 0.0);
            }
        }
    }
    SUBCASE("selector dimension mismatch") {
        const auto sys = empty_mode_system(0.4);
        Eigen::VectorXcd v(2);
        v << 1.0, 1.0;
        CHECK_THROWS_AS(matrix_spectrum(sys, v, 0.0), ValidationError);
    }
}

TEST_CASE("noncriticality: the bright-branch kappa feed is sigma independent") {
    // The empty-mode spectrum takes no sigma; what could reintroduce sigma is
    // chi_l alpha00/gamma_s. Pump clamping pins it to kappa_l exactly, so the
    // fed value (and hence the spectrum) is bit-identical across pump levels.
    std::vector<double> feeds, spectra;
    for (double sigma : {1.01, 2.0, 10.0}) {
        const auto p = classical::DopoParams::make(2, sigma, 0.05, 2.0);
        const auto sols = classical::steady_states(p);
        const auto &k0 = sols[1];
        REQUIRE(k0.exists);
        const double feed = p.chi(2) * k0.pump_amp.real();
        feeds.push_back(feed);
        spectra.push_back(empty_mode_spectrum(feed, 0.0).y);
    }
    CHECK(feeds[0] == feeds[1]);
    CHECK(feeds[1] == feeds[2]);
    CHECK(spectra[0] == spectra[1]);
    CHECK(spectra[1] == spectra[2]);
    CHECK(feeds[0] == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("spectrum source labels") {
    CHECK(to_string(SpectrumSource::analytic_closed_form) == "analytic-closed-form");
    CHECK(to_string(SpectrumSource::analytic_matrix) == "analytic-matrix");
    CHECK(to_string(SpectrumSource::monte_carlo) == "monte-carlo");
}
