#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "dopo/classical.hpp"
#include "dopo/errors.hpp"
#include "dopo/io.hpp"
#include "dopo/modes.hpp"

#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <random>

using namespace dopo;
using namespace dopo::classical;

namespace {

double residual_norm(const ClassicalState &s, const DopoParams &p) {
    const auto d = classical_rhs(s, p);
    double m = std::abs(d.pump);
    for (const auto &z : d.signal) m = std::max(m, std::abs(z));
    return m;
}

std::vector<double> sorted_real_parts(const std::vector<Complex> &evs) {
    std::vector<double> re;
    for (const auto &ev : evs) re.push_back(ev.real());
    std::sort(re.begin(), re.end());
    return re;
}

} // namespace

TEST_CASE("rhs at the empty state") {
    const auto p = DopoParams::make(2, 1.7, 0.05, 3.0);
    const auto d = classical_rhs(ClassicalState::zero(p), p);
    CHECK(d.pump.real() == doctest::Approx(p.pump_drive()).epsilon(1e-14));
    CHECK(d.pump.imag() == 0.0);
    for (const auto &z : d.signal) CHECK(std::abs(z) == 0.0);
}

TEST_CASE("stationary solutions annihilate the rhs") {
    const auto p = DopoParams::make(3, 2.2, 0.07, 5.0);
    SUBCASE("trivial branch") {
        ClassicalSolution triv;
        triv.branch = Branch::trivial;
        triv.pump_amp = p.pump_drive() / p.gamma_ratio;
        CHECK(residual_norm(state_from_solution(triv, p), p) < 1e-14 * p.pump_drive());
    }
    SUBCASE("excited branch k = l0, arbitrary phase") {
        ClassicalSolution sol;
        sol.branch = Branch::excited;
        sol.k = 1;
        sol.pump_amp = 1.0 / p.chi(1);
        sol.rho = std::sqrt((p.sigma - 1.0) / (p.g * p.g));
        sol.theta = 0.913;
        CHECK(residual_norm(state_from_solution(sol, p), p) < 1e-12 * sol.rho);
    }
}

TEST_CASE("steady state enumeration") {
    SUBCASE("below threshold only the trivial branch exists") {
        const auto p = DopoParams::make(2, 0.5, 0.1, 2.0);
        const auto sols = steady_states(p);
        REQUIRE(sols.size() == 3); // trivial + k=0 + k=2
        CHECK(sols[0].branch == Branch::trivial);
        CHECK(sols[0].stable);
        CHECK(!sols[1].exists);
        CHECK(!sols[2].exists);
    }
    SUBCASE("sigma = 2, f = 2") {
        const auto p = DopoParams::make(2, 2.0, 0.1, 2.0);
        const auto sols = steady_states(p);
        CHECK(!sols[0].stable);
        const auto &k0 = sols[1];
        REQUIRE(k0.exists);
        CHECK(k0.k == 0);
        CHECK(k0.pump_amp.real() == doctest::Approx(1.0 / p.chi(0)).epsilon(1e-14));
        CHECK(k0.rho * k0.rho ==
              doctest::Approx(2.0 * (p.sigma - 1.0) / (p.g * p.g)).epsilon(1e-12));
    }
    SUBCASE("k = 2 branch appears only for sigma >= 2") {
        const auto lo = DopoParams::make(2, 1.5, 0.1, 2.0);
        CHECK(!steady_states(lo)[2].exists);
        const auto hi = DopoParams::make(2, 3.0, 0.1, 2.0);
        const auto &k2 = steady_states(hi)[2];
        REQUIRE(k2.exists);
        CHECK(k2.k == 2);
        // kappa_2 = 1/2: rho^2 = 2(sigma - 2)/g^2
        CHECK(k2.rho * k2.rho ==
              doctest::Approx(2.0 * (hi.sigma - 2.0) / (hi.g * hi.g)).epsilon(1e-12));
    }
}

TEST_CASE("trivial-branch spectrum matches the analytic block structure") {
    const auto p = DopoParams::make(3, 0.9, 0.12, 4.0);
    const auto sols = steady_states(p);
    const auto got = sorted_real_parts(sols[0].eigenvalues);

    std::vector<double> expect = {-p.gamma_ratio, -p.gamma_ratio};
    for (int l = 1; l <= 3; l += 2) {
        const double k = p.kappas.kappa(l);
        for (int rep = 0; rep < 2; ++rep) {
            expect.push_back(-(1.0 - p.sigma * k));
            expect.push_back(-(1.0 + p.sigma * k));
        }
    }
    std::sort(expect.begin(), expect.end());
    REQUIRE(got.size() == expect.size());
    for (size_t i = 0; i < got.size(); ++i)
        CHECK(got[i] == doctest::Approx(expect[i]).epsilon(1e-9));
}

TEST_CASE("stability verdicts above threshold") {
    SUBCASE("f = 2, sigma = 2.5: k=0 stable, k=2 unstable") {
        const auto p = DopoParams::make(2, 2.5, 0.1, 2.0);
        const auto sols = steady_states(p);
        CHECK(!sols[0].stable);
        REQUIRE(sols[1].exists);
        CHECK(sols[1].stable);
        REQUIRE(sols[2].exists);
        CHECK(!sols[2].stable);
    }
    SUBCASE("even-f bright branch has strictly negative spectrum") {
        const auto p = DopoParams::make(4, 3.0, 0.05, 2.0);
        const auto &k0 = steady_states(p)[1];
        REQUIRE(k0.exists);
        CHECK(k0.stable);
        for (const auto &ev : k0.eigenvalues) CHECK(ev.real() < -1e-10);
    }
    SUBCASE("odd-f bright branch carries exactly one Goldstone zero") {
        for (int f : {1, 3, 5}) {
            const auto p = DopoParams::make(f, 2.0, 0.08, 3.0);
            const auto &k1 = steady_states(p)[1];
            REQUIRE(k1.exists);
            CHECK(k1.stable);
            int zeros = 0;
            for (const auto &ev : k1.eigenvalues)
                if (std::abs(ev) <= 1e-10) ++zeros;
            CHECK(zeros == 1);
        }
    }
    SUBCASE("odd-f higher branch is unstable") {
        const auto p = DopoParams::make(3, 4.0, 0.08, 3.0);
        const auto &k3 = steady_states(p)[2];
        REQUIRE(k3.exists);
        CHECK(!k3.stable);
    }
    SUBCASE("eigenvalues do not depend on the free phase") {
        const auto p = DopoParams::make(3, 2.0, 0.08, 3.0);
        ClassicalSolution sol;
        sol.branch = Branch::excited;
        sol.k = 1;
        sol.pump_amp = 1.0 / p.chi(1);
        sol.rho = std::sqrt((p.sigma - 1.0) / (p.g * p.g));
        sol.theta = 0.0;
        const auto a = sorted_real_parts(stability(sol, p).eigenvalues);
        sol.theta = 1.234;
        const auto b = sorted_real_parts(stability(sol, p).eigenvalues);
        REQUIRE(a.size() == b.size());
        for (size_t i = 0; i < a.size(); ++i)
            CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-9));
    }
    SUBCASE("non-stationary input is rejected") {
        const auto p = DopoParams::make(2, 2.0, 0.1, 2.0);
        ClassicalSolution bogus;
        bogus.branch = Branch::excited;
        bogus.k = 0;
        bogus.pump_amp = 1.0 / p.chi(0);
        bogus.rho = 17.0; // wrong modulus
        CHECK_THROWS_AS(stability(bogus, p), ValidationError);
    }
}

TEST_CASE("phase symmetry maps steady states to steady states") {
    const auto p = DopoParams::make(4, 3.5, 0.06, 2.5);
    const auto sols = steady_states(p);
    const auto &k0 = sols[1];
    REQUIRE(k0.exists);
    auto st = state_from_solution(k0, p);

    // Rotate each +-l pair by an independent phase.
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 2.0 * M_PI);
    for (int l = 2; l <= 4; l += 2) {
        const double beta = u(rng);
        st.signal[p.index_of(+l)] *= std::exp(Complex(0.0, +beta));
        st.signal[p.index_of(-l)] *= std::exp(Complex(0.0, -beta));
    }
    CHECK(residual_norm(st, p) < 1e-12 * std::max(1.0, k0.rho));
}

TEST_CASE("threshold localization by bisection") {
    for (int f : {2, 3}) {
        const double s = locate_threshold(f, 0.1, 2.0, 0.5, 1.5, 1e-9);
        CHECK(std::abs(s - 1.0) <= 1e-8);
    }
}

TEST_CASE("pump clamping above threshold") {
    for (double sigma : {1.5, 4.0}) {
        const auto p = DopoParams::make(2, sigma, 0.1, 2.0);
        const auto &k0 = steady_states(p)[1];
        REQUIRE(k0.exists);
        CHECK(k0.pump_amp.real() == doctest::Approx(1.0 / p.chi(0)).epsilon(1e-14));
    }
}

TEST_CASE("RK4 integration") {
    SUBCASE("relaxation to the trivial branch below threshold") {
        const auto p = DopoParams::make(2, 0.9, 0.1, 2.0);
        auto s0 = ClassicalState::zero(p);
        s0.signal[p.index_of(0)] = Complex(1e-3, 2e-4);
        s0.signal[p.index_of(2)] = Complex(-4e-4, 1e-3);
        s0.signal[p.index_of(-2)] = Complex(2e-4, -1e-3);
        const auto traj = integrate(s0, p, 50.0, 1e-2);
        const auto &last = traj.states.back();
        for (const auto &z : last.signal) CHECK(std::abs(z) < 1e-6);
        CHECK(std::abs(last.pump - Complex(p.pump_drive() / p.gamma_ratio, 0.0)) < 1e-6);
    }
    SUBCASE("convergence to the k=1 branch above threshold") {
        const auto p = DopoParams::make(3, 1.1, 0.1, 2.0);
        auto s0 = ClassicalState::zero(p);
        s0.pump = p.sigma / p.chi(1);
        s0.signal[p.index_of(+1)] = Complex(1e-2, 3e-3);
        s0.signal[p.index_of(-1)] = Complex(8e-3, -2e-3);
        const auto traj = integrate(s0, p, 120.0, 1e-2);
        const auto &last = traj.states.back();
        const double rho1 = std::sqrt((p.sigma - 1.0) / (p.g * p.g));
        const double mod = std::sqrt(std::abs(last.signal[p.index_of(+1)]) *
                                     std::abs(last.signal[p.index_of(-1)]));
        CHECK(std::abs(mod - rho1) < 1e-4 * rho1);
        for (int l : {3, -3}) CHECK(std::abs(last.signal[p.index_of(l)]) < 1e-8);
    }
    SUBCASE("fourth-order convergence under step halving") {
        const auto p = DopoParams::make(2, 2.0, 0.1, 2.0);
        auto s0 = ClassicalState::zero(p);
        s0.pump = Complex(3.0, 1.0);
        s0.signal[p.index_of(0)] = Complex(2.0, -1.0);
        s0.signal[p.index_of(2)] = Complex(1.0, 0.5);
        s0.signal[p.index_of(-2)] = Complex(-0.5, 1.5);

        auto endpoint = [&](double dtau) {
            return integrate(s0, p, 1.0, dtau).states.back();
        };
        auto dist = [](const ClassicalState &a, const ClassicalState &b) {
            double m = std::abs(a.pump - b.pump);
            for (size_t i = 0; i < a.signal.size(); ++i)
                m = std::max(m, std::abs(a.signal[i] - b.signal[i]));
            return m;
        };
        const auto ref = endpoint(1.0 / 4096.0);
        const double e1 = dist(endpoint(1.0 / 64.0), ref);
        const double e2 = dist(endpoint(1.0 / 128.0), ref);
        CHECK(e1 / e2 == doctest::Approx(16.0).epsilon(0.2));
    }
    SUBCASE("non-finite states abort") {
        const auto p = DopoParams::make(0, 2.0, 1.0, 0.01);
        auto s0 = ClassicalState::zero(p);
        s0.signal[0] = Complex(1e8, 0.0);
        s0.pump = Complex(1e8, 0.0);
        CHECK_THROWS_AS(integrate(s0, p, 10.0, 0.5), NumericalError);
    }
}

TEST_CASE("signal profile") {
    SUBCASE("even family: rotational symmetry and pixel values") {
        const auto p = DopoParams::make(2, 2.0, 0.1, 2.0);
        const auto &k0 = steady_states(p)[1];
        const auto raster = signal_profile(k0, p, {65, 4.0});

        // phi-independence at fixed radius, directly from the formula.
        const double rho2 = k0.rho * k0.rho;
        std::vector<double> ring;
        for (double phi : {0.0, 0.9, 2.1, 3.3, 5.2}) {
            const auto a = modes::mode_amplitude(modes::TransverseModeId(2, 0), 1.0,
                                                 1.3, phi);
            ring.push_back(rho2 * std::norm(a));
        }
        const auto [mn, mx] = std::minmax_element(ring.begin(), ring.end());
        CHECK(*mx - *mn <= 1e-12 * *mx);

        // Raster pixels match the defining formula.
        const int iy = 10, ix = 40;
        const double y = raster.extent - 2.0 * raster.extent * iy / (raster.height - 1);
        const double x = -raster.extent + 2.0 * raster.extent * ix / (raster.width - 1);
        const auto a = modes::mode_amplitude(modes::TransverseModeId(2, 0), 1.0,
                                             std::hypot(x, y), std::atan2(y, x));
        CHECK(raster.values[iy * raster.width + ix] ==
              doctest::Approx(rho2 * std::norm(a)).epsilon(1e-12));
    }
    SUBCASE("odd family: nodal line at phi = theta + pi/2") {
        const auto p = DopoParams::make(3, 2.0, 0.1, 2.0);
        const auto &k1 = steady_states(p)[1];
        const double theta = M_PI / 4.0;
        double peak = 0.0;
        for (double r : {0.5, 1.0, 2.0})
            peak = std::max(peak, 2.0 * k1.rho * k1.rho *
                                      std::pow(modes::hybrid_amplitude(
                                                   modes::HybridKind::cosine, 1, 1,
                                                   theta, 1.0, r, theta),
                                               2));
        for (double r : {0.3, 0.9, 1.7, 3.0}) {
            const double v = 2.0 * k1.rho * k1.rho *
                             std::pow(modes::hybrid_amplitude(modes::HybridKind::cosine,
                                                              1, 1, theta, 1.0, r,
                                                              theta + M_PI / 2.0),
                                      2);
            CHECK(v <= 1e-12 * peak);
        }
    }
    SUBCASE("total intensity equals rho_0^2 (even) or 2 rho_1^2 (odd)") {
        const auto pe = DopoParams::make(4, 2.0, 0.1, 2.0);
        const auto &e0 = steady_states(pe)[1];
        const auto ip_even = oracles::mode_inner_product(
            [&](double r, double phi) {
                return e0.rho * modes::mode_amplitude(modes::TransverseModeId(4, 0),
                                                      1.0, r, phi);
            },
            [&](double r, double phi) {
                return e0.rho * modes::mode_amplitude(modes::TransverseModeId(4, 0),
                                                      1.0, r, phi);
            },
            1.0);
        CHECK(std::abs(ip_even.real() - e0.rho * e0.rho) <= 1e-6 * e0.rho * e0.rho);

        const auto po = DopoParams::make(3, 2.0, 0.1, 2.0);
        const auto &o1 = steady_states(po)[1];
        const double s2 = std::sqrt(2.0) * o1.rho;
        const auto ip_odd = oracles::mode_inner_product(
            [&](double r, double phi) {
                return std::complex<double>(
                    s2 * modes::hybrid_amplitude(modes::HybridKind::cosine, 1, 1,
                                                 M_PI / 4.0, 1.0, r, phi),
                    0.0);
            },
            [&](double r, double phi) {
                return std::complex<double>(
                    s2 * modes::hybrid_amplitude(modes::HybridKind::cosine, 1, 1,
                                                 M_PI / 4.0, 1.0, r, phi),
                    0.0);
            },
            1.0);
        CHECK(std::abs(ip_odd.real() - 2.0 * o1.rho * o1.rho) <=
              1e-6 * 2.0 * o1.rho * o1.rho);
    }
    SUBCASE("trivial branch has nothing to render") {
        const auto p = DopoParams::make(2, 0.5, 0.1, 2.0);
        const auto sols = steady_states(p);
        CHECK_THROWS_AS(signal_profile(sols[0], p, {32, 3.0}), ValidationError);
    }
}

TEST_CASE("raster export formats") {
    const auto p = DopoParams::make(2, 2.0, 0.1, 2.0);
    const auto raster = signal_profile(steady_states(p)[1], p, {16, 3.0});

    const std::string pgm = "profile_test.pgm";
    const std::string csv = "profile_test.csv";
    io::write_pgm(raster, pgm);
    io::write_raster_csv(raster, csv);

    std::ifstream in(pgm, std::ios::binary);
    std::string magic;
    int w, h, maxval;
    in >> magic >> w >> h >> maxval;
    CHECK(magic == "P5");
    CHECK(w == 16);
    CHECK(h == 16);
    CHECK(maxval == 255);
    in.get();
    std::string bytes((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
    CHECK(bytes.size() == 256);

    std::ifstream cin_(csv);
    std::string line;
    int lines = 0;
    std::getline(cin_, line);
    CHECK(line == "x,y,value");
    while (std::getline(cin_, line)) ++lines;
    CHECK(lines == 256);
}
