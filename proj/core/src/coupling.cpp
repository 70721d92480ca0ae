#include "dopo/coupling.hpp"

#include "dopo/constants.hpp"
#include "dopo/errors.hpp"
#include "dopo/quadrature.hpp"

#include <cmath>
#include <string>

namespace dopo::coupling {

std::vector<Rational> exact_laguerre_coefficients(int n, int l) {
    if (n < 0 || l < 0)
        throw ValidationError("exact_laguerre_coefficients: n, l must be >= 0");
    std::vector<Rational> c(n + 1);
    for (int k = 0; k <= n; ++k) {
        BigInt num = big_binomial(n + l, n - k);
        if (k % 2 == 1) num = -num;
        c[k] = Rational(num, big_factorial(k));
    }
    return c;
}

namespace {

void check_member(int f, int l) {
    if (f < 0) throw ValidationError("overlap_integral: family must be >= 0");
    if (l < 0 || l > f || (f - l) % 2 != 0)
        throw ValidationError("overlap_integral: l = " + std::to_string(l) +
                              " is not a member of family " + std::to_string(f));
}

} // namespace

Rational overlap_integral_exact(int f, int l) {
    check_member(f, l);
    const int n = (f - l) / 2;
    const auto c = exact_laguerre_coefficients(n, l);

    // Square the polynomial, then integrate termwise against e^{-2u} u^l.
    std::vector<Rational> sq(2 * n + 1, Rational(0));
    for (int i = 0; i <= n; ++i)
        for (int j = 0; j <= n; ++j) sq[i + j] += c[i] * c[j];

    Rational integral(0);
    for (int j = 0; j <= 2 * n; ++j) {
        const int k = l + j;
        integral += sq[j] * Rational(big_factorial(k), BigInt(1) << (k + 1));
    }
    return Rational(big_factorial(n), big_factorial(n + l)) * integral;
}

double overlap_integral_quadrature(int f, int l) {
    check_member(f, l);
    const int n = (f - l) / 2;
    const auto rule = quadrature::gauss_laguerre(f + 2);

    // v = 2u: I = pref * (1/2) sum_i w_i (v_i/2)^l [L_n^l(v_i/2)]^2.
    double sum = 0.0;
    for (size_t i = 0; i < rule.nodes.size(); ++i) {
        const double u = rule.nodes[i] / 2.0;
        const double L = modes::laguerre_poly(n, l, u);
        sum += rule.weights[i] * std::pow(u, l) * L * L;
    }
    const double pref =
        std::exp(std::lgamma(n + 1.0) - std::lgamma(n + l + 1.0));
    return 0.5 * pref * sum;
}

double CouplingLadder::max_empty_kappa() const {
    double best = 0.0;
    for (const auto &[l, k] : kappas_float)
        if (l > l0) best = std::max(best, k);
    return best;
}

CouplingLadder kappa_ladder(int family) {
    if (family < 0) throw ValidationError("kappa_ladder: family must be >= 0");
    CouplingLadder ladder;
    ladder.family = family;
    ladder.l0 = modes::lowest_oam(family);
    for (int l = ladder.l0; l <= family; l += 2) {
        const Rational I = overlap_integral_exact(family, l);
        ladder.overlaps[l] = I;
        ladder.overlaps_float[l] = to_double(I);
    }
    const Rational I0 = ladder.overlaps.at(ladder.l0);
    for (const auto &[l, I] : ladder.overlaps) {
        const Rational k = I / I0;
        ladder.kappas[l] = k;
        ladder.kappas_float[l] = to_double(k);
    }
    return ladder;
}

double coupling_constant(double chi2, double l_c, double w_p, double omega0,
                         double n_c, double L_eff, double I_l) {
    if (l_c <= 0 || w_p <= 0 || omega0 <= 0 || n_c < 1 || L_eff <= 0)
        throw ValidationError("coupling_constant: lengths and frequencies must be positive");
    return 12.0 * chi2 * l_c / w_p *
           std::pow(omega0 / (n_c * L_eff), 1.5) *
           std::sqrt(constants::hbar / (M_PI * constants::epsilon0)) * I_l;
}

double PhysicalCoupling::chi_l(int f, int l) const {
    return coupling_constant(chi2, l_c, w_p, omega0, n_c, L_eff,
                             overlap_integral_quadrature(f, l));
}

double PhysicalCoupling::F_p() const {
    return std::sqrt(2.0 * constants::hbar * omega0 /
                     (constants::epsilon0 * n_c * L_eff));
}

double PhysicalCoupling::F_s() const { return F_p() / std::sqrt(2.0); }

double dimensionless_g(double chi_l0, double gamma_p, double gamma_s) {
    if (gamma_p <= 0 || gamma_s <= 0)
        throw ValidationError("dimensionless_g: decay rates must be positive");
    return chi_l0 / std::sqrt(gamma_p * gamma_s);
}

} // namespace dopo::coupling
