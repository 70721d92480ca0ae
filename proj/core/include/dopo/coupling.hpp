#ifndef DOPO_COUPLING_HPP
#define DOPO_COUPLING_HPP

#include "dopo/modes.hpp"
#include "dopo/rational.hpp"

#include <map>
#include <vector>

namespace dopo::coupling {

// Exact coefficients of L_n^l: c_k = (-1)^k binom(n+l, n-k) / k!, k = 0..n.
std::vector<Rational> exact_laguerre_coefficients(int n, int l);

enum class OverlapMethod { exact, quadrature };

// Overlap integral of the parametric process for member l of family f:
//   I_l = [((f-l)/2)! / ((f+l)/2)!] Int_0^inf e^{-2u} u^l [L_{(f-l)/2}^l(u)]^2 du.
// Exact: termwise rational integration with Int e^{-2u} u^k du = k!/2^{k+1}.
Rational overlap_integral_exact(int f, int l);
// Gauss-Laguerre after the substitution v = 2u; exact up to roundoff since
// the integrand is a degree-f polynomial (node count f+2).
double overlap_integral_quadrature(int f, int l);

// Per-family coupling ratios kappa_l = I_l / I_{l0} for every member,
// kept both as exact rationals and as float projections.
struct CouplingLadder {
    int family;
    int l0;
    std::map<int, Rational> overlaps;      // l -> I_l (exact)
    std::map<int, double> overlaps_float;  // l -> I_l
    std::map<int, Rational> kappas;        // l -> kappa_l, kappa_{l0} = 1 exactly
    std::map<int, double> kappas_float;

    double kappa(int l) const { return kappas_float.at(std::abs(l)); }
    // Largest kappa over members with l > l0 (the classically empty modes);
    // 0 if the family has none.
    double max_empty_kappa() const;
};

CouplingLadder kappa_ladder(int family);

// Physical coupling rates chi_l (1/s) and the single-photon field voltages,
// carried for documentation of absolute units.
struct PhysicalCoupling {
    double chi2;    // second-order susceptibility, m/V
    double l_c;     // crystal length, m
    double w_p;     // pump waist, m
    double omega0;  // signal carrier angular frequency, rad/s
    double n_c;     // crystal refractive index
    double L_eff;   // effective cavity length, m

    double chi_l(int f, int l) const;
    double F_p() const; // sqrt(2 hbar omega0 / (eps0 n_c L_eff)) * ... pump voltage
    double F_s() const; // F_p / sqrt(2)
};

// chi_l = 12 chi2 l_c / w_p * (omega0 / (n_c L_eff))^{3/2} sqrt(hbar/(pi eps0)) I_l
double coupling_constant(double chi2, double l_c, double w_p, double omega0,
                         double n_c, double L_eff, double I_l);

// g = chi_{l0} / sqrt(gamma_p gamma_s)
double dimensionless_g(double chi_l0, double gamma_p, double gamma_s);

} // namespace dopo::coupling

#endif
