#ifndef DOPO_LINEAR_QUANTUM_HPP
#define DOPO_LINEAR_QUANTUM_HPP

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <string>
#include <vector>

namespace dopo::linquant {

// Linearized fluctuation system dx/dt = J x + B eta(t), D = B B^T, about a
// classical stationary solution. Rates carry gamma_s explicitly.
struct LinearSystem {
    Eigen::MatrixXd drift;      // J
    Eigen::MatrixXd diffusion;  // D, symmetric
    std::vector<std::string> labels;
    double gamma_s = 1.0;
};

enum class ModeKind { oam_plus, oam_minus, hybrid_c, hybrid_s };
enum class Quadrature { x, y };

// Picks one quadrature of one mode of a 4-dim OAM-pair system (or the 2-dim
// l = 0 system, where only the oam kinds apply). `lbeta` is the hybrid
// orientation angle multiplied by the pair's OAM index (l*beta); 0 keeps
// H_c / H_s.
struct QuadratureSelector {
    ModeKind mode = ModeKind::hybrid_c;
    Quadrature quad = Quadrature::y;
    double lbeta = 0.0;

    Eigen::VectorXcd to_vector(const LinearSystem &sys) const;
};

// Quadrature coefficients over the pair basis (a_{+l}, a_{+l}^+, a_{-l},
// a_{-l}^+) when `pair` is true, else over (a_0, a_0^+).
Eigen::VectorXcd selector_coefficients(ModeKind mode, Quadrature quad,
                                       double lbeta, bool pair);

enum class SpectrumSource { analytic_closed_form, analytic_matrix, monte_carlo };

std::string to_string(SpectrumSource s);

struct SpectrumResult {
    std::vector<double> omega; // in units of gamma_s
    std::vector<double> S;     // squeezing spectrum, -1 = perfect squeezing
    std::vector<double> V;     // variance, 1 + S
    SpectrumSource source = SpectrumSource::analytic_matrix;
    std::vector<double> ci_halfwidth; // empty for analytic sources
};

// 4x4 drift/diffusion of a classically empty OAM pair with ratio kappa:
//   J = gamma_s [[-1,0,0,k],[0,-1,k,0],[0,k,-1,0],[k,0,0,-1]],
//   D = gamma_s k [[0,0,1,0],[0,0,0,1],[1,0,0,0],[0,1,0,0]].
LinearSystem empty_mode_system(double kappa, double gamma_s = 1.0);

struct EmptyModeSpectrum {
    double x; // +4k / ((1-k)^2 + (w/gamma)^2), both hybrids
    double y; // -4k / ((1+k)^2 + (w/gamma)^2), both hybrids
};

// Closed forms for the empty-pair hybrid quadratures; sigma-independent.
EmptyModeSpectrum empty_mode_spectrum(double kappa, double omega,
                                      double gamma_s = 1.0);

// Stationary variance spectra of the eigenprojections c_1..c_4:
//   C~_{1,3} = +-gamma_s k / ([gamma_s(1 -+ k)]^2 + w^2), C~_{2,4} = -C~_{1,3}.
std::array<double, 4> projection_spectra(double kappa, double omega,
                                         double gamma_s = 1.0);

// Linearization about the stable k = l0 branch with the pump adiabatically
// eliminated: 2x2 for l0 = 0, 4x4 for l0 = 1 (theta = 0 orientation). The
// multiplicative noise is frozen at its classical stationary value, so the
// drift and diffusion are independent of g.
LinearSystem bright_mode_system(int l0, double sigma, double g,
                                double gamma_s = 1.0);

// Stationary output spectrum via the resolvent identity
//   S(w) = 2 gamma_s v^T (J + iw)^-1 D (J^T - iw)^-1 v.
// At marginal frequencies the zero modes are projected out; selectors
// overlapping a zero (Goldstone) mode raise GoldstoneOverlapError.
double matrix_spectrum(const LinearSystem &sys, const Eigen::VectorXcd &v,
                       double omega);
double matrix_spectrum(const LinearSystem &sys, const QuadratureSelector &sel,
                       double omega);

SpectrumResult spectrum_grid(const LinearSystem &sys, const QuadratureSelector &sel,
                             const std::vector<double> &omegas_over_gamma);

// Evenly spaced grid [0, max] with n points, in gamma_s units.
std::vector<double> omega_grid(double omega_max, int n);

// Closed-form grid for an empty pair (source tag analytic-closed-form).
SpectrumResult empty_mode_spectrum_grid(double kappa, Quadrature quad,
                                        const std::vector<double> &omegas_over_gamma);

} // namespace dopo::linquant

#endif
