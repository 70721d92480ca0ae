#ifndef DOPO_CLASSICAL_HPP
#define DOPO_CLASSICAL_HPP

#include "dopo/coupling.hpp"

#include <Eigen/Dense>
#include <complex>
#include <vector>

namespace dopo::classical {

using Complex = std::complex<double>;

// Dimensionless operating point. Internally gamma_s = 1 and time is the
// scaled tau = gamma_s * t, so rates are in units of gamma_s.
struct DopoParams {
    int family;
    double sigma;        // normalized pump, threshold at sigma = 1
    double g;            // chi_{l0} / sqrt(gamma_p gamma_s)
    double gamma_ratio;  // gamma_p / gamma_s
    coupling::CouplingLadder kappas;

    static DopoParams make(int family, double sigma, double g, double gamma_ratio);

    double chi(int l) const;     // chi_l in gamma_s units: g sqrt(gamma_ratio) kappa_l
    double pump_drive() const;   // E_p in gamma_s units: sigma sqrt(gamma_ratio) / g

    // Signal amplitude layout: descending |l| (like family_members), +l
    // before -l, one slot for l = 0. Total family+1 slots.
    const std::vector<int> &signed_oams() const;
    int index_of(int signed_l) const;

private:
    mutable std::vector<int> layout_;
};

// Mean-field state: pump amplitude alpha_00 plus one complex amplitude per
// signal slot, at scaled time tau.
struct ClassicalState {
    Complex pump{0.0, 0.0};
    std::vector<Complex> signal;
    double tau = 0.0;

    static ClassicalState zero(const DopoParams &p);
};

// d/dtau of the mean-field equations (noise-free limit of the Langevin set).
ClassicalState classical_rhs(const ClassicalState &state, const DopoParams &p);

enum class Branch { trivial, excited };

struct ClassicalSolution {
    Branch branch = Branch::trivial;
    int k = 0;            // excited OAM pair (meaningful for excited branch)
    bool exists = true;   // excited branches require sigma >= 1/kappa_k
    Complex pump_amp{0.0, 0.0};
    double rho = 0.0;     // modulus of the excited pair
    double theta = 0.0;   // free phase for k != 0 (0 in stability work)
    std::vector<Complex> eigenvalues;
    bool stable = false;
};

// State realizing a stationary solution (alpha_{+-k} = rho e^{-+ i theta}).
ClassicalState state_from_solution(const ClassicalSolution &sol, const DopoParams &p);

// Trivial branch plus one excited branch per family member k; nonexistent
// branches are flagged and carry no spectrum. Stability is filled in.
std::vector<ClassicalSolution> steady_states(const DopoParams &p);

// Real Jacobian of the real/imaginary expanded system about `state`,
// ordered [Re pump, Im pump, Re s0, Im s0, ...].
Eigen::MatrixXd jacobian(const ClassicalState &state, const DopoParams &p);

struct StabilityResult {
    std::vector<Complex> eigenvalues;
    bool stable = false;
};

// Eigenvalues about a steady state; throws ValidationError if `sol` is not
// stationary within 1e-10. A single zero mode is tolerated only on branches
// with a free phase (excited, k != 0).
StabilityResult stability(const ClassicalSolution &sol, const DopoParams &p);

// Leading real part of the trivial-branch spectrum at the given params.
double trivial_leading_rate(const DopoParams &p);

// Bisection on sigma for the loss of trivial-branch stability.
double locate_threshold(int family, double g, double gamma_ratio,
                        double sigma_lo, double sigma_hi, double tol);

struct Trajectory {
    std::vector<double> taus;
    std::vector<ClassicalState> states;
};

// Fixed-step RK4. Throws NumericalError if the state leaves the finite range.
Trajectory integrate(const ClassicalState &initial, const DopoParams &p,
                     double tau_end, double dtau);

struct RasterSpec {
    int n = 256;         // pixels per side
    double extent = 0.0; // half-width in waist units; 0 = auto from family
};

struct Raster {
    int width = 0;
    int height = 0;
    double extent = 0.0;
    std::vector<double> values; // row-major, y from +extent to -extent
};

// |A_s(r)|^2 of the stable classical emission (branch k = l0), waist units:
// rho_0^2 |Psi_{f/2}^0|^2 for even f, 2 rho_1^2 |H_{c,(f-1)/2}^1(r,phi-theta)|^2
// for odd f. Throws ValidationError on the trivial branch.
Raster signal_profile(const ClassicalSolution &sol, const DopoParams &p,
                      const RasterSpec &spec, double theta = M_PI / 4.0);

} // namespace dopo::classical

#endif
