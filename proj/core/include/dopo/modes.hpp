#ifndef DOPO_MODES_HPP
#define DOPO_MODES_HPP

#include <complex>
#include <optional>
#include <utility>
#include <vector>

namespace dopo::modes {

// One Laguerre-Gauss cavity mode of transverse family f: OAM l (signed),
// radial index n = (f - |l|)/2. f and |l| must share parity.
struct TransverseModeId {
    int family;
    int oam;
    int radial;

    TransverseModeId(int f, int l);

    bool operator==(const TransverseModeId &o) const {
        return family == o.family && oam == o.oam;
    }
};

// Lowest OAM of family f: 0 for even f, 1 for odd f.
inline int lowest_oam(int family) { return family % 2; }

// All members of family f, in descending |l| order {f, f-2, ..., l0},
// +l before -l; the l = 0 member appears once. Size is f+1.
std::vector<TransverseModeId> family_members(int family);

// Spherical-mirror Fabry-Perot geometry with a chi(2) crystal at the waist.
// Lengths in meters; mirror radii may be infinite (planar).
struct CavityGeometry {
    double R1;
    double R2;
    double L;       // geometric cavity length
    double l_c;     // crystal length
    double n_c;     // crystal refractive index

    double effective_length() const; // L - (1 - 1/n_c) l_c, must be > 0
    double g1() const;               // 1 - L_eff/R1
    double g2() const;
    // Throws GeometryError unless 0 < g1*g2 < 1 (open interval).
    void validate() const;
};

// If arccos(sqrt(g1 g2))/pi is within `tol` of a rational p/q with
// q <= max_den, transverse families of different longitudinal orders
// collide in frequency; returns that p/q.
std::optional<std::pair<int, int>> rational_spacing(const CavityGeometry &geom,
                                                    int max_den = 16,
                                                    double tol = 1e-6);

// Generalized Laguerre polynomial L_n^l(x) by the stable three-term
// recurrence.
double laguerre_poly(int n, int l, double x);

// Normalization factor N_n^l = sqrt(2 n! / (pi (n+l)!)).
double normalization(int n, int l);

// Radial profile u_n^l(r) = (1/w)(sqrt(2) r/w)^l L_n^l(2r^2/w^2) e^{-r^2/w^2}.
double radial_profile(int n, int l, double waist, double r);

// Laguerre-Gauss amplitude Psi_n^{+-l}(r, phi) at the waist plane,
// orthonormal under integral r dr dphi.
std::complex<double> mode_amplitude(const TransverseModeId &id, double waist,
                                    double r, double phi);

enum class HybridKind { cosine, sine };

// Real hybrid mode H_{c/s,n}^l rotated by beta:
//   cosine: sqrt(2) N_n^l u_n^l(r) cos(l(phi-beta)), sine analog.
// Undefined for l = 0 (use mode_amplitude); throws ValidationError.
double hybrid_amplitude(HybridKind kind, int n, int l, double beta,
                        double waist, double r, double phi);

// Waist radius at optical angular frequency omega:
//   w^2 = (2 c L_eff / omega) sqrt(g1 g2 (1-g1 g2)) / (g1 + g2 - 2 g1 g2).
// Pump beams evaluate this at 2*omega0, signal at omega0.
double beam_waist(const CavityGeometry &geom, double omega);

// Resonance angular frequency of longitudinal order q and transverse mode
// (n, l): q pi c/L_eff + (c/L_eff)(1 + 2n + l) arccos(sqrt(g1 g2)).
double resonance_frequency(const CavityGeometry &geom, int q, int n, int l);

} // namespace dopo::modes

#endif
