#include "dopo/modes.hpp"

#include "dopo/constants.hpp"
#include "dopo/errors.hpp"

#include <cmath>
#include <string>

namespace dopo::modes {

TransverseModeId::TransverseModeId(int f, int l) : family(f), oam(l) {
    if (f < 0) throw ValidationError("TransverseModeId: family must be >= 0");
    const int al = std::abs(l);
    if (al > f) throw ValidationError("TransverseModeId: |l| exceeds family order");
    if ((f - al) % 2 != 0)
        throw ValidationError("TransverseModeId: f and |l| must have the same parity");
    radial = (f - al) / 2;
}

std::vector<TransverseModeId> family_members(int family) {
    if (family < 0) throw ValidationError("family_members: family must be >= 0");
    std::vector<TransverseModeId> out;
    out.reserve(family + 1);
    for (int l = family; l >= lowest_oam(family); l -= 2) {
        out.emplace_back(family, l);
        if (l > 0) out.emplace_back(family, -l);
    }
    return out;
}

double CavityGeometry::effective_length() const {
    if (L <= 0.0) throw GeometryError("cavity length must be positive");
    if (l_c < 0.0 || n_c < 1.0)
        throw GeometryError("crystal length must be >= 0 and index >= 1");
    const double leff = L - (1.0 - 1.0 / n_c) * l_c;
    if (leff <= 0.0) throw GeometryError("effective cavity length is not positive");
    return leff;
}

double CavityGeometry::g1() const {
    return std::isinf(R1) ? 1.0 : 1.0 - effective_length() / R1;
}

double CavityGeometry::g2() const {
    return std::isinf(R2) ? 1.0 : 1.0 - effective_length() / R2;
}

void CavityGeometry::validate() const {
    const double p = g1() * g2();
    if (!(p > 0.0 && p < 1.0))
        throw GeometryError("resonator outside stability interval: g1*g2 = " +
                            std::to_string(p) + " not in (0,1)");
}

std::optional<std::pair<int, int>> rational_spacing(const CavityGeometry &geom,
                                                    int max_den, double tol) {
    geom.validate();
    const double x = std::acos(std::sqrt(geom.g1() * geom.g2())) / M_PI;
    for (int q = 1; q <= max_den; ++q) {
        const int p = static_cast<int>(std::lround(x * q));
        if (std::abs(x - static_cast<double>(p) / q) < tol)
            return std::make_pair(p, q);
    }
    return std::nullopt;
}

double laguerre_poly(int n, int l, double x) {
    if (n < 0 || l < 0) throw ValidationError("laguerre_poly: n, l must be >= 0");
    if (n == 0) return 1.0;
    double lm1 = 1.0;            // L_0
    double cur = 1.0 + l - x;    // L_1
    for (int k = 2; k <= n; ++k) {
        const double next = ((2.0 * k - 1.0 + l - x) * cur - (k - 1.0 + l) * lm1) / k;
        lm1 = cur;
        cur = next;
    }
    return cur;
}

double normalization(int n, int l) {
    return std::sqrt(2.0 / M_PI *
                     std::exp(std::lgamma(n + 1.0) - std::lgamma(n + l + 1.0)));
}

double radial_profile(int n, int l, double waist, double r) {
    if (waist <= 0.0) throw ValidationError("radial_profile: waist must be positive");
    if (r < 0.0) throw ValidationError("radial_profile: r must be >= 0");
    const double s = std::sqrt(2.0) * r / waist;
    const double ring = (l == 0) ? 1.0 : std::pow(s, l); // exactly 0 at r = 0, l > 0
    const double u = 2.0 * r * r / (waist * waist);
    return ring * laguerre_poly(n, l, u) * std::exp(-r * r / (waist * waist)) / waist;
}

std::complex<double> mode_amplitude(const TransverseModeId &id, double waist,
                                    double r, double phi) {
    const int l = std::abs(id.oam);
    const double real_part = normalization(id.radial, l) * radial_profile(id.radial, l, waist, r);
    return real_part * std::exp(std::complex<double>(0.0, id.oam * phi));
}

double hybrid_amplitude(HybridKind kind, int n, int l, double beta,
                        double waist, double r, double phi) {
    if (l < 1)
        throw ValidationError("hybrid_amplitude: hybrid modes are defined for l >= 1; "
                              "use mode_amplitude for l = 0");
    const double radial = std::sqrt(2.0) * normalization(n, l) * radial_profile(n, l, waist, r);
    const double arg = l * (phi - beta);
    return radial * (kind == HybridKind::cosine ? std::cos(arg) : std::sin(arg));
}

double beam_waist(const CavityGeometry &geom, double omega) {
    geom.validate();
    if (omega <= 0.0) throw ValidationError("beam_waist: omega must be positive");
    const double G1 = geom.g1(), G2 = geom.g2();
    const double denom = G1 + G2 - 2.0 * G1 * G2;
    if (denom == 0.0)
        throw GeometryError("beam_waist: degenerate denominator g1 + g2 - 2 g1 g2 = 0");
    const double p = G1 * G2;
    const double w2 = 2.0 * constants::c_light * geom.effective_length() / omega *
                      std::sqrt(p * (1.0 - p)) / denom;
    if (w2 <= 0.0) throw GeometryError("beam_waist: nonpositive w^2");
    return std::sqrt(w2);
}

double resonance_frequency(const CavityGeometry &geom, int q, int n, int l) {
    if (q < 1) throw ValidationError("resonance_frequency: q must be >= 1");
    if (n < 0 || l < 0)
        throw ValidationError("resonance_frequency: n, l must be >= 0");
    geom.validate();
    const double leff = geom.effective_length();
    const double gouy = std::acos(std::sqrt(geom.g1() * geom.g2()));
    return q * M_PI * constants::c_light / leff +
           constants::c_light / leff * (1.0 + 2.0 * n + l) * gouy;
}

} // namespace dopo::modes
