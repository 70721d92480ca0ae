#include "dopo/linear_quantum.hpp"

#include "dopo/errors.hpp"

#include <cmath>

namespace dopo::linquant {

using Complex = std::complex<double>;

std::string to_string(SpectrumSource s) {
    switch (s) {
    case SpectrumSource::analytic_closed_form: return "analytic-closed-form";
    case SpectrumSource::analytic_matrix: return "analytic-matrix";
    case SpectrumSource::monte_carlo: return "monte-carlo";
    }
    return "?";
}

Eigen::VectorXcd selector_coefficients(ModeKind mode, Quadrature quad,
                                       double lbeta, bool pair) {
    const Complex i(0.0, 1.0);
    const double s2 = std::sqrt(0.5);

    if (!pair) {
        // Single l = 0 mode, basis (alpha_0, alpha_0^+).
        if (mode == ModeKind::hybrid_c || mode == ModeKind::hybrid_s)
            throw ValidationError("selector: hybrid modes are undefined for l = 0");
        Eigen::VectorXcd a(2), ap(2);
        a << 1.0, 0.0;
        ap << 0.0, 1.0;
        return quad == Quadrature::x ? Eigen::VectorXcd(ap + a)
                                     : Eigen::VectorXcd(i * (ap - a));
    }

    // Basis (alpha_{+l}, alpha_{+l}^+, alpha_{-l}, alpha_{-l}^+).
    Eigen::VectorXcd a(4), ap(4);
    switch (mode) {
    case ModeKind::oam_plus:
        a << 1, 0, 0, 0;
        ap << 0, 1, 0, 0;
        break;
    case ModeKind::oam_minus:
        a << 0, 0, 1, 0;
        ap << 0, 0, 0, 1;
        break;
    case ModeKind::hybrid_c:
    case ModeKind::hybrid_s: {
        Eigen::VectorXcd ac(4), acp(4), as(4), asp(4);
        ac << s2, 0, s2, 0;
        acp << 0, s2, 0, s2;
        as << i * s2, 0, -i * s2, 0;
        asp << 0, -i * s2, 0, i * s2;
        const double cb = std::cos(lbeta), sb = std::sin(lbeta);
        if (mode == ModeKind::hybrid_c) {
            a = cb * ac + sb * as;
            ap = cb * acp + sb * asp;
        } else {
            a = -sb * ac + cb * as;
            ap = -sb * acp + cb * asp;
        }
        break;
    }
    }
    return quad == Quadrature::x ? Eigen::VectorXcd(ap + a)
                                 : Eigen::VectorXcd(i * (ap - a));
}

Eigen::VectorXcd QuadratureSelector::to_vector(const LinearSystem &sys) const {
    const auto n = sys.drift.rows();
    if (n != 2 && n != 4)
        throw ValidationError("selector: expected a 2- or 4-dimensional system");
    return selector_coefficients(mode, quad, lbeta, n == 4);
}

LinearSystem empty_mode_system(double kappa, double gamma_s) {
    if (!(kappa > 0.0 && kappa < 1.0))
        throw ValidationError("empty_mode_system: kappa must lie in (0,1)");
    LinearSystem sys;
    sys.gamma_s = gamma_s;
    sys.labels = {"alpha_+l", "alpha_+l^+", "alpha_-l", "alpha_-l^+"};
    sys.drift.resize(4, 4);
    sys.drift << -1, 0, 0, kappa,
                  0, -1, kappa, 0,
                  0, kappa, -1, 0,
                  kappa, 0, 0, -1;
    sys.drift *= gamma_s;
    sys.diffusion.resize(4, 4);
    sys.diffusion << 0, 0, 1, 0,
                     0, 0, 0, 1,
                     1, 0, 0, 0,
                     0, 1, 0, 0;
    sys.diffusion *= gamma_s * kappa;
    return sys;
}

EmptyModeSpectrum empty_mode_spectrum(double kappa, double omega, double gamma_s) {
    if (!(kappa > 0.0 && kappa < 1.0))
        throw ValidationError("empty_mode_spectrum: kappa must lie in (0,1)");
    const double w = omega / gamma_s;
    return {4.0 * kappa / ((1.0 - kappa) * (1.0 - kappa) + w * w),
            -4.0 * kappa / ((1.0 + kappa) * (1.0 + kappa) + w * w)};
}

std::array<double, 4> projection_spectra(double kappa, double omega, double gamma_s) {
    if (!(kappa > 0.0 && kappa < 1.0))
        throw ValidationError("projection_spectra: kappa must lie in (0,1)");
    const double slow = gamma_s * (1.0 - kappa);
    const double fast = gamma_s * (1.0 + kappa);
    const double c1 = gamma_s * kappa / (slow * slow + omega * omega);
    const double c3 = -gamma_s * kappa / (fast * fast + omega * omega);
    return {c1, -c1, c3, -c3};
}

LinearSystem bright_mode_system(int l0, double sigma, double g, double gamma_s) {
    if (l0 != 0 && l0 != 1)
        throw ValidationError("bright_mode_system: l0 must be 0 or 1");
    if (sigma < 1.0)
        throw ValidationError("bright_mode_system: needs sigma >= 1 (above threshold)");
    if (g <= 0.0) throw ValidationError("bright_mode_system: g must be positive");

    LinearSystem sys;
    sys.gamma_s = gamma_s;
    if (l0 == 0) {
        sys.labels = {"alpha_0", "alpha_0^+"};
        sys.drift.resize(2, 2);
        sys.drift << -(2.0 * sigma - 1.0), 1.0,
                     1.0, -(2.0 * sigma - 1.0);
        sys.drift *= gamma_s;
        sys.diffusion = gamma_s * Eigen::MatrixXd::Identity(2, 2);
    } else {
        const double mu = sigma - 1.0; // g^2 rho_1^2
        sys.labels = {"alpha_+1", "alpha_+1^+", "alpha_-1", "alpha_-1^+"};
        sys.drift.resize(4, 4);
        sys.drift << -(1.0 + mu), 0, -mu, 1,
                      0, -(1.0 + mu), 1, -mu,
                      -mu, 1, -(1.0 + mu), 0,
                      1, -mu, 0, -(1.0 + mu);
        sys.drift *= gamma_s;
        sys.diffusion.resize(4, 4);
        sys.diffusion << 0, 0, 1, 0,
                         0, 0, 0, 1,
                         1, 0, 0, 0,
                         0, 1, 0, 0;
        sys.diffusion *= gamma_s;
    }
    return sys;
}

double matrix_spectrum(const LinearSystem &sys, const Eigen::VectorXcd &v,
                       double omega) {
    const auto n = sys.drift.rows();
    if (v.size() != n)
        throw ValidationError("matrix_spectrum: selector dimension mismatch");

    const Complex iw(0.0, omega);
    const double scale = std::max(1.0, sys.drift.cwiseAbs().maxCoeff());
    const double ztol = 1e-9 * scale;

    Eigen::EigenSolver<Eigen::MatrixXd> es(sys.drift);
    const Eigen::VectorXcd lambda = es.eigenvalues();

    bool marginal = false;
    for (Eigen::Index j = 0; j < n; ++j)
        if (std::abs(lambda(j) + iw) < ztol) marginal = true;

    const Eigen::MatrixXcd D = sys.diffusion.cast<Complex>();
    Complex value;

    if (!marginal) {
        // S/2gamma = v^T (J+iw)^-1 D (J^T-iw)^-1 v via two LU solves.
        Eigen::MatrixXcd A = sys.drift.cast<Complex>();
        A.diagonal().array() += iw;
        const Eigen::VectorXcd x = A.transpose().partialPivLu().solve(v);
        Eigen::MatrixXcd At = sys.drift.transpose().cast<Complex>();
        At.diagonal().array() -= iw;
        const Eigen::VectorXcd y = At.partialPivLu().solve(v);
        value = x.transpose() * D * y;
    } else {
        // Eigenprojection with the marginal modes removed. Legitimate only
        // when the selector has no weight on them.
        const Eigen::MatrixXcd P = es.eigenvectors();
        const Eigen::MatrixXcd Pinv = P.partialPivLu().inverse();
        const Eigen::VectorXcd a = P.transpose() * v;
        const Eigen::MatrixXcd M = Pinv * D * Pinv.transpose();

        const double vnorm = v.norm();
        for (Eigen::Index j = 0; j < n; ++j) {
            if (std::abs(lambda(j) + iw) >= ztol) continue;
            const double overlap = std::abs(a(j)) / vnorm;
            if (overlap > 1e-8) {
                if (std::abs(lambda(j)) < ztol)
                    throw GoldstoneOverlapError(
                        "matrix_spectrum: selector overlaps a zero (Goldstone) mode; "
                        "the stationary spectrum diverges (overlap " +
                            std::to_string(overlap) + ")",
                        overlap);
                throw NumericalError(
                    "matrix_spectrum: singular resolvent at omega = " +
                    std::to_string(omega) + " (marginal drift mode hit)");
            }
        }

        value = Complex(0.0, 0.0);
        for (Eigen::Index j = 0; j < n; ++j) {
            if (std::abs(lambda(j) + iw) < ztol) continue;
            for (Eigen::Index k = 0; k < n; ++k) {
                if (std::abs(lambda(k) - iw) < ztol) continue;
                value += a(j) * M(j, k) * a(k) /
                         ((lambda(j) + iw) * (lambda(k) - iw));
            }
        }
    }

    const double S = 2.0 * sys.gamma_s * value.real();
    if (std::abs(value.imag()) > 1e-8 * (1.0 + std::abs(value.real())))
        throw NumericalError("matrix_spectrum: non-real spectrum value (imag " +
                             std::to_string(value.imag()) + ")");
    return S;
}

double matrix_spectrum(const LinearSystem &sys, const QuadratureSelector &sel,
                       double omega) {
    return matrix_spectrum(sys, sel.to_vector(sys), omega);
}

SpectrumResult spectrum_grid(const LinearSystem &sys, const QuadratureSelector &sel,
                             const std::vector<double> &omegas_over_gamma) {
    SpectrumResult res;
    res.source = SpectrumSource::analytic_matrix;
    res.omega = omegas_over_gamma;
    const Eigen::VectorXcd v = sel.to_vector(sys);
    for (double w : omegas_over_gamma) {
        const double S = matrix_spectrum(sys, v, w * sys.gamma_s);
        res.S.push_back(S);
        res.V.push_back(1.0 + S);
    }
    return res;
}

std::vector<double> omega_grid(double omega_max, int n) {
    if (n < 2 || omega_max <= 0.0)
        throw ValidationError("omega_grid: need n >= 2 points and omega_max > 0");
    std::vector<double> w(n);
    for (int i = 0; i < n; ++i) w[i] = omega_max * i / (n - 1);
    return w;
}

SpectrumResult empty_mode_spectrum_grid(double kappa, Quadrature quad,
                                        const std::vector<double> &omegas_over_gamma) {
    SpectrumResult res;
    res.source = SpectrumSource::analytic_closed_form;
    res.omega = omegas_over_gamma;
    for (double w : omegas_over_gamma) {
        const auto s = empty_mode_spectrum(kappa, w, 1.0);
        const double S = quad == Quadrature::x ? s.x : s.y;
        res.S.push_back(S);
        res.V.push_back(1.0 + S);
    }
    return res;
}

} // namespace dopo::linquant
