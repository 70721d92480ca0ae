#include "dopo/classical.hpp"

#include "dopo/errors.hpp"
#include "dopo/modes.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace dopo::classical {

DopoParams DopoParams::make(int family, double sigma, double g, double gamma_ratio) {
    if (sigma < 0.0) throw ValidationError("DopoParams: sigma must be >= 0");
    if (g <= 0.0) throw ValidationError("DopoParams: g must be > 0");
    if (gamma_ratio <= 0.0) throw ValidationError("DopoParams: gamma_p/gamma_s must be > 0");
    DopoParams p;
    p.family = family;
    p.sigma = sigma;
    p.g = g;
    p.gamma_ratio = gamma_ratio;
    p.kappas = coupling::kappa_ladder(family);
    return p;
}

double DopoParams::chi(int l) const {
    return g * std::sqrt(gamma_ratio) * kappas.kappa(l);
}

double DopoParams::pump_drive() const {
    return sigma * std::sqrt(gamma_ratio) / g;
}

const std::vector<int> &DopoParams::signed_oams() const {
    if (layout_.empty()) {
        for (const auto &id : modes::family_members(family)) layout_.push_back(id.oam);
    }
    return layout_;
}

int DopoParams::index_of(int signed_l) const {
    const auto &lay = signed_oams();
    for (size_t i = 0; i < lay.size(); ++i)
        if (lay[i] == signed_l) return static_cast<int>(i);
    throw ValidationError("index_of: OAM " + std::to_string(signed_l) +
                          " is not in family " + std::to_string(family));
}

ClassicalState ClassicalState::zero(const DopoParams &p) {
    ClassicalState s;
    s.signal.assign(p.signed_oams().size(), Complex{0.0, 0.0});
    return s;
}

namespace {

void check_state(const ClassicalState &state, const DopoParams &p) {
    if (state.signal.size() != p.signed_oams().size())
        throw ValidationError("state does not cover family " + std::to_string(p.family));
}

} // namespace

ClassicalState classical_rhs(const ClassicalState &state, const DopoParams &p) {
    check_state(state, p);
    ClassicalState d;
    d.tau = 1.0;
    d.signal.assign(state.signal.size(), Complex{0.0, 0.0});

    const auto &lay = p.signed_oams();
    Complex depletion{0.0, 0.0};
    for (size_t i = 0; i < lay.size(); ++i) {
        const int l = lay[i];
        if (l > 0) {
            depletion += p.chi(l) * state.signal[i] * state.signal[p.index_of(-l)];
        } else if (l == 0) {
            depletion += 0.5 * p.chi(0) * state.signal[i] * state.signal[i];
        }
    }
    d.pump = p.pump_drive() - p.gamma_ratio * state.pump - depletion;

    for (size_t i = 0; i < lay.size(); ++i) {
        const int l = lay[i];
        const Complex partner =
            (l == 0) ? state.signal[i] : state.signal[p.index_of(-l)];
        d.signal[i] = -state.signal[i] + p.chi(l) * std::conj(partner) * state.pump;
    }
    return d;
}

ClassicalState state_from_solution(const ClassicalSolution &sol, const DopoParams &p) {
    ClassicalState s = ClassicalState::zero(p);
    s.pump = sol.pump_amp;
    if (sol.branch == Branch::excited && sol.exists) {
        if (sol.k == 0) {
            s.signal[p.index_of(0)] = sol.rho;
        } else {
            s.signal[p.index_of(sol.k)] = sol.rho * std::exp(Complex(0.0, -sol.theta));
            s.signal[p.index_of(-sol.k)] = sol.rho * std::exp(Complex(0.0, +sol.theta));
        }
    }
    return s;
}

Eigen::MatrixXd jacobian(const ClassicalState &state, const DopoParams &p) {
    check_state(state, p);
    const auto &lay = p.signed_oams();
    const int nc = 1 + static_cast<int>(lay.size()); // complex dimension
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(2 * nc, 2 * nc);

    // Block (i,j) from dF_i/dz_j = a (complex linear) and dF_i/dzbar_j = b.
    auto add_block = [&J](int i, int j, Complex a, Complex b) {
        J(2 * i, 2 * j) += a.real() + b.real();
        J(2 * i, 2 * j + 1) += -a.imag() + b.imag();
        J(2 * i + 1, 2 * j) += a.imag() + b.imag();
        J(2 * i + 1, 2 * j + 1) += a.real() - b.real();
    };

    add_block(0, 0, Complex(-p.gamma_ratio, 0.0), 0.0);
    for (size_t i = 0; i < lay.size(); ++i) {
        const int l = lay[i];
        const int si = 1 + static_cast<int>(i);
        const double chi = p.chi(l);
        if (l != 0) {
            const int mi = 1 + p.index_of(-l);
            const Complex partner = state.signal[p.index_of(-l)];
            // Pump depletion term -chi_l a_{+l} a_{-l} touches each pair once.
            if (l > 0) {
                add_block(0, si, -chi * partner, 0.0);
                add_block(0, mi, -chi * state.signal[i], 0.0);
            }
            add_block(si, si, Complex(-1.0, 0.0), 0.0);
            add_block(si, 0, chi * std::conj(partner), 0.0);
            add_block(si, mi, 0.0, chi * state.pump);
        } else {
            add_block(0, si, -chi * state.signal[i], 0.0);
            add_block(si, si, Complex(-1.0, 0.0), chi * state.pump);
            add_block(si, 0, chi * std::conj(state.signal[i]), 0.0);
        }
    }
    return J;
}

namespace {

double inf_norm(const ClassicalState &s) {
    double m = std::abs(s.pump);
    for (const auto &z : s.signal) m = std::max(m, std::abs(z));
    return m;
}

StabilityResult stability_of_state(const ClassicalState &state, const DopoParams &p,
                                   bool free_phase) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(jacobian(state, p));
    StabilityResult res;
    for (int i = 0; i < es.eigenvalues().size(); ++i)
        res.eigenvalues.push_back(es.eigenvalues()(i));

    constexpr double tol = 1e-10;
    int marginal = 0;
    bool ok = true;
    for (const auto &ev : res.eigenvalues) {
        if (ev.real() > tol) ok = false;
        else if (ev.real() > -tol) {
            // Only a genuine zero mode is tolerated, and only once.
            if (std::abs(ev) <= tol) ++marginal;
            else ok = false;
        }
    }
    res.stable = ok && (free_phase ? marginal <= 1 : marginal == 0);
    return res;
}

} // namespace

StabilityResult stability(const ClassicalSolution &sol, const DopoParams &p) {
    if (sol.branch == Branch::excited && !sol.exists)
        throw ValidationError("stability: branch does not exist at this sigma");
    const ClassicalState state = state_from_solution(sol, p);
    const ClassicalState rhs = classical_rhs(state, p);
    const double residual = inf_norm(rhs);
    if (residual > 1e-10 * std::max(1.0, inf_norm(state)))
        throw ValidationError("stability: not a steady state (residual " +
                              std::to_string(residual) + ")");
    const bool free_phase = sol.branch == Branch::excited && sol.k != 0;
    return stability_of_state(state, p, free_phase);
}

std::vector<ClassicalSolution> steady_states(const DopoParams &p) {
    std::vector<ClassicalSolution> out;

    ClassicalSolution trivial;
    trivial.branch = Branch::trivial;
    trivial.pump_amp = p.pump_drive() / p.gamma_ratio;
    {
        auto st = stability(trivial, p);
        trivial.eigenvalues = st.eigenvalues;
        trivial.stable = st.stable;
    }
    out.push_back(trivial);

    const int l0 = modes::lowest_oam(p.family);
    for (int k = l0; k <= p.family; k += 2) {
        ClassicalSolution sol;
        sol.branch = Branch::excited;
        sol.k = k;
        const double kappa = p.kappas.kappa(k);
        sol.pump_amp = 1.0 / p.chi(k);
        const double rho2 =
            (k == 0 ? 2.0 : 1.0) * (p.sigma - 1.0 / kappa) / (p.g * p.g * kappa);
        sol.exists = rho2 >= 0.0;
        if (sol.exists) {
            sol.rho = std::sqrt(rho2);
            auto st = stability(sol, p);
            sol.eigenvalues = st.eigenvalues;
            sol.stable = st.stable;
        }
        out.push_back(sol);
    }
    return out;
}

double trivial_leading_rate(const DopoParams &p) {
    ClassicalSolution trivial;
    trivial.branch = Branch::trivial;
    trivial.pump_amp = p.pump_drive() / p.gamma_ratio;
    const auto st = stability(trivial, p);
    double lead = -1e300;
    for (const auto &ev : st.eigenvalues) lead = std::max(lead, ev.real());
    return lead;
}

double locate_threshold(int family, double g, double gamma_ratio,
                        double sigma_lo, double sigma_hi, double tol) {
    auto rate = [&](double sigma) {
        return trivial_leading_rate(DopoParams::make(family, sigma, g, gamma_ratio));
    };
    double lo = sigma_lo, hi = sigma_hi;
    double flo = rate(lo);
    if (flo >= 0.0 || rate(hi) <= 0.0)
        throw ValidationError("locate_threshold: bracket does not straddle the crossing");
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (rate(mid) < 0.0) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

Trajectory integrate(const ClassicalState &initial, const DopoParams &p,
                     double tau_end, double dtau) {
    if (dtau <= 0.0) throw ValidationError("integrate: dtau must be positive");
    check_state(initial, p);

    const int n = static_cast<int>(initial.signal.size());
    auto axpy = [n](const ClassicalState &a, double h, const ClassicalState &b) {
        ClassicalState r = a;
        r.pump += h * b.pump;
        for (int i = 0; i < n; ++i) r.signal[i] += h * b.signal[i];
        return r;
    };

    Trajectory traj;
    const long steps = std::lround(tau_end / dtau);
    traj.taus.reserve(steps + 1);
    traj.states.reserve(steps + 1);

    ClassicalState s = initial;
    s.tau = 0.0;
    traj.taus.push_back(0.0);
    traj.states.push_back(s);

    for (long step = 1; step <= steps; ++step) {
        const ClassicalState k1 = classical_rhs(s, p);
        const ClassicalState k2 = classical_rhs(axpy(s, 0.5 * dtau, k1), p);
        const ClassicalState k3 = classical_rhs(axpy(s, 0.5 * dtau, k2), p);
        const ClassicalState k4 = classical_rhs(axpy(s, dtau, k3), p);

        s.pump += dtau / 6.0 * (k1.pump + 2.0 * k2.pump + 2.0 * k3.pump + k4.pump);
        for (int i = 0; i < n; ++i)
            s.signal[i] += dtau / 6.0 *
                           (k1.signal[i] + 2.0 * k2.signal[i] + 2.0 * k3.signal[i] +
                            k4.signal[i]);
        s.tau = step * dtau;

        if (!std::isfinite(s.pump.real()) || !std::isfinite(s.pump.imag()))
            throw NumericalError("integrate: non-finite state at tau = " +
                                 std::to_string(s.tau));
        for (const auto &z : s.signal)
            if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
                throw NumericalError("integrate: non-finite state at tau = " +
                                     std::to_string(s.tau));

        traj.taus.push_back(s.tau);
        traj.states.push_back(s);
    }
    return traj;
}

Raster signal_profile(const ClassicalSolution &sol, const DopoParams &p,
                      const RasterSpec &spec, double theta) {
    if (sol.branch != Branch::excited || !sol.exists)
        throw ValidationError("signal_profile: no signal field on this branch");
    const int l0 = modes::lowest_oam(p.family);
    if (sol.k != l0)
        throw ValidationError("signal_profile: profile is defined for the stable k = l0 branch");
    if (spec.n < 2) throw ValidationError("signal_profile: raster needs at least 2 pixels");

    const double extent =
        spec.extent > 0.0 ? spec.extent : 1.5 + std::sqrt(2.0 * p.family + 1.0) + 2.0;
    const double w = 1.0; // waist units

    Raster raster;
    raster.width = spec.n;
    raster.height = spec.n;
    raster.extent = extent;
    raster.values.resize(static_cast<size_t>(spec.n) * spec.n);

    const int nrad = (p.family - l0) / 2;
    for (int iy = 0; iy < spec.n; ++iy) {
        const double y = extent - 2.0 * extent * iy / (spec.n - 1);
        for (int ix = 0; ix < spec.n; ++ix) {
            const double x = -extent + 2.0 * extent * ix / (spec.n - 1);
            const double r = std::hypot(x, y);
            const double phi = std::atan2(y, x);
            double value;
            if (l0 == 0) {
                const double a = std::abs(
                    modes::mode_amplitude(modes::TransverseModeId(p.family, 0), w, r, phi));
                value = sol.rho * sol.rho * a * a;
            } else {
                const double h = modes::hybrid_amplitude(modes::HybridKind::cosine, nrad, 1,
                                                         theta, w, r, phi);
                value = 2.0 * sol.rho * sol.rho * h * h;
            }
            raster.values[static_cast<size_t>(iy) * spec.n + ix] = value;
        }
    }
    return raster;
}

} // namespace dopo::classical
