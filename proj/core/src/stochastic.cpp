#include "dopo/stochastic.hpp"

#include "dopo/errors.hpp"
#include "dopo/modes.hpp"

#include <fftw3.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

namespace dopo::stochastic {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    std::uint64_t z = x + 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

} // namespace

std::mt19937_64 trajectory_rng(std::uint64_t seed, int trajectory_index) {
    return std::mt19937_64(
        splitmix64(seed + 0x9E3779B97F4A7C15ULL * (std::uint64_t)(trajectory_index + 1)));
}

// ---------------------------------------------------------------------------
// State layout

StateLayout StateLayout::make(Model model, int family) {
    StateLayout lay;
    lay.model = model;
    lay.family = family;
    for (int l = family; l >= modes::lowest_oam(family); l -= 2) lay.oams.push_back(l);
    return lay;
}

int StateLayout::dim() const {
    int d = has_pump() ? 2 : 0;
    for (int l : oams) d += (l > 0) ? 4 : 2;
    return d;
}

int StateLayout::noise_dim() const {
    int d = 0;
    for (int l : oams) d += (l > 0) ? 4 : 2;
    return d;
}

int StateLayout::pump() const {
    if (!has_pump()) throw ValidationError("layout: adiabatic model has no pump slot");
    return 0;
}

int StateLayout::pump_plus() const { return pump() + 1; }

namespace {

int member_offset(const StateLayout &lay, int l) {
    int off = lay.has_pump() ? 2 : 0;
    for (int m : lay.oams) {
        if (m == std::abs(l)) return off;
        off += (m > 0) ? 4 : 2;
    }
    throw ValidationError("layout: OAM " + std::to_string(l) + " not in family " +
                          std::to_string(lay.family));
}

} // namespace

int StateLayout::plus(int l) const { return member_offset(*this, l); }
int StateLayout::plus_conj(int l) const { return member_offset(*this, l) + 1; }
int StateLayout::minus(int l) const {
    const int off = member_offset(*this, l);
    return std::abs(l) > 0 ? off + 2 : off;
}
int StateLayout::minus_conj(int l) const {
    const int off = member_offset(*this, l);
    return std::abs(l) > 0 ? off + 3 : off + 1;
}

std::vector<std::string> StateLayout::labels() const {
    std::vector<std::string> out;
    if (has_pump()) {
        out.push_back("alpha_00");
        out.push_back("alpha_00^+");
    }
    for (int l : oams) {
        if (l > 0) {
            out.push_back("alpha_+" + std::to_string(l));
            out.push_back("alpha_+" + std::to_string(l) + "^+");
            out.push_back("alpha_-" + std::to_string(l));
            out.push_back("alpha_-" + std::to_string(l) + "^+");
        } else {
            out.push_back("alpha_0");
            out.push_back("alpha_0^+");
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Config

SimConfig SimConfig::resolved() const {
    SimConfig c = *this;
    if (c.dt <= 0.0) throw ValidationError("SimConfig: dt must be positive");
    if (c.n_traj < 1) throw ValidationError("SimConfig: n_traj must be >= 1");

    if (c.burn_in < 0.0) {
        const double kmax = c.params.kappas.max_empty_kappa();
        c.burn_in = kmax > 0.0 ? 20.0 / (1.0 - kmax) : 40.0;
        c.burn_in = std::clamp(c.burn_in, 10.0, 2000.0);
    }
    if (c.record_len < 0.0) c.record_len = 131072.0 * c.dt; // 2^17 samples

    const long n = std::lround(c.record_len / c.dt);
    if (n < 2 || (n & (n - 1)) != 0)
        throw ValidationError("SimConfig: record_len must be a power-of-two multiple of dt"
                              " (got " + std::to_string(n) + " samples)");
    if (std::abs(n * c.dt - c.record_len) > 1e-6 * c.record_len)
        throw ValidationError("SimConfig: record_len is not a multiple of dt");

    if (c.divergence_radius <= 0.0) {
        const auto init = initial_state(c.params, c.model);
        double amax = 1.0;
        for (const auto &z : init) amax = std::max(amax, std::abs(z));
        c.divergence_radius = 10.0 * amax;
    }
    return c;
}

int SimConfig::n_samples() const { return static_cast<int>(std::lround(record_len / dt)); }
int SimConfig::n_burn() const { return static_cast<int>(std::lround(burn_in / dt)); }

// ---------------------------------------------------------------------------
// Dynamics

std::vector<Complex> initial_state(const classical::DopoParams &p, Model model) {
    const auto lay = StateLayout::make(model, p.family);
    std::vector<Complex> st(lay.dim(), Complex(0.0, 0.0));
    const int l0 = modes::lowest_oam(p.family);
    const double sg = p.g * std::sqrt(p.gamma_ratio); // chi_{l0} in gamma_s units

    double pump_amp, rho = 0.0;
    if (p.sigma > 1.0) {
        pump_amp = 1.0 / sg;
        rho = std::sqrt((l0 == 0 ? 2.0 : 1.0) * (p.sigma - 1.0) / (p.g * p.g));
    } else {
        pump_amp = p.sigma / sg;
    }

    if (lay.has_pump()) {
        st[lay.pump()] = pump_amp;
        st[lay.pump_plus()] = pump_amp;
    }
    if (rho > 0.0) {
        st[lay.plus(l0)] = rho;
        st[lay.plus_conj(l0)] = rho;
        st[lay.minus(l0)] = rho;
        st[lay.minus_conj(l0)] = rho;
    }
    return st;
}

namespace {

struct PairInfo {
    int l;
    int ip, ipc, im, imc;
    double kappa;
    double chi;        // gamma_s units
    double sqrt_kappa; // sqrt(kappa)
    double sqrt_half;  // sqrt(kappa/2) or sqrt(chi/2)
};

struct ModelInfo {
    Model model;
    StateLayout layout;
    std::vector<PairInfo> pairs;
    double sigma, g2, drive, gamma_ratio, chi_l0;
    int ipump = -1, ipumpc = -1;

    ModelInfo(const classical::DopoParams &p, Model m)
        : model(m), layout(StateLayout::make(m, p.family)) {
        sigma = p.sigma;
        g2 = p.g * p.g;
        drive = p.pump_drive();
        gamma_ratio = p.gamma_ratio;
        chi_l0 = p.chi(modes::lowest_oam(p.family));
        if (layout.has_pump()) {
            ipump = layout.pump();
            ipumpc = layout.pump_plus();
        }
        for (int l : layout.oams) {
            PairInfo pi;
            pi.l = l;
            pi.ip = layout.plus(l);
            pi.ipc = layout.plus_conj(l);
            pi.im = layout.minus(l);
            pi.imc = layout.minus_conj(l);
            pi.kappa = p.kappas.kappa(l);
            pi.chi = p.chi(l);
            pi.sqrt_kappa = std::sqrt(pi.kappa);
            pi.sqrt_half = std::sqrt((m == Model::adiabatic ? pi.kappa : pi.chi) / 2.0);
            pairs.push_back(pi);
        }
    }
};

// N = sigma - g^2 sum_l kappa_l/(1+delta) a_{+l} a_{-l} (adiabatic), and the
// plussed partner.
inline void adiabatic_N(const ModelInfo &mi, std::span<const Complex> st, Complex &N,
                        Complex &Np) {
    Complex P(0, 0), Pp(0, 0);
    for (const auto &q : mi.pairs) {
        if (q.l > 0) {
            P += q.kappa * st[q.ip] * st[q.im];
            Pp += q.kappa * st[q.ipc] * st[q.imc];
        } else {
            P += 0.5 * q.kappa * st[q.ip] * st[q.ip];
            Pp += 0.5 * q.kappa * st[q.ipc] * st[q.ipc];
        }
    }
    N = mi.sigma - mi.g2 * P;
    Np = mi.sigma - mi.g2 * Pp;
}

void drift_into(const ModelInfo &mi, std::span<const Complex> st,
                std::span<Complex> d) {
    if (mi.model == Model::adiabatic) {
        Complex N, Np;
        adiabatic_N(mi, st, N, Np);
        for (const auto &q : mi.pairs) {
            if (q.l > 0) {
                d[q.ip] = -st[q.ip] + q.kappa * N * st[q.imc];
                d[q.ipc] = -st[q.ipc] + q.kappa * Np * st[q.im];
                d[q.im] = -st[q.im] + q.kappa * N * st[q.ipc];
                d[q.imc] = -st[q.imc] + q.kappa * Np * st[q.ip];
            } else {
                d[q.ip] = -st[q.ip] + q.kappa * N * st[q.ipc];
                d[q.ipc] = -st[q.ipc] + q.kappa * Np * st[q.ip];
            }
        }
        return;
    }

    const Complex pump = st[mi.ipump], pumpc = st[mi.ipumpc];
    Complex dep(0, 0), depp(0, 0);
    for (const auto &q : mi.pairs) {
        if (q.l > 0) {
            dep += q.chi * st[q.ip] * st[q.im];
            depp += q.chi * st[q.ipc] * st[q.imc];
        } else {
            dep += 0.5 * q.chi * st[q.ip] * st[q.ip];
            depp += 0.5 * q.chi * st[q.ipc] * st[q.ipc];
        }
    }
    d[mi.ipump] = mi.drive - mi.gamma_ratio * pump - dep;
    d[mi.ipumpc] = mi.drive - mi.gamma_ratio * pumpc - depp;
    for (const auto &q : mi.pairs) {
        if (q.l > 0) {
            d[q.ip] = -st[q.ip] + q.chi * st[q.imc] * pump;
            d[q.ipc] = -st[q.ipc] + q.chi * st[q.im] * pumpc;
            d[q.im] = -st[q.im] + q.chi * st[q.ipc] * pump;
            d[q.imc] = -st[q.imc] + q.chi * st[q.ip] * pumpc;
        } else {
            d[q.ip] = -st[q.ip] + q.chi * st[q.ipc] * pump;
            d[q.ipc] = -st[q.ipc] + q.chi * st[q.ip] * pumpc;
        }
    }
}

// One Euler-Maruyama step; returns the clamping diagnostic
// (N for adiabatic, chi_{l0} alpha_00 / gamma_s for full).
inline Complex em_step_impl(const ModelInfo &mi, double dt, std::span<Complex> st,
                            std::span<const double> eta, std::span<Complex> scratch) {
    drift_into(mi, st, scratch);

    Complex amp, ampp, ratio;
    if (mi.model == Model::adiabatic) {
        Complex N, Np;
        adiabatic_N(mi, st, N, Np);
        amp = std::sqrt(N);
        ampp = std::sqrt(Np);
        ratio = N;
    } else {
        amp = std::sqrt(st[mi.ipump]);
        ampp = std::sqrt(st[mi.ipumpc]);
        ratio = mi.chi_l0 * st[mi.ipump];
    }

    const int n = static_cast<int>(st.size());
    for (int i = 0; i < n; ++i) st[i] += dt * scratch[i];

    const double sdt = std::sqrt(dt);
    size_t e = 0;
    for (const auto &q : mi.pairs) {
        if (q.l > 0) {
            const Complex a = q.sqrt_half * amp;
            const Complex ap = q.sqrt_half * ampp;
            const double e1 = eta[e], e2 = eta[e + 1], e3 = eta[e + 2], e4 = eta[e + 3];
            e += 4;
            st[q.ip] += sdt * a * Complex(e1, e3);
            st[q.ipc] += sdt * ap * Complex(e2, e4);
            st[q.im] += sdt * a * Complex(e1, -e3);
            st[q.imc] += sdt * ap * Complex(e2, -e4);
        } else {
            const double s = (mi.model == Model::adiabatic)
                                 ? q.sqrt_kappa
                                 : std::sqrt(q.chi);
            st[q.ip] += sdt * s * amp * eta[e];
            st[q.ipc] += sdt * s * ampp * eta[e + 1];
            e += 2;
        }
    }
    return ratio;
}

} // namespace

std::vector<Complex> drift(std::span<const Complex> state,
                           const classical::DopoParams &p, Model model) {
    const ModelInfo mi(p, model);
    if (static_cast<int>(state.size()) != mi.layout.dim())
        throw ValidationError("drift: state dimension mismatch");
    std::vector<Complex> d(state.size());
    drift_into(mi, state, d);
    return d;
}

Eigen::MatrixXcd noise_matrix(std::span<const Complex> state,
                              const classical::DopoParams &p, Model model) {
    const ModelInfo mi(p, model);
    if (static_cast<int>(state.size()) != mi.layout.dim())
        throw ValidationError("noise_matrix: state dimension mismatch");

    Complex amp, ampp;
    if (model == Model::adiabatic) {
        Complex N, Np;
        adiabatic_N(mi, state, N, Np);
        amp = std::sqrt(N);
        ampp = std::sqrt(Np);
    } else {
        amp = std::sqrt(state[mi.ipump]);
        ampp = std::sqrt(state[mi.ipumpc]);
    }

    Eigen::MatrixXcd B = Eigen::MatrixXcd::Zero(mi.layout.dim(), mi.layout.noise_dim());
    const Complex i(0.0, 1.0);
    int col = 0;
    for (const auto &q : mi.pairs) {
        if (q.l > 0) {
            const Complex a = q.sqrt_half * amp;
            const Complex ap = q.sqrt_half * ampp;
            B(q.ip, col) = a;
            B(q.ip, col + 2) = i * a;
            B(q.ipc, col + 1) = ap;
            B(q.ipc, col + 3) = i * ap;
            B(q.im, col) = a;
            B(q.im, col + 2) = -i * a;
            B(q.imc, col + 1) = ap;
            B(q.imc, col + 3) = -i * ap;
            col += 4;
        } else {
            const double s =
                (model == Model::adiabatic) ? q.sqrt_kappa : std::sqrt(q.chi);
            B(q.ip, col) = s * amp;
            B(q.ipc, col + 1) = s * ampp;
            col += 2;
        }
    }
    return B;
}

Complex em_step(const classical::DopoParams &p, const StateLayout &layout,
                double dt, std::span<Complex> state, std::span<const double> eta) {
    const ModelInfo mi(p, layout.model);
    if (static_cast<int>(state.size()) != mi.layout.dim())
        throw ValidationError("em_step: state dimension mismatch");
    if (static_cast<int>(eta.size()) != mi.layout.noise_dim())
        throw ValidationError("em_step: noise dimension mismatch");
    thread_local std::vector<Complex> scratch;
    scratch.resize(state.size());
    return em_step_impl(mi, dt, state, eta, scratch);
}

Complex step(const SimConfig &cfg, const StateLayout &layout,
             std::span<Complex> state, std::mt19937_64 &rng) {
    std::normal_distribution<double> dist;
    std::vector<double> eta(layout.noise_dim());
    for (auto &e : eta) e = dist(rng);
    return em_step(cfg.params, layout, cfg.dt, state, eta);
}

// ---------------------------------------------------------------------------
// Correlogram machinery

namespace {

std::mutex fftw_plan_mutex;

// Per-thread FFT workspace for non-circular lag sums of a complex series:
// lag_k = sum_t x_t x_{t+k} (no conjugation; positive-P quadratures are
// complex along a trajectory).
class CorrEngine {
public:
    explicit CorrEngine(int n) : n_(n) {
        padded_ = 1;
        while (padded_ < 2 * n_) padded_ <<= 1;
        a_ = fftw_alloc_complex(padded_);
        b_ = fftw_alloc_complex(padded_);
        std::lock_guard<std::mutex> lock(fftw_plan_mutex);
        fwd_ = fftw_plan_dft_1d(padded_, a_, b_, FFTW_FORWARD, FFTW_ESTIMATE);
        bwd_ = fftw_plan_dft_1d(padded_, a_, b_, FFTW_BACKWARD, FFTW_ESTIMATE);
    }
    ~CorrEngine() {
        std::lock_guard<std::mutex> lock(fftw_plan_mutex);
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(bwd_);
        fftw_free(a_);
        fftw_free(b_);
    }
    CorrEngine(const CorrEngine &) = delete;
    CorrEngine &operator=(const CorrEngine &) = delete;

    // Unbiased-normalized real lags Re[sum_t x_t x_{t+k}]/(n-k), k = 0..K.
    std::vector<double> lags(std::span<const Complex> x, int K) {
        std::memcpy(a_, x.data(), sizeof(Complex) * n_);
        std::memset(a_ + n_, 0, sizeof(Complex) * (padded_ - n_));
        fftw_execute(fwd_);
        // Q_j = B_j * B_{(P-j) mod P}; inverse transform yields P * lag sums.
        const int P = padded_;
        auto *B = reinterpret_cast<Complex *>(b_);
        auto *Q = reinterpret_cast<Complex *>(a_);
        Q[0] = B[0] * B[0];
        for (int j = 1; j < P; ++j) Q[j] = B[j] * B[P - j];
        fftw_execute(bwd_);
        auto *C = reinterpret_cast<Complex *>(b_);
        std::vector<double> out(K + 1);
        for (int k = 0; k <= K; ++k)
            out[k] = C[k].real() / (static_cast<double>(P) * (n_ - k));
        return out;
    }

private:
    int n_, padded_;
    fftw_complex *a_, *b_;
    fftw_plan fwd_, bwd_;
};

std::vector<double> default_grid() {
    std::vector<double> w(51);
    for (int i = 0; i < 51; ++i) w[i] = 5.0 * i / 50.0;
    return w;
}

// S(w) = 2 gamma dt (C_0 + 2 sum_k C_k cos(w k dt)) projected on a grid.
std::vector<double> project_row(const std::vector<double> &lags, double dt,
                                double gamma_s, const std::vector<double> &grid) {
    const int K = static_cast<int>(lags.size()) - 1;
    std::vector<double> row(grid.size());
    for (size_t i = 0; i < grid.size(); ++i) {
        const double w = grid[i] * gamma_s; // grid is in gamma_s units
        double s = lags[0];
        for (int k = 1; k <= K; ++k) s += 2.0 * lags[k] * std::cos(w * k * dt);
        row[i] = 2.0 * gamma_s * dt * s;
    }
    return row;
}

// Dirichlet kernel of the same lag window, for the mean-squared correction.
std::vector<double> mean_kernel(int K, double dt, double gamma_s,
                                const std::vector<double> &grid) {
    std::vector<double> ker(grid.size());
    for (size_t i = 0; i < grid.size(); ++i) {
        const double w = grid[i] * gamma_s;
        double s = 1.0;
        for (int k = 1; k <= K; ++k) s += 2.0 * std::cos(w * k * dt);
        ker[i] = 2.0 * gamma_s * dt * s;
    }
    return ker;
}

struct ReducedSpectrum {
    linquant::SpectrumResult spectrum;
    Complex mean;
};

// Ensemble reduction shared by the streaming and raw-series paths: average
// the per-trajectory rows, subtract the U-statistic estimate of the
// coherent (mean) contribution, bootstrap trajectories for the CI.
ReducedSpectrum reduce_rows(const std::vector<std::vector<double>> &rows,
                            const std::vector<Complex> &means,
                            const std::vector<double> &grid,
                            const std::vector<double> &kernel, int bootstrap,
                            std::uint64_t bootstrap_seed) {
    const int M = static_cast<int>(rows.size());
    const size_t G = grid.size();

    std::vector<double> mean_row(G, 0.0);
    for (const auto &r : rows)
        for (size_t i = 0; i < G; ++i) mean_row[i] += r[i];
    for (auto &v : mean_row) v /= M;

    Complex s1(0, 0), s2(0, 0);
    for (const auto &m : means) {
        s1 += m;
        s2 += m * m;
    }
    const double musq =
        M > 1 ? ((s1 * s1 - s2) / (static_cast<double>(M) * (M - 1))).real() : 0.0;

    ReducedSpectrum out;
    out.mean = s1 / static_cast<double>(M);
    out.spectrum.source = linquant::SpectrumSource::monte_carlo;
    out.spectrum.omega = grid;
    out.spectrum.S.resize(G);
    out.spectrum.V.resize(G);
    for (size_t i = 0; i < G; ++i) {
        out.spectrum.S[i] = mean_row[i] - musq * kernel[i];
        out.spectrum.V[i] = 1.0 + out.spectrum.S[i];
    }

    if (bootstrap > 1 && M > 1) {
        std::mt19937_64 rng(bootstrap_seed);
        std::uniform_int_distribution<int> pick(0, M - 1);
        std::vector<double> acc(G), sum(G, 0.0), sum2(G, 0.0);
        for (int b = 0; b < bootstrap; ++b) {
            std::fill(acc.begin(), acc.end(), 0.0);
            for (int t = 0; t < M; ++t) {
                const auto &r = rows[pick(rng)];
                for (size_t i = 0; i < G; ++i) acc[i] += r[i];
            }
            for (size_t i = 0; i < G; ++i) {
                const double v = acc[i] / M;
                sum[i] += v;
                sum2[i] += v * v;
            }
        }
        out.spectrum.ci_halfwidth.resize(G);
        for (size_t i = 0; i < G; ++i) {
            const double var = std::max(0.0, sum2[i] / bootstrap -
                                                 (sum[i] / bootstrap) * (sum[i] / bootstrap));
            out.spectrum.ci_halfwidth[i] = 1.96 * std::sqrt(var);
        }
    }
    return out;
}

} // namespace

std::string SeriesSelector::name() const {
    std::string q = quad == linquant::Quadrature::x ? "x" : "y";
    std::string m;
    switch (mode) {
    case linquant::ModeKind::hybrid_c: m = "c"; break;
    case linquant::ModeKind::hybrid_s: m = "s"; break;
    case linquant::ModeKind::oam_plus: m = "p"; break;
    case linquant::ModeKind::oam_minus: m = "m"; break;
    }
    return q + "_" + m + "_l" + std::to_string(l);
}

// ---------------------------------------------------------------------------
// Ensemble driver

namespace {

double selector_corr_time(const classical::DopoParams &p, const SeriesSelector &sel) {
    const int l0 = modes::lowest_oam(p.family);
    const double kappa = p.kappas.kappa(sel.l);
    const bool is_y = sel.quad == linquant::Quadrature::y;
    double rate;
    if (p.sigma > 1.0 && std::abs(sel.l) == l0) {
        rate = is_y ? 2.0 : 2.0 * (p.sigma - 1.0);
    } else {
        const double ke = p.sigma <= 1.0 ? p.sigma * kappa : kappa;
        rate = is_y ? 1.0 + ke : 1.0 - ke;
    }
    return 1.0 / std::max(rate, 1e-3);
}

// Record-length guard per the (1 - kappa) correlation-time convention.
double selector_check_time(const classical::DopoParams &p, const SeriesSelector &sel) {
    const int l0 = modes::lowest_oam(p.family);
    const double kappa = p.kappas.kappa(sel.l);
    if (p.sigma > 1.0 && std::abs(sel.l) == l0)
        return 1.0 / std::max(2.0 * (p.sigma - 1.0), 1e-2);
    const double ke = p.sigma <= 1.0 ? p.sigma * kappa : kappa;
    return 1.0 / std::max(1.0 - ke, 1e-3);
}

struct SelectorPlan {
    SeriesSelector sel;
    std::vector<int> idx;          // state slots
    std::vector<Complex> coeff;    // quadrature coefficients on those slots
    int K = 1;                     // correlogram truncation in samples
    double lag_window = 0.0;
    std::vector<double> cos_kernel; // mean correction kernel on the grid
};

SelectorPlan make_plan(const SimConfig &cfg, const StateLayout &lay,
                       const SeriesSelector &sel, const SpectrumOptions &opts,
                       const std::vector<double> &grid) {
    SelectorPlan plan;
    plan.sel = sel;
    const int l = std::abs(sel.l);
    const bool pair = l > 0;
    const Eigen::VectorXcd v =
        linquant::selector_coefficients(sel.mode, sel.quad, sel.lbeta, pair);
    if (pair) {
        plan.idx = {lay.plus(l), lay.plus_conj(l), lay.minus(l), lay.minus_conj(l)};
    } else {
        plan.idx = {lay.plus(0), lay.plus_conj(0)};
    }
    for (Eigen::Index i = 0; i < v.size(); ++i) plan.coeff.push_back(v(i));

    const double T = cfg.record_len;
    const double check = selector_check_time(cfg.params, sel);
    if (T < 20.0 * check)
        throw ValidationError("record_len " + std::to_string(T) +
                              " is shorter than 20 correlation times (" +
                              std::to_string(20.0 * check) + ") for selector " +
                              sel.name());

    double L = opts.lag_window > 0.0 ? opts.lag_window
                                     : 9.0 * selector_corr_time(cfg.params, sel);
    L = std::min(L, T / 4.0);
    plan.lag_window = L;
    plan.K = std::clamp(static_cast<int>(std::lround(L / cfg.dt)), 1,
                        cfg.n_samples() - 1);
    plan.cos_kernel = mean_kernel(plan.K, cfg.dt, 1.0, grid);
    return plan;
}

// Little-endian f64 frames [traj, tau, Re/Im components...], flushed in
// trajectory order regardless of completion order.
class OrderedFrameWriter {
public:
    explicit OrderedFrameWriter(const std::string &path) : out_(path, std::ios::binary) {
        if (!out_) throw NumericalError("cannot open series file: " + path);
    }
    void submit(int traj, std::vector<double> frames) {
        std::lock_guard<std::mutex> lock(m_);
        parked_[traj] = std::move(frames);
        while (!parked_.empty() && parked_.begin()->first == next_) {
            const auto &f = parked_.begin()->second;
            out_.write(reinterpret_cast<const char *>(f.data()),
                       static_cast<std::streamsize>(f.size() * sizeof(double)));
            parked_.erase(parked_.begin());
            ++next_;
        }
    }

private:
    std::ofstream out_;
    std::mutex m_;
    std::map<int, std::vector<double>> parked_;
    int next_ = 0;
};

} // namespace

EnsembleResult run_ensemble(const SimConfig &raw_cfg,
                            const std::vector<SeriesSelector> &selectors,
                            const SpectrumOptions &opts, int n_threads,
                            const std::string &series_path) {
    const SimConfig cfg = raw_cfg.resolved();
    const ModelInfo mi(cfg.params, cfg.model);
    const StateLayout &lay = mi.layout;
    const int dim = lay.dim();
    const int n_samples = cfg.n_samples();
    const int n_burn = cfg.n_burn();
    const int M = cfg.n_traj;

    const std::vector<double> grid =
        opts.omega_grid.empty() ? default_grid() : opts.omega_grid;

    std::vector<SelectorPlan> plans;
    for (const auto &sel : selectors) plans.push_back(make_plan(cfg, lay, sel, opts, grid));

    std::unique_ptr<OrderedFrameWriter> sink;
    if (!series_path.empty()) {
        const double total = static_cast<double>(M) * n_samples * (2 + 2 * dim);
        if (total > 1.6e7)
            throw ValidationError("series export would write " + std::to_string(total) +
                                  " doubles; reduce n_traj or record_len");
        sink = std::make_unique<OrderedFrameWriter>(series_path);
    }

    const std::vector<Complex> init = initial_state(cfg.params, cfg.model);
    const double R2 = cfg.divergence_radius * cfg.divergence_radius;
    const size_t S = selectors.size();

    // Per-trajectory results, stored by index so reductions are order-fixed.
    std::vector<char> valid(M, 0);
    std::vector<std::vector<std::vector<double>>> rows(S); // [sel][traj] -> row
    for (auto &r : rows) r.assign(M, {});
    std::vector<std::vector<Complex>> sel_mean(S, std::vector<Complex>(M));
    std::vector<std::vector<Complex>> sel_halfdiff(S, std::vector<Complex>(M));
    std::vector<std::vector<Complex>> traj_state_mean(M);
    std::vector<Complex> traj_ratio(M);

    int workers = n_threads > 0 ? n_threads
                                : static_cast<int>(std::thread::hardware_concurrency());
    workers = std::clamp(workers, 1, std::max(1, M));

    std::atomic<int> next_traj{0};

    auto worker = [&]() {
        CorrEngine engine(n_samples);
        std::vector<Complex> state(dim), scratch(dim);
        std::vector<double> eta(lay.noise_dim());
        std::vector<std::vector<Complex>> series(S, std::vector<Complex>(n_samples));

        for (;;) {
            const int traj = next_traj.fetch_add(1);
            if (traj >= M) break;

            auto rng = trajectory_rng(cfg.seed, traj);
            std::normal_distribution<double> dist;
            std::copy(init.begin(), init.end(), state.begin());

            bool ok = true;
            auto diverged = [&]() {
                for (const auto &z : state)
                    if (z.real() * z.real() + z.imag() * z.imag() > R2) return true;
                return false;
            };

            for (int t = 0; t < n_burn && ok; ++t) {
                for (auto &e : eta) e = dist(rng);
                em_step_impl(mi, cfg.dt, state, eta, scratch);
                if (diverged()) ok = false;
            }

            std::vector<Complex> smean(dim, Complex(0, 0));
            Complex ratio_sum(0, 0);
            std::vector<double> frames;
            if (sink) frames.reserve(static_cast<size_t>(n_samples) * (2 + 2 * dim));

            for (int t = 0; t < n_samples && ok; ++t) {
                for (auto &e : eta) e = dist(rng);
                ratio_sum += em_step_impl(mi, cfg.dt, state, eta, scratch);
                if (diverged()) { ok = false; break; }
                for (size_t s = 0; s < S; ++s) {
                    Complex v(0, 0);
                    const auto &plan = plans[s];
                    for (size_t j = 0; j < plan.idx.size(); ++j)
                        v += plan.coeff[j] * state[plan.idx[j]];
                    series[s][t] = v;
                }
                for (int c = 0; c < dim; ++c) smean[c] += state[c];
                if (sink) {
                    frames.push_back(traj);
                    frames.push_back((t + 1) * cfg.dt);
                    for (int c = 0; c < dim; ++c) {
                        frames.push_back(state[c].real());
                        frames.push_back(state[c].imag());
                    }
                }
            }

            valid[traj] = ok ? 1 : 0;
            if (!ok) {
                if (sink) sink->submit(traj, {});
                continue;
            }

            for (int c = 0; c < dim; ++c) smean[c] /= static_cast<double>(n_samples);
            traj_state_mean[traj] = smean;
            traj_ratio[traj] = ratio_sum / static_cast<double>(n_samples);

            for (size_t s = 0; s < S; ++s) {
                const auto lags = engine.lags(series[s], plans[s].K);
                rows[s][traj] = project_row(lags, cfg.dt, 1.0, grid);
                Complex m1(0, 0), m2(0, 0);
                const int half = n_samples / 2;
                for (int t = 0; t < half; ++t) m1 += series[s][t];
                for (int t = half; t < n_samples; ++t) m2 += series[s][t];
                sel_mean[s][traj] = (m1 + m2) / static_cast<double>(n_samples);
                sel_halfdiff[s][traj] = (m2 - m1) / static_cast<double>(half);
            }
            if (sink) sink->submit(traj, std::move(frames));
        }
    };

    {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto &t : pool) t.join();
    }

    EnsembleResult res;
    res.config = cfg;
    res.divergence_radius = cfg.divergence_radius;
    int n_ok = 0;
    for (int t = 0; t < M; ++t) n_ok += valid[t];
    res.n_rejected = M - n_ok;
    res.rejection_fraction = static_cast<double>(res.n_rejected) / M;
    if (res.rejection_fraction > 0.01)
        throw NumericalError("run_ensemble: " + std::to_string(res.n_rejected) + "/" +
                             std::to_string(M) +
                             " trajectories diverged (> 1%); reduce dt or g");

    // Order-fixed reductions over valid trajectories.
    res.state_mean.assign(dim, Complex(0, 0));
    Complex ratio(0, 0);
    for (int t = 0; t < M; ++t) {
        if (!valid[t]) continue;
        for (int c = 0; c < dim; ++c) res.state_mean[c] += traj_state_mean[t][c];
        ratio += traj_ratio[t];
    }
    for (auto &c : res.state_mean) c /= static_cast<double>(n_ok);
    ratio /= static_cast<double>(n_ok);
    res.pump_ratio = ratio.real();
    res.pump_mean = ratio / mi.chi_l0;

    for (size_t s = 0; s < S; ++s) {
        std::vector<std::vector<double>> vrows;
        std::vector<Complex> vmeans, vdiff;
        vrows.reserve(n_ok);
        for (int t = 0; t < M; ++t) {
            if (!valid[t]) continue;
            vrows.push_back(std::move(rows[s][t]));
            vmeans.push_back(sel_mean[s][t]);
            vdiff.push_back(sel_halfdiff[s][t]);
        }
        const auto red =
            reduce_rows(vrows, vmeans, grid, plans[s].cos_kernel,
                        opts.bootstrap_resamples,
                        bootstrap_seed_for(cfg.seed, static_cast<int>(s)));

        SelectorEstimate est;
        est.selector = selectors[s];
        est.spectrum = red.spectrum;
        est.series_mean = red.mean;
        est.lag_window = plans[s].lag_window;

        Complex dsum(0, 0);
        double d2 = 0.0;
        for (const auto &d : vdiff) {
            dsum += d;
            d2 += std::norm(d);
        }
        const Complex dmean = dsum / static_cast<double>(n_ok);
        const double dvar = std::max(0.0, d2 / n_ok - std::norm(dmean));
        est.stationarity_z =
            dvar > 0.0 ? std::abs(dmean) / std::sqrt(dvar / n_ok) : 0.0;
        res.estimates.push_back(std::move(est));
    }
    return res;
}

std::uint64_t bootstrap_seed_for(std::uint64_t seed, int selector_index) {
    return splitmix64(seed ^ (0xB005742A9ULL + 0x9E3779B97F4A7C15ULL * (selector_index + 1)));
}

linquant::SpectrumResult estimate_spectrum(
    const std::vector<std::vector<Complex>> &series, double dt, double gamma_s,
    const SpectrumOptions &opts, double corr_time, std::uint64_t bootstrap_seed) {
    if (series.empty() || series.front().size() < 4)
        throw ValidationError("estimate_spectrum: need at least one series of length >= 4");
    const int n = static_cast<int>(series.front().size());
    for (const auto &s : series)
        if (static_cast<int>(s.size()) != n)
            throw ValidationError("estimate_spectrum: series lengths differ");

    const double T = n * dt;
    if (corr_time > 0.0 && T < 20.0 * corr_time)
        throw ValidationError("estimate_spectrum: record of " + std::to_string(T) +
                              " is shorter than 20 correlation times (" +
                              std::to_string(20.0 * corr_time) + ")");

    const std::vector<double> grid =
        opts.omega_grid.empty() ? default_grid() : opts.omega_grid;
    double L = opts.lag_window > 0.0 ? opts.lag_window
                                     : (corr_time > 0.0 ? 9.0 * corr_time : T / 8.0);
    L = std::min(L, T / 4.0);
    const int K = std::clamp(static_cast<int>(std::lround(L / dt)), 1, n - 1);
    const auto kernel = mean_kernel(K, dt, gamma_s, grid);

    CorrEngine engine(n);
    std::vector<std::vector<double>> rows;
    std::vector<Complex> means;
    for (const auto &s : series) {
        const auto lags = engine.lags(s, K);
        rows.push_back(project_row(lags, dt, gamma_s, grid));
        Complex m(0, 0);
        for (const auto &v : s) m += v;
        means.push_back(m / static_cast<double>(n));
    }
    return reduce_rows(rows, means, grid, kernel, opts.bootstrap_resamples,
                       bootstrap_seed)
        .spectrum;
}

} // namespace dopo::stochastic
