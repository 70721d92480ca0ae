#ifndef DOPO_STOCHASTIC_HPP
#define DOPO_STOCHASTIC_HPP

#include "dopo/classical.hpp"
#include "dopo/linear_quantum.hpp"

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace dopo::stochastic {

using Complex = std::complex<double>;

enum class Model { full, adiabatic };

// Flat complex phase-space vector. The full model carries the pump pair
// (alpha_00, alpha_00^+) first; both models then hold, per family member l
// in descending order: l > 0 -> (a_{+l}, a_{+l}^+, a_{-l}, a_{-l}^+),
// l = 0 -> (a_0, a_0^+). The ^+ amplitudes are independent of the
// unplussed ones trajectory-wise; they conjugate only in ensemble mean.
struct StateLayout {
    Model model;
    int family;
    std::vector<int> oams; // descending member values l (unsigned)

    static StateLayout make(Model model, int family);

    int dim() const;
    int noise_dim() const; // real white noises consumed per step
    bool has_pump() const { return model == Model::full; }
    int pump() const;
    int pump_plus() const;
    int plus(int l) const;
    int plus_conj(int l) const;
    int minus(int l) const; // l = 0: same slot as plus(0)
    int minus_conj(int l) const;
    std::vector<std::string> labels() const;
};

struct SimConfig {
    classical::DopoParams params;
    Model model = Model::adiabatic;
    double dt = 2e-3;               // step, units 1/gamma_s
    double burn_in = -1.0;          // duration; < 0 selects the default
    double record_len = -1.0;       // duration; must be a power-of-two multiple of dt
    int n_traj = 16000;
    std::uint64_t seed = 1;
    double divergence_radius = 0.0; // <= 0 selects 10 max(classical amplitude, 1)

    // Fills defaults and validates; throws ValidationError.
    SimConfig resolved() const;
    int n_samples() const;  // record_len / dt, a power of two
    int n_burn() const;
};

// Deterministic part of the Langevin equations, scaled time tau = gamma_s t.
std::vector<Complex> drift(std::span<const Complex> state,
                           const classical::DopoParams &p, Model model);

// Noise matrix B with D = B B^T (plain transpose), block diagonal per OAM
// pair; the pump block is zero. Complex square roots take the principal
// branch. Columns follow the per-step noise order of `em_step`.
Eigen::MatrixXcd noise_matrix(std::span<const Complex> state,
                              const classical::DopoParams &p, Model model);

// One Euler-Maruyama Ito step with the provided standard-normal draws
// (length layout.noise_dim()): state += A dt + B sqrt(dt) eta.
// Returns the N (adiabatic) or chi_l0 alpha_00 / gamma_s (full) value used.
Complex em_step(const classical::DopoParams &p, const StateLayout &layout,
                double dt, std::span<Complex> state, std::span<const double> eta);

// Convenience wrapper drawing the normals from `rng`.
Complex step(const SimConfig &cfg, const StateLayout &layout,
             std::span<Complex> state, std::mt19937_64 &rng);

// Classical stationary state (k = l0 branch above threshold, trivial below)
// with zero fluctuation, alpha^+ = conj(alpha).
std::vector<Complex> initial_state(const classical::DopoParams &p, Model model);

// Per-trajectory RNG stream, independent of thread schedule.
std::mt19937_64 trajectory_rng(std::uint64_t seed, int trajectory_index);

// One quadrature series to record: X or Y of a hybrid or OAM mode of pair l.
struct SeriesSelector {
    int l = 0;
    linquant::ModeKind mode = linquant::ModeKind::hybrid_c;
    linquant::Quadrature quad = linquant::Quadrature::y;
    double lbeta = 0.0;

    std::string name() const;
};

struct SpectrumOptions {
    std::vector<double> omega_grid; // gamma_s units; empty = [0,5] x 51
    double lag_window = -1.0;       // correlogram truncation time; < 0 = auto
    int bootstrap_resamples = 200;
};

struct SelectorEstimate {
    SeriesSelector selector;
    linquant::SpectrumResult spectrum;
    Complex series_mean{0.0, 0.0};
    double stationarity_z = 0.0; // half-record mean drift in standard errors
    double lag_window = 0.0;
};

struct EnsembleResult {
    SimConfig config; // resolved
    std::vector<SelectorEstimate> estimates;
    int n_rejected = 0;
    double rejection_fraction = 0.0;
    double divergence_radius = 0.0;
    Complex pump_mean{0.0, 0.0}; // ensemble/time mean of alpha_00
    double pump_ratio = 0.0;     // chi_l0 <alpha_00>/gamma_s, clamps to 1 above threshold
    std::vector<Complex> state_mean; // per-component ensemble/time mean
};

// Simulates cfg.n_traj independent trajectories (parallelized over threads;
// results are byte-identical for any thread count), discards burn-in,
// extracts the selector series and estimates their squeezing spectra.
// Rejects trajectories whose amplitudes leave the divergence radius; more
// than 1% rejections raises NumericalError. If `series_path` is nonempty,
// raw state frames [traj, tau, Re/Im components...] are written there as
// little-endian f64 (diagnostic runs only; see README).
EnsembleResult run_ensemble(const SimConfig &cfg,
                            const std::vector<SeriesSelector> &selectors,
                            const SpectrumOptions &opts = {},
                            int n_threads = 0,
                            const std::string &series_path = {});

// Deterministic bootstrap stream used for the CI of selector `selector_index`.
std::uint64_t bootstrap_seed_for(std::uint64_t seed, int selector_index);

// Squeezing-spectrum estimate from explicit per-trajectory series:
// ensemble-mean-corrected correlogram with a rectangular lag window,
// S(w) = 2 gamma_s dt (C_0 + 2 sum_k C_k cos(w k dt)), V = 1 + S, with
// bootstrap confidence half-widths over trajectories. `corr_time` guards
// the record length (throws if record < 20 correlation times).
linquant::SpectrumResult estimate_spectrum(
    const std::vector<std::vector<Complex>> &series, double dt, double gamma_s,
    const SpectrumOptions &opts = {}, double corr_time = 0.0,
    std::uint64_t bootstrap_seed = 1);

} // namespace dopo::stochastic

#endif
