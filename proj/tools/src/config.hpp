#ifndef DOPO_CLI_CONFIG_HPP
#define DOPO_CLI_CONFIG_HPP

#include "dopo/classical.hpp"
#include "dopo/modes.hpp"
#include "dopo/stochastic.hpp"

#include <optional>
#include <string>
#include <vector>

namespace dopo::cli {

// JSON run configuration; unknown keys are rejected everywhere.
struct RunConfig {
    std::optional<modes::CavityGeometry> geometry;

    struct OperatingPoint {
        int family = 0;
        double sigma = 0.0;
        double g = 0.0;
        double gamma_ratio = 1.0;
        double gamma_s = 1.0;
    };
    std::optional<OperatingPoint> operating_point;

    struct Simulation {
        std::string model = "adiabatic";
        double dt = 2e-3;
        std::optional<double> burn_in;
        std::optional<double> record_len;
        int n_traj = 400;
        std::uint64_t seed = 1;
        std::optional<double> divergence_radius;
    };
    std::optional<Simulation> simulation;

    std::string output_dir = ".";
    std::vector<std::string> output_formats = {"csv"};

    static RunConfig load(const std::string &path);

    classical::DopoParams make_params() const;      // needs operating_point
    stochastic::SimConfig make_sim_config() const;  // needs both sections
};

} // namespace dopo::cli

#endif
