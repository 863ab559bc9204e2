#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qme/bath.hpp"
#include "qme/propagate.hpp"

namespace qme {

struct ModelConfig {
    enum class Type { HarmonicOscillator, SpinBoson, IsingChain };
    Type type = Type::HarmonicOscillator;
    double omega = 1.0;
    int levels = 60;
    double epsilon = 1.0;
    int length = 8;
    double exchange = 1.0;  // J

    /// Characteristic frequency used for step-size defaults.
    double frequency_scale() const;
};

struct BathConfig {
    SpectralDensity::Family family = SpectralDensity::Family::LorentzDrude;
    double coupling = 0.1;
    double cutoff = 5.0;
    double temperature = 1.0;  // natural units after parsing
    bool caldeira_leggett = false;  // correlator carries a 1/pi scale
    bool counterterm = false;

    BathSpec to_bath_spec() const;
};

struct InitialConfig {
    enum class Type { Gibbs, Fock, Superposition, File };
    Type type = Type::Gibbs;
    double beta = 1.0;
    int level = 0;
    int level_a = 0, level_b = 1;
    std::string path;
};

struct TimeConfig {
    double t_max = 10.0;
    double step = 0.0;  // 0 = automatic
    int output_stride = 10;
    bool time_dependent_rates = false;
};

struct SweepConfig {
    std::vector<double> temperatures;
    std::vector<double> couplings;
    double tau_r_factor = 2.0;  // tau_R = factor / gamma
};

struct ToleranceConfig {
    double quad_abs = 1e-9;
    double quad_rel = 1e-7;
    double eps_deg_factor = 1e-9;
    double eps_den_factor = 1e-12;
    double trace_tol = 1e-8;
    double steady_residual = 1e-10;
    double self_check_tol = 1e-6;
};

struct OutputConfig {
    std::string dir = "out";
    bool store_matrices = true;
    bool compute_min_eig = true;
};

struct Config {
    ModelConfig model;
    std::vector<BathConfig> baths;
    std::vector<Method> methods;
    InitialConfig initial;
    TimeConfig time;
    std::optional<SweepConfig> sweep;
    ToleranceConfig tolerances;
    OutputConfig output;
};

/// Parses and validates a JSON configuration (or a run manifest, whose
/// resolved `config` block round-trips through here). Kelvin temperatures are
/// converted at parse time. Throws ConfigError with a description.
Config parse_config_file(const std::string& path);
Config parse_config_text(const std::string& text);

/// Serialized resolved configuration (natural units everywhere).
std::string config_to_json(const Config& cfg);

}  // namespace qme
