#include "qme/config.hpp"

#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "qme/models.hpp"

namespace qme {

using nlohmann::json;

double ModelConfig::frequency_scale() const {
    switch (type) {
        case Type::HarmonicOscillator: return omega;
        case Type::SpinBoson: return epsilon;
        case Type::IsingChain: return exchange;
    }
    return 1.0;
}

BathSpec BathConfig::to_bath_spec() const {
    const double scale = caldeira_leggett ? 1.0 / std::numbers::pi : 1.0;
    SpectralDensity spec = (family == SpectralDensity::Family::LorentzDrude)
                               ? SpectralDensity::lorentz_drude(coupling, cutoff, scale)
                               : SpectralDensity::ohmic_exp(coupling, cutoff, scale);
    return BathSpec{spec, temperature, counterterm};
}

namespace {

[[noreturn]] void fail(const std::string& what) { throw ConfigError(what); }

template <typename T>
T get_or(const json& j, const std::string& key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        fail("bad value for '" + key + "': " + e.what());
    }
}

template <typename T>
T require(const json& j, const std::string& key, const std::string& ctx) {
    if (!j.contains(key)) fail("missing key '" + key + "' in " + ctx);
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        fail("bad value for '" + key + "' in " + ctx + ": " + e.what());
    }
}

ModelConfig parse_model(const json& j) {
    ModelConfig m;
    const auto type = require<std::string>(j, "type", "model");
    if (type == "harmonic_oscillator") {
        m.type = ModelConfig::Type::HarmonicOscillator;
        m.omega = get_or(j, "omega", 1.0);
        m.levels = get_or(j, "levels", 60);
        if (m.levels < 10) fail("harmonic oscillator needs at least 10 levels");
    } else if (type == "spin_boson") {
        m.type = ModelConfig::Type::SpinBoson;
        m.epsilon = require<double>(j, "epsilon", "model");
        if (m.epsilon <= 0) fail("epsilon must be positive");
    } else if (type == "ising_chain") {
        m.type = ModelConfig::Type::IsingChain;
        m.length = require<int>(j, "length", "model");
        m.exchange = get_or(j, "j", 1.0);
        if (m.length < 2 || m.length > 12) fail("chain length must be in [2, 12]");
        if (m.length % 2 != 0) fail("chain length must be even (central-site coupling)");
    } else {
        fail("unknown model type '" + type + "'");
    }
    return m;
}

BathConfig parse_bath(const json& j, const ModelConfig& model) {
    BathConfig b;
    const auto family = get_or<std::string>(j, "family", "lorentz_drude");
    if (family == "lorentz_drude") {
        b.family = SpectralDensity::Family::LorentzDrude;
    } else if (family == "ohmic_exp") {
        b.family = SpectralDensity::Family::OhmicExp;
    } else {
        fail("unknown spectral family '" + family + "'");
    }
    b.coupling = require<double>(j, "coupling", "bath");
    b.cutoff = require<double>(j, "cutoff", "bath");
    b.temperature = require<double>(j, "temperature", "bath");
    const auto unit = get_or<std::string>(j, "temperature_unit", "natural");
    if (unit == "kelvin") {
        b.temperature = kelvin_to_energy(b.temperature);
    } else if (unit != "natural") {
        fail("temperature_unit must be 'natural' or 'kelvin'");
    }
    if (b.temperature <= 0) fail("temperature must be positive");

    const bool is_ho = model.type == ModelConfig::Type::HarmonicOscillator;
    const auto convention = get_or<std::string>(
        j, "convention", is_ho && b.family == SpectralDensity::Family::LorentzDrude
                             ? "caldeira_leggett"
                             : "direct");
    if (convention == "caldeira_leggett") {
        b.caldeira_leggett = true;
    } else if (convention == "direct") {
        b.caldeira_leggett = false;
    } else {
        fail("convention must be 'caldeira_leggett' or 'direct'");
    }
    b.counterterm = get_or(j, "counterterm", b.caldeira_leggett);
    if (b.counterterm && b.family != SpectralDensity::Family::LorentzDrude) {
        fail("counter-term renormalization is defined for the Lorentz-Drude family");
    }
    return b;
}

InitialConfig parse_initial(const json& j) {
    InitialConfig ini;
    const auto type = get_or<std::string>(j, "type", "gibbs");
    if (type == "gibbs") {
        ini.type = InitialConfig::Type::Gibbs;
        ini.beta = require<double>(j, "beta", "initial");
    } else if (type == "fock") {
        ini.type = InitialConfig::Type::Fock;
        ini.level = get_or(j, "n", 0);
    } else if (type == "superposition") {
        ini.type = InitialConfig::Type::Superposition;
        const auto levels = require<std::vector<int>>(j, "levels", "initial");
        if (levels.size() != 2) fail("superposition needs exactly two levels");
        ini.level_a = levels[0];
        ini.level_b = levels[1];
    } else if (type == "file") {
        ini.type = InitialConfig::Type::File;
        ini.path = require<std::string>(j, "path", "initial");
    } else {
        fail("unknown initial state type '" + type + "'");
    }
    return ini;
}

Config parse_json(const json& root_in) {
    const json& root = root_in.contains("config") ? root_in.at("config") : root_in;
    Config cfg;
    if (!root.contains("model")) fail("missing 'model' block");
    cfg.model = parse_model(root.at("model"));

    if (!root.contains("baths") || !root.at("baths").is_array() || root.at("baths").empty()) {
        fail("need a non-empty 'baths' array");
    }
    for (const auto& jb : root.at("baths")) cfg.baths.push_back(parse_bath(jb, cfg.model));

    const auto methods = require<std::vector<std::string>>(root, "methods", "config");
    if (methods.empty()) fail("need at least one method");
    for (const auto& name : methods) cfg.methods.push_back(method_from_name(name));
    for (const auto m : cfg.methods) {
        if (m == Method::ExactHO && cfg.model.type != ModelConfig::Type::HarmonicOscillator) {
            fail("exact_ho is only defined for the harmonic-oscillator model");
        }
    }

    cfg.initial = root.contains("initial") ? parse_initial(root.at("initial")) : InitialConfig{};
    if (root.contains("time")) {
        const auto& jt = root.at("time");
        cfg.time.t_max = require<double>(jt, "t_max", "time");
        cfg.time.step = get_or(jt, "h", 0.0);
        cfg.time.output_stride = get_or(jt, "output_stride", 10);
        cfg.time.time_dependent_rates = get_or(jt, "time_dependent_rates", false);
        if (cfg.time.t_max <= 0) fail("t_max must be positive");
        if (cfg.time.output_stride < 1) fail("output_stride must be >= 1");
    }
    if (root.contains("sweep")) {
        SweepConfig sw;
        const auto& js = root.at("sweep");
        sw.temperatures = require<std::vector<double>>(js, "temperatures", "sweep");
        sw.couplings = require<std::vector<double>>(js, "couplings", "sweep");
        sw.tau_r_factor = get_or(js, "tau_r_factor", 2.0);
        if (sw.temperatures.empty() || sw.couplings.empty()) fail("sweep axes must be non-empty");
        cfg.sweep = sw;
    }
    if (root.contains("tolerances")) {
        const auto& jt = root.at("tolerances");
        cfg.tolerances.quad_abs = get_or(jt, "quad_abs", cfg.tolerances.quad_abs);
        cfg.tolerances.quad_rel = get_or(jt, "quad_rel", cfg.tolerances.quad_rel);
        cfg.tolerances.eps_deg_factor = get_or(jt, "eps_deg_factor", cfg.tolerances.eps_deg_factor);
        cfg.tolerances.eps_den_factor = get_or(jt, "eps_den_factor", cfg.tolerances.eps_den_factor);
        cfg.tolerances.trace_tol = get_or(jt, "trace_tol", cfg.tolerances.trace_tol);
        cfg.tolerances.steady_residual =
            get_or(jt, "steady_residual", cfg.tolerances.steady_residual);
        cfg.tolerances.self_check_tol =
            get_or(jt, "self_check_tol", cfg.tolerances.self_check_tol);
    }
    if (root.contains("output")) {
        const auto& jo = root.at("output");
        cfg.output.dir = get_or<std::string>(jo, "dir", "out");
        cfg.output.store_matrices = get_or(jo, "store_matrices", true);
        cfg.output.compute_min_eig = get_or(jo, "min_eig", true);
    }
    return cfg;
}

}  // namespace

Config parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("cannot open config file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

Config parse_config_text(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::exception& e) {
        fail(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_json(root);
}

std::string config_to_json(const Config& cfg) {
    json j;
    json jm;
    switch (cfg.model.type) {
        case ModelConfig::Type::HarmonicOscillator:
            jm = {{"type", "harmonic_oscillator"}, {"omega", cfg.model.omega},
                  {"levels", cfg.model.levels}};
            break;
        case ModelConfig::Type::SpinBoson:
            jm = {{"type", "spin_boson"}, {"epsilon", cfg.model.epsilon}};
            break;
        case ModelConfig::Type::IsingChain:
            jm = {{"type", "ising_chain"}, {"length", cfg.model.length},
                  {"j", cfg.model.exchange}};
            break;
    }
    j["model"] = jm;
    j["baths"] = json::array();
    for (const auto& b : cfg.baths) {
        j["baths"].push_back(
            {{"family", b.family == SpectralDensity::Family::LorentzDrude ? "lorentz_drude"
                                                                          : "ohmic_exp"},
             {"coupling", b.coupling},
             {"cutoff", b.cutoff},
             {"temperature", b.temperature},
             {"temperature_unit", "natural"},
             {"convention", b.caldeira_leggett ? "caldeira_leggett" : "direct"},
             {"counterterm", b.counterterm}});
    }
    j["methods"] = json::array();
    for (const auto m : cfg.methods) j["methods"].push_back(method_name(m));
    switch (cfg.initial.type) {
        case InitialConfig::Type::Gibbs:
            j["initial"] = {{"type", "gibbs"}, {"beta", cfg.initial.beta}};
            break;
        case InitialConfig::Type::Fock:
            j["initial"] = {{"type", "fock"}, {"n", cfg.initial.level}};
            break;
        case InitialConfig::Type::Superposition:
            j["initial"] = {{"type", "superposition"},
                            {"levels", {cfg.initial.level_a, cfg.initial.level_b}}};
            break;
        case InitialConfig::Type::File:
            j["initial"] = {{"type", "file"}, {"path", cfg.initial.path}};
            break;
    }
    j["time"] = {{"t_max", cfg.time.t_max},
                 {"h", cfg.time.step},
                 {"output_stride", cfg.time.output_stride},
                 {"time_dependent_rates", cfg.time.time_dependent_rates}};
    if (cfg.sweep) {
        j["sweep"] = {{"temperatures", cfg.sweep->temperatures},
                      {"couplings", cfg.sweep->couplings},
                      {"tau_r_factor", cfg.sweep->tau_r_factor}};
    }
    j["tolerances"] = {{"quad_abs", cfg.tolerances.quad_abs},
                       {"quad_rel", cfg.tolerances.quad_rel},
                       {"eps_deg_factor", cfg.tolerances.eps_deg_factor},
                       {"eps_den_factor", cfg.tolerances.eps_den_factor},
                       {"trace_tol", cfg.tolerances.trace_tol},
                       {"steady_residual", cfg.tolerances.steady_residual},
                       {"self_check_tol", cfg.tolerances.self_check_tol}};
    j["output"] = {{"dir", cfg.output.dir},
                   {"store_matrices", cfg.output.store_matrices},
                   {"min_eig", cfg.output.compute_min_eig}};
    return j.dump(2);
}

}  // namespace qme
