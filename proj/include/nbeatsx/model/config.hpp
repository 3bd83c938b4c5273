#pragma once

#include "nbeatsx/basis/basis.hpp"
#include "nbeatsx/error.hpp"
#include "nbeatsx/numerics/init.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nbeatsx {

enum class StackKind { trend, seasonality, exogenous, identity, tcn, wavenet };

enum class Activation { softplus, selu, prelu, sigmoid, relu, tanh, lrelu };

inline constexpr Activation kAllActivations[] = {Activation::softplus, Activation::selu, Activation::prelu,
                                                 Activation::sigmoid,  Activation::relu, Activation::tanh,
                                                 Activation::lrelu};

inline std::string_view to_string(StackKind k) {
    switch (k) {
        case StackKind::trend: return "trend";
        case StackKind::seasonality: return "seasonality";
        case StackKind::exogenous: return "exogenous";
        case StackKind::identity: return "identity";
        case StackKind::tcn: return "tcn";
        case StackKind::wavenet: return "wavenet";
    }
    return "?";
}

inline std::optional<StackKind> parse_stack_kind(std::string_view s) {
    for (auto k : {StackKind::trend, StackKind::seasonality, StackKind::exogenous, StackKind::identity,
                   StackKind::tcn, StackKind::wavenet}) {
        if (to_string(k) == s) return k;
    }
    return std::nullopt;
}

inline std::string_view to_string(Activation a) {
    switch (a) {
        case Activation::softplus: return "softplus";
        case Activation::selu: return "selu";
        case Activation::prelu: return "prelu";
        case Activation::sigmoid: return "sigmoid";
        case Activation::relu: return "relu";
        case Activation::tanh: return "tanh";
        case Activation::lrelu: return "lrelu";
    }
    return "?";
}

inline std::optional<Activation> parse_activation(std::string_view s) {
    for (auto a : kAllActivations) {
        if (to_string(a) == s) return a;
    }
    return std::nullopt;
}

inline bool is_encoder(StackKind k) { return k == StackKind::tcn || k == StackKind::wavenet; }
inline bool uses_covariates(StackKind k) { return k == StackKind::exogenous || is_encoder(k); }
inline bool is_interpretable(StackKind k) {
    return k == StackKind::trend || k == StackKind::seasonality || k == StackKind::exogenous;
}

/// One stack: B blocks sharing a basis kind.
struct StackSpec {
    StackKind kind = StackKind::identity;
    std::size_t blocks = 1;
    std::vector<std::size_t> hidden_units{256, 256};  // one entry per FCNN layer
    Activation activation = Activation::selu;
    std::size_t n_pol = 2;           // trend only
    double n_harmonics = 1.0;        // seasonality only
    std::size_t kernel_size = 2;     // tcn / wavenet
    std::size_t encoder_channels = 8;
    std::size_t encoder_layers = 0;  // 0: smallest depth whose receptive field covers L+H
    bool coefficients_take_x = false;
    bool batch_norm = false;

    friend bool operator==(const StackSpec&, const StackSpec&) = default;
};

struct ModelConfig {
    std::size_t input_size = 168;  // L
    std::size_t horizon = 24;      // H
    std::size_t n_covariates = 0;  // N_x
    std::vector<StackSpec> stacks;
    double dropout_projection = 0.0;
    double dropout_encoder = 0.0;
    InitStrategy init = InitStrategy::glorot_norm;
    std::uint64_t seed = 1;

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;

    bool interpretable() const {
        if (stacks.empty()) return false;
        for (const auto& s : stacks)
            if (!is_interpretable(s.kind)) return false;
        return true;
    }
};

/// Receptive field of a causal stack with the given kernel and dilations.
inline std::size_t receptive_field(std::size_t kernel, const std::vector<std::size_t>& dilations) {
    std::size_t rf = 1;
    for (std::size_t d : dilations) rf += (kernel - 1) * d;
    return rf;
}

/// Dilations 1, 2, 4, ... of an encoder over a window of `span` steps.
/// With `layers == 0` the depth grows until the receptive field covers the span.
inline std::vector<std::size_t> dilation_schedule(std::size_t kernel, std::size_t span, std::size_t layers) {
    std::vector<std::size_t> d;
    if (layers == 0) {
        while (receptive_field(kernel, d) < span) d.push_back(std::size_t{1} << d.size());
        if (d.empty()) d.push_back(1);
        return d;
    }
    for (std::size_t i = 0; i < layers; ++i) d.push_back(std::size_t{1} << i);
    if (receptive_field(kernel, d) < span) {
        throw ConfigError("encoder: " + std::to_string(layers) + " layers of kernel " + std::to_string(kernel) +
                          " reach " + std::to_string(receptive_field(kernel, d)) + " steps, window needs " +
                          std::to_string(span));
    }
    return d;
}

/// Number of basis coefficients of a stack's (backcast, forecast) heads.
inline std::pair<std::size_t, std::size_t> coefficient_sizes(const StackSpec& s, const ModelConfig& cfg) {
    switch (s.kind) {
        case StackKind::trend: return {s.n_pol + 1, s.n_pol + 1};
        case StackKind::seasonality: {
            const std::size_t n = basis::harmonic_columns(cfg.horizon);
            return {n, n};
        }
        case StackKind::exogenous: return {cfg.n_covariates, cfg.n_covariates};
        case StackKind::identity: return {cfg.input_size, cfg.horizon};
        case StackKind::tcn:
        case StackKind::wavenet: return {s.encoder_channels, s.encoder_channels};
    }
    return {0, 0};
}

/// Validates a configuration, throwing ConfigError on invalid combinations.
/// Returns advisory warnings (e.g. L < H).
inline std::vector<std::string> validate(const ModelConfig& cfg) {
    std::vector<std::string> warnings;
    if (cfg.input_size == 0 || cfg.horizon == 0) throw ConfigError("model: input_size and horizon must be positive");
    if (cfg.input_size < cfg.horizon) warnings.push_back("input_size (L) is shorter than the horizon (H)");
    if (cfg.stacks.empty()) throw ConfigError("model: at least one stack is required");
    if (!(cfg.dropout_projection >= 0.0 && cfg.dropout_projection < 1.0) ||
        !(cfg.dropout_encoder >= 0.0 && cfg.dropout_encoder < 1.0)) {
        throw ConfigError("model: dropout probabilities must lie in [0,1)");
    }
    for (std::size_t i = 0; i < cfg.stacks.size(); ++i) {
        const StackSpec& s = cfg.stacks[i];
        const std::string where = "stack " + std::to_string(i) + " (" + std::string(to_string(s.kind)) + "): ";
        if (s.blocks == 0) throw ConfigError(where + "needs at least one block");
        if (s.hidden_units.empty()) throw ConfigError(where + "needs at least one FCNN layer");
        for (std::size_t h : s.hidden_units)
            if (h == 0) throw ConfigError(where + "hidden units must be positive");
        if (s.kind == StackKind::trend && s.n_pol > 10) throw ConfigError(where + "polynomial degree above 10");
        if (s.kind == StackKind::seasonality) {
            if (cfg.horizon < 2) throw ConfigError(where + "harmonic basis needs H >= 2");
            if (!(s.n_harmonics > 0.0)) throw ConfigError(where + "N_hr must be positive");
        }
        if (uses_covariates(s.kind) && cfg.n_covariates == 0) {
            throw ConfigError(where + "requires exogenous covariates but n_covariates is 0");
        }
        if (s.coefficients_take_x && cfg.n_covariates == 0) {
            throw ConfigError(where + "coefficients_take_x set without covariates");
        }
        if (is_encoder(s.kind)) {
            if (s.kernel_size < 2 || s.kernel_size > 10) throw ConfigError(where + "kernel size must lie in [2,10]");
            if (s.encoder_channels == 0) throw ConfigError(where + "encoder needs at least one channel");
            dilation_schedule(s.kernel_size, cfg.input_size + cfg.horizon, s.encoder_layers);
        }
    }
    return warnings;
}

/// Blocks per stack of the interpretable presets, e.g. {1, 1, 1}.
inline StackSpec make_stack(StackKind kind, std::size_t hidden, Activation act, std::size_t blocks = 1) {
    StackSpec s;
    s.kind = kind;
    s.blocks = blocks;
    s.hidden_units = {hidden, hidden};
    s.activation = act;
    return s;
}

/// NBEATSx-I: trend, seasonality and exogenous stacks.
inline ModelConfig interpretable_preset(std::size_t input_size, std::size_t horizon, std::size_t n_covariates,
                                        std::size_t hidden = 256, Activation act = Activation::selu,
                                        bool with_exogenous = true) {
    ModelConfig cfg;
    cfg.input_size = input_size;
    cfg.horizon = horizon;
    cfg.n_covariates = n_covariates;
    cfg.stacks.push_back(make_stack(StackKind::trend, hidden, act));
    cfg.stacks.push_back(make_stack(StackKind::seasonality, hidden, act));
    if (with_exogenous) cfg.stacks.push_back(make_stack(StackKind::exogenous, hidden, act));
    return cfg;
}

/// NBEATSx-G: an identity stack and an encoder stack, in the given order.
inline ModelConfig generic_preset(std::size_t input_size, std::size_t horizon, std::size_t n_covariates,
                                  StackKind encoder = StackKind::tcn, bool encoder_first = false,
                                  std::size_t hidden = 256, Activation act = Activation::selu) {
    if (!is_encoder(encoder)) throw ConfigError("generic preset: encoder must be tcn or wavenet");
    ModelConfig cfg;
    cfg.input_size = input_size;
    cfg.horizon = horizon;
    cfg.n_covariates = n_covariates;
    StackSpec ident = make_stack(StackKind::identity, hidden, act);
    StackSpec enc = make_stack(encoder, hidden, act);
    cfg.stacks = encoder_first ? std::vector<StackSpec>{enc, ident} : std::vector<StackSpec>{ident, enc};
    return cfg;
}

// JSON (structured text) form used in model containers and run configs.

inline nlohmann::json to_json(const StackSpec& s) {
    return {{"kind", to_string(s.kind)},
            {"blocks", s.blocks},
            {"hidden_units", s.hidden_units},
            {"activation", to_string(s.activation)},
            {"n_pol", s.n_pol},
            {"n_harmonics", s.n_harmonics},
            {"kernel_size", s.kernel_size},
            {"encoder_channels", s.encoder_channels},
            {"encoder_layers", s.encoder_layers},
            {"coefficients_take_x", s.coefficients_take_x},
            {"batch_norm", s.batch_norm}};
}

inline nlohmann::json to_json(const ModelConfig& c) {
    nlohmann::json stacks = nlohmann::json::array();
    for (const auto& s : c.stacks) stacks.push_back(to_json(s));
    return {{"input_size", c.input_size},
            {"horizon", c.horizon},
            {"n_covariates", c.n_covariates},
            {"stacks", stacks},
            {"dropout_projection", c.dropout_projection},
            {"dropout_encoder", c.dropout_encoder},
            {"init", to_string(c.init)},
            {"seed", c.seed}};
}

inline StackSpec stack_spec_from_json(const nlohmann::json& j) {
    StackSpec s;
    const auto kind = parse_stack_kind(j.at("kind").get<std::string>());
    const auto act = parse_activation(j.at("activation").get<std::string>());
    if (!kind) throw ConfigError("unknown stack kind '" + j.at("kind").get<std::string>() + "'");
    if (!act) throw ConfigError("unknown activation '" + j.at("activation").get<std::string>() + "'");
    s.kind = *kind;
    s.activation = *act;
    s.blocks = j.at("blocks").get<std::size_t>();
    s.hidden_units = j.at("hidden_units").get<std::vector<std::size_t>>();
    s.n_pol = j.at("n_pol").get<std::size_t>();
    s.n_harmonics = j.at("n_harmonics").get<double>();
    s.kernel_size = j.at("kernel_size").get<std::size_t>();
    s.encoder_channels = j.at("encoder_channels").get<std::size_t>();
    s.encoder_layers = j.at("encoder_layers").get<std::size_t>();
    s.coefficients_take_x = j.at("coefficients_take_x").get<bool>();
    s.batch_norm = j.at("batch_norm").get<bool>();
    return s;
}

inline ModelConfig model_config_from_json(const nlohmann::json& j) {
    ModelConfig c;
    c.input_size = j.at("input_size").get<std::size_t>();
    c.horizon = j.at("horizon").get<std::size_t>();
    c.n_covariates = j.at("n_covariates").get<std::size_t>();
    for (const auto& s : j.at("stacks")) c.stacks.push_back(stack_spec_from_json(s));
    c.dropout_projection = j.at("dropout_projection").get<double>();
    c.dropout_encoder = j.at("dropout_encoder").get<double>();
    const auto init = parse_init_strategy(j.at("init").get<std::string>());
    if (!init) throw ConfigError("unknown init strategy '" + j.at("init").get<std::string>() + "'");
    c.init = *init;
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

}  // namespace nbeatsx
