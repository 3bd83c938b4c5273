#pragma once

#include "nbeatsx/data/calendar.hpp"
#include "nbeatsx/training/search.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>

namespace nbeatsx::cli {

/// Flat run configuration. Every key is optional and typed; unknown keys are rejected.
///
/// Seeds: the model initialisation uses derive_seed(seed, 1), training uses
/// derive_seed(seed, 2) and random search uses derive_seed(seed, 3).
struct RunConfig {
    std::string data;
    std::string output_dir = ".";
    std::uint64_t seed = 1;
    bool calendar_features = false;

    // architecture
    std::string architecture = "interpretable";  // or "generic"
    bool include_exogenous = true;               // interpretable only
    std::string encoder = "tcn";                 // generic only
    bool encoder_first = false;
    std::size_t input_size = 168;
    std::size_t horizon = 24;
    std::size_t blocks = 1;
    std::size_t hidden_units = 256;
    std::size_t fcnn_layers = 2;
    std::string activation = "selu";
    std::size_t n_pol = 2;
    double n_harmonics = 1.0;
    std::size_t kernel_size = 2;
    std::size_t encoder_channels = 8;
    std::size_t encoder_layers = 0;
    bool coefficients_take_x = false;
    bool batch_norm = false;
    double dropout_projection = 0.0;
    double dropout_encoder = 0.0;
    std::string init = "glorot_norm";

    TrainConfig train;

    // spans, in days from the first row
    std::size_t train_days = 0;  // 0: all rows before the first forecast origin
    std::size_t validation_days = 0;
    std::string test_start;  // YYYY-MM-DD; empty: right after train_days
    std::size_t test_days = 1;

    std::string search_family = "generic";
};

namespace detail {

template <class T>
T typed(const nlohmann::json& v, const std::string& key) {
    try {
        if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean()) throw ConfigError("");
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!v.is_string()) throw ConfigError("");
        } else if constexpr (std::is_floating_point_v<T>) {
            if (!v.is_number()) throw ConfigError("");
        } else {
            if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) throw ConfigError("");
        }
        return v.get<T>();
    } catch (const std::exception&) {
        throw ConfigError("config: key '" + key + "' has the wrong type (" + std::string(v.type_name()) + ")");
    }
}

}  // namespace detail

inline RunConfig parse_run_config(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config: top level must be an object");
    RunConfig c;
    TrainConfig& t = c.train;
    std::string normalization(to_string(t.normalization)), early_stop_mode(to_string(t.early_stop_mode));
    using Setter = std::function<void(const nlohmann::json&, const std::string&)>;
    auto str = [](std::string& dst) -> Setter { return [&dst](const auto& v, const auto& k) { dst = detail::typed<std::string>(v, k); }; };
    auto uns = [](std::size_t& dst) -> Setter { return [&dst](const auto& v, const auto& k) { dst = detail::typed<std::size_t>(v, k); }; };
    auto u64 = [](std::uint64_t& dst) -> Setter { return [&dst](const auto& v, const auto& k) { dst = detail::typed<std::uint64_t>(v, k); }; };
    auto num = [](double& dst) -> Setter { return [&dst](const auto& v, const auto& k) { dst = detail::typed<double>(v, k); }; };
    auto flag = [](bool& dst) -> Setter { return [&dst](const auto& v, const auto& k) { dst = detail::typed<bool>(v, k); }; };
    const std::map<std::string, Setter> keys{
        {"data", str(c.data)},
        {"output_dir", str(c.output_dir)},
        {"seed", u64(c.seed)},
        {"calendar_features", flag(c.calendar_features)},
        {"architecture", str(c.architecture)},
        {"include_exogenous", flag(c.include_exogenous)},
        {"encoder", str(c.encoder)},
        {"encoder_first", flag(c.encoder_first)},
        {"input_size", uns(c.input_size)},
        {"horizon", uns(c.horizon)},
        {"blocks", uns(c.blocks)},
        {"hidden_units", uns(c.hidden_units)},
        {"fcnn_layers", uns(c.fcnn_layers)},
        {"activation", str(c.activation)},
        {"n_pol", uns(c.n_pol)},
        {"n_harmonics", num(c.n_harmonics)},
        {"kernel_size", uns(c.kernel_size)},
        {"encoder_channels", uns(c.encoder_channels)},
        {"encoder_layers", uns(c.encoder_layers)},
        {"coefficients_take_x", flag(c.coefficients_take_x)},
        {"batch_norm", flag(c.batch_norm)},
        {"dropout_projection", num(c.dropout_projection)},
        {"dropout_encoder", num(c.dropout_encoder)},
        {"init", str(c.init)},
        {"batch_size", uns(t.batch_size)},
        {"learning_rate", num(t.learning_rate)},
        {"lr_decay", num(t.lr_decay)},
        {"lr_decays", uns(t.lr_decays)},
        {"max_iterations", uns(t.max_iterations)},
        {"eval_every", uns(t.eval_every)},
        {"patience", uns(t.patience)},
        {"stride", uns(t.stride)},
        {"normalization", str(normalization)},
        {"lambda1", num(t.lambda1)},
        {"lambda2", num(t.lambda2)},
        {"early_stop_mode", str(early_stop_mode)},
        {"early_stop_weeks", uns(t.early_stop_weeks)},
        {"warm_start", flag(t.warm_start)},
        {"train_days", uns(c.train_days)},
        {"validation_days", uns(c.validation_days)},
        {"test_start", str(c.test_start)},
        {"test_days", uns(c.test_days)},
        {"search_family", str(c.search_family)},
    };
    for (const auto& [key, value] : j.items()) {
        const auto it = keys.find(key);
        if (it == keys.end()) throw ConfigError("config: unknown key '" + key + "'");
        it->second(value, key);
    }
    const auto norm = parse_normalization(normalization);
    if (!norm) throw ConfigError("config: unknown normalization '" + normalization + "'");
    t.normalization = *norm;
    const auto mode = parse_early_stop_mode(early_stop_mode);
    if (!mode) throw ConfigError("config: unknown early_stop_mode '" + early_stop_mode + "'");
    t.early_stop_mode = *mode;
    t.seed = derive_seed(c.seed, 2);
    validate(t);
    if (c.architecture != "interpretable" && c.architecture != "generic") {
        throw ConfigError("config: architecture must be 'interpretable' or 'generic'");
    }
    if (!parse_search_family(c.search_family)) throw ConfigError("config: search_family must be generic or interpretable");
    if (c.test_days == 0) throw ConfigError("config: test_days must be positive");
    if (!c.test_start.empty() && !parse_timestamp(c.test_start)) {
        throw ConfigError("config: test_start '" + c.test_start + "' is not a date");
    }
    return c;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config " + path.string() + ": " + e.what());
    }
    return parse_run_config(j);
}

/// Architecture for a frame with `n_covariates` columns besides the target.
inline ModelConfig model_config(const RunConfig& c, std::size_t n_covariates) {
    const auto act = parse_activation(c.activation);
    if (!act) throw ConfigError("config: unknown activation '" + c.activation + "'");
    const auto init = parse_init_strategy(c.init);
    if (!init) throw ConfigError("config: unknown init '" + c.init + "'");
    ModelConfig m;
    if (c.architecture == "interpretable") {
        m = interpretable_preset(c.input_size, c.horizon, n_covariates, c.hidden_units, *act,
                                 c.include_exogenous && n_covariates > 0);
    } else {
        const auto kind = parse_stack_kind(c.encoder);
        if (!kind || !is_encoder(*kind)) throw ConfigError("config: encoder must be tcn or wavenet");
        m = generic_preset(c.input_size, c.horizon, n_covariates, *kind, c.encoder_first, c.hidden_units, *act);
    }
    for (auto& s : m.stacks) {
        s.blocks = c.blocks;
        s.hidden_units.assign(c.fcnn_layers, c.hidden_units);
        s.n_pol = c.n_pol;
        s.n_harmonics = c.n_harmonics;
        if (is_encoder(s.kind)) {
            s.kernel_size = c.kernel_size;
            s.encoder_channels = c.encoder_channels;
            s.encoder_layers = c.encoder_layers;
        }
        s.coefficients_take_x = c.coefficients_take_x;
        s.batch_norm = c.batch_norm;
    }
    m.dropout_projection = c.dropout_projection;
    m.dropout_encoder = c.dropout_encoder;
    m.init = *init;
    m.seed = derive_seed(c.seed, 1);
    validate(m);
    return m;
}

/// Flat configuration reproducing a sampled search draw (for `train` / `recalibrate`).
inline nlohmann::json flat_config(const RunConfig& base, const SampledConfig& s) {
    const ModelConfig& m = s.model;
    const StackSpec& first = m.stacks.front();
    const bool generic = !m.interpretable();
    std::string encoder = "tcn";
    bool encoder_first = false;
    for (std::size_t i = 0; i < m.stacks.size(); ++i) {
        if (is_encoder(m.stacks[i].kind)) {
            encoder = to_string(m.stacks[i].kind);
            encoder_first = i == 0;
        }
    }
    std::size_t kernel = base.kernel_size, n_pol = base.n_pol;
    double n_hr = base.n_harmonics;
    for (const auto& st : m.stacks) {
        if (is_encoder(st.kind)) kernel = st.kernel_size;
        if (st.kind == StackKind::trend) n_pol = st.n_pol;
        if (st.kind == StackKind::seasonality) n_hr = st.n_harmonics;
    }
    nlohmann::json j{{"seed", m.seed},
                     {"calendar_features", base.calendar_features},
                     {"architecture", generic ? "generic" : "interpretable"},
                     {"include_exogenous", base.include_exogenous},
                     {"encoder", encoder},
                     {"encoder_first", encoder_first},
                     {"input_size", m.input_size},
                     {"horizon", m.horizon},
                     {"blocks", first.blocks},
                     {"hidden_units", first.hidden_units.front()},
                     {"fcnn_layers", first.hidden_units.size()},
                     {"activation", to_string(first.activation)},
                     {"n_pol", n_pol},
                     {"n_harmonics", n_hr},
                     {"kernel_size", kernel},
                     {"encoder_channels", first.encoder_channels},
                     {"encoder_layers", first.encoder_layers},
                     {"coefficients_take_x", first.coefficients_take_x},
                     {"batch_norm", first.batch_norm},
                     {"dropout_projection", m.dropout_projection},
                     {"dropout_encoder", m.dropout_encoder},
                     {"init", to_string(m.init)}};
    const nlohmann::json t = to_json(s.train);
    for (const auto& [k, v] : t.items())
        if (k != "seed") j[k] = v;
    return j;
}

}  // namespace nbeatsx::cli
