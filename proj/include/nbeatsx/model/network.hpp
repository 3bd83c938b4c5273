#pragma once

#include "nbeatsx/basis/basis.hpp"
#include "nbeatsx/model/config.hpp"
#include "nbeatsx/numerics/init.hpp"
#include "nbeatsx/numerics/ops.hpp"
#include "nbeatsx/numerics/random.hpp"
#include "nbeatsx/numerics/tape.hpp"

#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace nbeatsx {

/// A batch of windows: y_back [B, L] and covariates [B, L+H, N_x].
/// Covariates are ignored (and may be left default) when N_x == 0.
struct ModelInput {
    Tensor y_back;
    Tensor covariates;
};

inline std::string block_prefix(std::size_t stack, std::size_t block) {
    return "s" + std::to_string(stack) + ".b" + std::to_string(block) + ".";
}

/// Dense and convolution weights carry the L2 penalty; biases, PReLU slopes
/// and batch-norm affine terms do not.
inline bool is_penalized_weight(const std::string& name) {
    auto ends_with = [&](std::string_view suffix) {
        return name.size() >= suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0;
    };
    return (ends_with(".w") || ends_with(".wg")) && name.find(".bn.") == std::string::npos;
}

class Model {
public:
    explicit Model(ModelConfig cfg) : cfg_(std::move(cfg)) {
        validate(cfg_);
        build_bases();
        Rng rng(cfg_.seed);
        for (std::size_t s = 0; s < cfg_.stacks.size(); ++s) {
            const StackSpec& spec = cfg_.stacks[s];
            const auto [n_back, n_fore] = coefficient_sizes(spec, cfg_);
            for (std::size_t b = 0; b < spec.blocks; ++b) {
                const std::string p = block_prefix(s, b);
                std::size_t width = fcnn_input_width(spec);
                for (std::size_t j = 0; j < spec.hidden_units.size(); ++j) {
                    const std::string l = p + "fc" + std::to_string(j);
                    add_dense(l, width, spec.hidden_units[j], rng);
                    if (spec.batch_norm) {
                        params_.add(l + ".bn.gamma", Tensor({spec.hidden_units[j]}, 1.0));
                        params_.add(l + ".bn.beta", Tensor({spec.hidden_units[j]}));
                        buffers_.add(l + ".bn.mean", Tensor({spec.hidden_units[j]}));
                        buffers_.add(l + ".bn.var", Tensor({spec.hidden_units[j]}, 1.0));
                    }
                    if (spec.activation == Activation::prelu) params_.add(l + ".alpha", Tensor({1}, 0.25));
                    width = spec.hidden_units[j];
                }
                add_dense(p + "theta_back", width, n_back, rng);
                add_dense(p + "theta_fore", width, n_fore, rng);
                if (is_encoder(spec.kind)) {
                    std::size_t in = cfg_.n_covariates;
                    for (std::size_t j = 0; j < dilations_[s].size(); ++j) {
                        const std::string l = p + "enc" + std::to_string(j);
                        add_conv(l + ".w", l + ".b", spec.encoder_channels, in, spec.kernel_size, rng);
                        if (spec.kind == StackKind::wavenet) {
                            add_conv(l + ".wg", l + ".bg", spec.encoder_channels, in, spec.kernel_size, rng);
                        } else if (spec.activation == Activation::prelu) {
                            params_.add(l + ".alpha", Tensor({1}, 0.25));
                        }
                        in = spec.encoder_channels;
                    }
                }
            }
        }
    }

    /// Rebuilds a model around stored parameters; names and shapes must match the configuration.
    Model(ModelConfig cfg, ParameterSet params, ParameterSet buffers) : Model(std::move(cfg)) {
        check_layout(params_, params, "parameter");
        check_layout(buffers_, buffers, "buffer");
        params_ = std::move(params);
        buffers_ = std::move(buffers);
    }

    const ModelConfig& config() const noexcept { return cfg_; }
    const ParameterSet& parameters() const noexcept { return params_; }
    ParameterSet& parameters() noexcept { return params_; }
    const ParameterSet& buffers() const noexcept { return buffers_; }
    ParameterSet& buffers() noexcept { return buffers_; }
    std::size_t parameter_count() const { return params_.scalar_count(); }

    /// Transposed fixed bases (N_s x span) of a trend or seasonality stack.
    const Tensor& backcast_basis_t(std::size_t stack) const { return bases_.at(stack).first; }
    const Tensor& forecast_basis_t(std::size_t stack) const { return bases_.at(stack).second; }
    const std::vector<std::size_t>& dilations(std::size_t stack) const { return dilations_.at(stack); }

    std::size_t fcnn_input_width(const StackSpec& spec) const {
        return cfg_.input_size +
               (spec.coefficients_take_x ? (cfg_.input_size + cfg_.horizon) * cfg_.n_covariates : 0);
    }

private:
    void build_bases() {
        const std::size_t L = cfg_.input_size, H = cfg_.horizon;
        const auto gb = basis::time_grid(basis::Span::backcast, L, H);
        const auto gf = basis::time_grid(basis::Span::forecast, L, H);
        for (const StackSpec& s : cfg_.stacks) {
            if (s.kind == StackKind::trend) {
                bases_.emplace_back(transpose(basis::trend_basis(gb, s.n_pol).matrix),
                                    transpose(basis::trend_basis(gf, s.n_pol).matrix));
            } else if (s.kind == StackKind::seasonality) {
                bases_.emplace_back(transpose(basis::harmonic_basis(gb, H, s.n_harmonics).matrix),
                                    transpose(basis::harmonic_basis(gf, H, s.n_harmonics).matrix));
            } else {
                bases_.emplace_back();
            }
            dilations_.push_back(is_encoder(s.kind) ? dilation_schedule(s.kernel_size, L + H, s.encoder_layers)
                                                    : std::vector<std::size_t>{});
        }
    }

    void add_dense(const std::string& name, std::size_t in, std::size_t out, Rng& rng) {
        params_.add(name + ".w", init_weights(cfg_.init, {in, out}, rng));
        params_.add(name + ".b", Tensor({out}));
    }

    void add_conv(const std::string& w, const std::string& b, std::size_t out, std::size_t in, std::size_t k,
                  Rng& rng) {
        if (cfg_.init == InitStrategy::orthogonal) {
            params_.add(w, init_weights(cfg_.init, {out, in * k}, rng).reshaped({out, in, k}));
        } else {
            params_.add(w, init_weights(cfg_.init, {out, in, k}, rng));
        }
        params_.add(b, Tensor({out}));
    }

    static void check_layout(const ParameterSet& expected, const ParameterSet& given, const char* what) {
        if (expected.size() != given.size()) {
            throw ConfigError(std::string("model: expected ") + std::to_string(expected.size()) + " " + what +
                              "s, got " + std::to_string(given.size()));
        }
        for (std::size_t i = 0; i < expected.size(); ++i) {
            if (expected.name(i) != given.name(i) || expected[i].shape() != given[i].shape()) {
                throw ConfigError(std::string("model: ") + what + " '" + given.name(i) + "' " +
                                  shape_to_string(given[i].shape()) + " does not match '" + expected.name(i) +
                                  "' " + shape_to_string(expected[i].shape()));
            }
        }
    }

    ModelConfig cfg_;
    ParameterSet params_;
    ParameterSet buffers_;
    std::vector<std::pair<Tensor, Tensor>> bases_;
    std::vector<std::vector<std::size_t>> dilations_;
};

/// Everything a forward pass exposes for losses, decomposition and tests.
struct ForwardPass {
    Var forecast;                        // [B, H]
    std::vector<Var> stack_inputs;       // residual entering each stack, [B, L]
    std::vector<Var> stack_backcasts;    // summed backcast of each stack, [B, L]
    std::vector<Var> block_backcasts;    // every block in network order
    std::vector<Var> stack_forecasts;    // [B, H]
    Var residual;                        // backcast residual after the last stack
    std::vector<Var> coefficients;       // theta_back and theta_fore of every block
    std::vector<Var> penalized_weights;  // bound weights subject to the L2 term
    std::vector<std::pair<std::string, ops::BatchMoments>> batch_moments;
};

struct BlockOutput {
    Var backcast;
    Var forecast;
    Var theta_back;
    Var theta_fore;
};

struct EncoderLayer {
    Var w, b;
    std::optional<Var> w_gate, b_gate;  // wavenet
    std::optional<Var> alpha;           // prelu
};

inline Var apply_activation(Var x, Activation act, std::optional<Var> alpha = std::nullopt) {
    switch (act) {
        case Activation::softplus: return ops::softplus(x);
        case Activation::selu: return ops::selu(x);
        case Activation::prelu:
            if (!alpha) throw ConfigError("prelu activation needs a slope parameter");
            return ops::prelu(x, *alpha);
        case Activation::sigmoid: return ops::sigmoid(x);
        case Activation::relu: return ops::relu(x);
        case Activation::tanh: return ops::tanh(x);
        case Activation::lrelu: return ops::lrelu(x);
    }
    throw ConfigError("unknown activation");
}

/// Causal dilated convolution stack over x[B, N_x, T]; returns features [B, N_c, T].
/// Layers after the first add a residual connection; dropout sits between layers.
inline Var encoder_features(Var x, const std::vector<EncoderLayer>& layers, StackKind kind, Activation act,
                            const std::vector<std::size_t>& dilations, double dropout_p = 0.0,
                            std::uint64_t seed = 0) {
    if (!is_encoder(kind)) throw ConfigError("encoder: kind must be tcn or wavenet");
    if (layers.size() != dilations.size() || layers.empty()) {
        throw ConfigError("encoder: " + std::to_string(layers.size()) + " layers for " +
                          std::to_string(dilations.size()) + " dilations");
    }
    Var h = x;
    for (std::size_t j = 0; j < layers.size(); ++j) {
        const EncoderLayer& l = layers[j];
        Var conv = ops::causal_dilated_conv1d(h, l.w, l.b, dilations[j]);
        Var out;
        if (kind == StackKind::wavenet) {
            if (!l.w_gate || !l.b_gate) throw ConfigError("wavenet layer needs gate weights");
            out = ops::gated_unit(conv, ops::causal_dilated_conv1d(h, *l.w_gate, *l.b_gate, dilations[j]));
        } else {
            out = apply_activation(conv, act, l.alpha);
        }
        h = j == 0 ? out : ops::add(out, h);
        if (j + 1 < layers.size()) h = ops::dropout(h, dropout_p, derive_seed(seed, j));
    }
    return h;
}

/// Context vector C [B, N_c]: encoder features at the last time step.
inline Var encoder_context(Var x, const std::vector<EncoderLayer>& layers, StackKind kind, Activation act,
                           const std::vector<std::size_t>& dilations, double dropout_p = 0.0,
                           std::uint64_t seed = 0) {
    Var f = encoder_features(x, layers, kind, act, dilations, dropout_p, seed);
    const std::size_t T = f.shape()[2];
    const std::size_t B = f.shape()[0], C = f.shape()[1];
    return ops::reshape(ops::slice(f, 2, T - 1, T), {B, C});
}

namespace detail {

/// [B, T, N] -> [B, N, T]
inline Tensor channels_first(const Tensor& x) {
    const std::size_t B = x.dim(0), T = x.dim(1), N = x.dim(2);
    Tensor out({B, N, T});
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t t = 0; t < T; ++t)
            for (std::size_t n = 0; n < N; ++n) out[(b * N + n) * T + t] = x[(b * T + t) * N + n];
    return out;
}

/// sum_c F[b, c, t] * theta[b, c]  for features F[B, C, T] -> [B, T]
inline Var weighted_channels(Var features, Var theta) {
    const std::size_t B = features.shape()[0], C = features.shape()[1];
    return ops::sum(ops::hadamard(features, ops::reshape(theta, {B, C, 1})), 1);
}

class Forward {
public:
    Forward(Tape& tape, const Model& model, const ParameterSet& params, const ModelInput& input,
            std::uint64_t dropout_seed)
        : tape_(tape), model_(model), cfg_(model.config()), dropout_seed_(dropout_seed) {
        for (std::size_t i = 0; i < params.size(); ++i) {
            bound_.emplace(params.name(i), tape.parameter(params.name(i), params[i]));
            names_.push_back(params.name(i));
        }
        const std::size_t L = cfg_.input_size, H = cfg_.horizon;
        const Tensor& y = input.y_back;
        if (y.rank() != 2 || y.dim(1) != L) {
            throw ShapeError("network_forward: y_back must be [B," + std::to_string(L) + "], got " +
                             shape_to_string(y.shape()));
        }
        batch_ = y.dim(0);
        if (!y.all_finite()) throw DataError("network_forward: y_back contains non-finite values");
        y_ = tape.constant(y);
        if (cfg_.n_covariates > 0) {
            const Tensor& x = input.covariates;
            const Shape want{batch_, L + H, cfg_.n_covariates};
            if (x.shape() != want) {
                throw ShapeError("network_forward: covariates must be " + shape_to_string(want) + ", got " +
                                 shape_to_string(x.shape()));
            }
            if (!x.all_finite()) throw DataError("network_forward: covariates contain non-finite values");
            x_ = tape.constant(x);
            x_back_ = ops::slice(*x_, 1, 0, L);
            x_fore_ = ops::slice(*x_, 1, L, L + H);
            x_flat_ = tape.constant(x.reshaped({batch_, (L + H) * cfg_.n_covariates}));
            x_channels_ = tape.constant(channels_first(x));
        }
    }

    Var param(const std::string& name) const {
        auto it = bound_.find(name);
        if (it == bound_.end()) throw ConfigError("network_forward: missing parameter '" + name + "'");
        return it->second;
    }

    BlockOutput block(std::size_t s, std::size_t b, Var residual, ForwardPass& pass) {
        const StackSpec& spec = cfg_.stacks[s];
        const std::string p = block_prefix(s, b);
        const std::uint64_t block_seed = derive_seed(dropout_seed_, 1000 * s + b);
        Var h = spec.coefficients_take_x ? ops::concat({residual, *x_flat_}, 1) : residual;
        for (std::size_t j = 0; j < spec.hidden_units.size(); ++j) {
            const std::string l = p + "fc" + std::to_string(j);
            h = ops::affine(h, param(l + ".w"), param(l + ".b"));
            std::optional<Var> alpha;
            if (spec.activation == Activation::prelu) alpha = param(l + ".alpha");
            h = apply_activation(h, spec.activation, alpha);
            if (spec.batch_norm) {
                ops::BatchMoments moments;
                h = ops::batch_norm(h, param(l + ".bn.gamma"), param(l + ".bn.beta"),
                                    model_.buffers().get(l + ".bn.mean"), model_.buffers().get(l + ".bn.var"),
                                    &moments);
                if (tape_.training()) pass.batch_moments.emplace_back(l + ".bn", std::move(moments));
            }
        }
        h = ops::dropout(h, cfg_.dropout_projection, derive_seed(block_seed, 1));
        BlockOutput out;
        out.theta_back = ops::affine(h, param(p + "theta_back.w"), param(p + "theta_back.b"));
        out.theta_fore = ops::affine(h, param(p + "theta_fore.w"), param(p + "theta_fore.b"));
        switch (spec.kind) {
            case StackKind::trend:
            case StackKind::seasonality:
                out.backcast = ops::matmul(out.theta_back, basis_var(s, true));
                out.forecast = ops::matmul(out.theta_fore, basis_var(s, false));
                break;
            case StackKind::identity:
                out.backcast = out.theta_back;
                out.forecast = out.theta_fore;
                break;
            case StackKind::exogenous: {
                const Shape ts{batch_, 1, cfg_.n_covariates};
                out.backcast = ops::sum(ops::hadamard(*x_back_, ops::reshape(out.theta_back, ts)), 2);
                out.forecast = ops::sum(ops::hadamard(*x_fore_, ops::reshape(out.theta_fore, ts)), 2);
                break;
            }
            case StackKind::tcn:
            case StackKind::wavenet: {
                std::vector<EncoderLayer> layers;
                for (std::size_t j = 0; j < model_.dilations(s).size(); ++j) {
                    const std::string l = p + "enc" + std::to_string(j);
                    EncoderLayer layer{param(l + ".w"), param(l + ".b"), {}, {}, {}};
                    if (spec.kind == StackKind::wavenet) {
                        layer.w_gate = param(l + ".wg");
                        layer.b_gate = param(l + ".bg");
                    } else if (spec.activation == Activation::prelu) {
                        layer.alpha = param(l + ".alpha");
                    }
                    layers.push_back(layer);
                }
                Var f = encoder_features(*x_channels_, layers, spec.kind, spec.activation, model_.dilations(s),
                                         cfg_.dropout_encoder, derive_seed(block_seed, 2));
                const std::size_t L = cfg_.input_size, T = L + cfg_.horizon;
                out.backcast = weighted_channels(ops::slice(f, 2, 0, L), out.theta_back);
                out.forecast = weighted_channels(ops::slice(f, 2, L, T), out.theta_fore);
                break;
            }
        }
        if (!out.backcast.value().all_finite() || !out.forecast.value().all_finite()) {
            throw TrainingError("block " + std::to_string(b) + " of stack " + std::to_string(s) + " (" +
                                std::string(to_string(spec.kind)) + ") produced non-finite activations");
        }
        return out;
    }

    ForwardPass run() {
        ForwardPass pass;
        for (const auto& name : names_)
            if (is_penalized_weight(name)) pass.penalized_weights.push_back(bound_.at(name));
        Var residual = y_;
        for (std::size_t s = 0; s < cfg_.stacks.size(); ++s) {
            // Block b sees the stack input minus the running sum of earlier backcasts,
            // so the stack output is exactly input - sum_b backcast_b.
            const Var stack_in = residual;
            pass.stack_inputs.push_back(stack_in);
            std::optional<Var> back_sum, fore_sum;
            for (std::size_t b = 0; b < cfg_.stacks[s].blocks; ++b) {
                BlockOutput o = block(s, b, residual, pass);
                back_sum = back_sum ? ops::add(*back_sum, o.backcast) : o.backcast;
                residual = ops::sub(stack_in, *back_sum);
                pass.block_backcasts.push_back(o.backcast);
                fore_sum = fore_sum ? ops::add(*fore_sum, o.forecast) : o.forecast;
                pass.coefficients.push_back(o.theta_back);
                pass.coefficients.push_back(o.theta_fore);
            }
            pass.stack_backcasts.push_back(*back_sum);
            pass.stack_forecasts.push_back(*fore_sum);
            pass.forecast = s == 0 ? *fore_sum : ops::add(pass.forecast, *fore_sum);
        }
        pass.residual = residual;
        return pass;
    }

private:
    Var basis_var(std::size_t s, bool backcast) {
        auto& slot = backcast ? basis_back_[s] : basis_fore_[s];
        if (!slot) slot = tape_.constant(backcast ? model_.backcast_basis_t(s) : model_.forecast_basis_t(s));
        return *slot;
    }

    Tape& tape_;
    const Model& model_;
    const ModelConfig& cfg_;
    std::uint64_t dropout_seed_;
    std::unordered_map<std::string, Var> bound_;
    std::vector<std::string> names_;
    std::size_t batch_ = 0;
    Var y_;
    std::optional<Var> x_, x_back_, x_fore_, x_flat_, x_channels_;
    std::unordered_map<std::size_t, std::optional<Var>> basis_back_, basis_fore_;
};

}  // namespace detail

/// Full forward pass with explicit parameter values (bound on the tape in order).
inline ForwardPass network_forward(Tape& tape, const Model& model, const ParameterSet& params,
                                   const ModelInput& input, std::uint64_t dropout_seed = 0) {
    detail::Forward fwd(tape, model, params, input, dropout_seed);
    return fwd.run();
}

inline ForwardPass network_forward(Tape& tape, const Model& model, const ModelInput& input,
                                   std::uint64_t dropout_seed = 0) {
    return network_forward(tape, model, model.parameters(), input, dropout_seed);
}

/// Inference-mode prediction: forecast [B, H] and per-stack components.
struct Prediction {
    Tensor forecast;
    std::vector<Tensor> components;
};

inline Prediction predict(const Model& model, const ModelInput& input) {
    Tape tape(false);
    ForwardPass pass = network_forward(tape, model, input);
    Prediction out{pass.forecast.value(), {}};
    for (Var c : pass.stack_forecasts) out.components.push_back(c.value());
    return out;
}

/// Updates batch-norm running statistics from a training pass (momentum 0.1).
inline void update_batch_norm_buffers(Model& model, const ForwardPass& pass, double momentum = 0.1) {
    for (const auto& [layer, m] : pass.batch_moments) {
        Tensor& mean = model.buffers().get(layer + ".mean");
        Tensor& var = model.buffers().get(layer + ".var");
        for (std::size_t i = 0; i < mean.size(); ++i) {
            mean[i] = (1.0 - momentum) * mean[i] + momentum * m.mean[i];
            var[i] = (1.0 - momentum) * var[i] + momentum * m.var[i];
        }
    }
}

}  // namespace nbeatsx
