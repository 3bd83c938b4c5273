#pragma once

#include "nbeatsx/model/network.hpp"
#include "nbeatsx/numerics/adam.hpp"
#include "nbeatsx/numerics/random.hpp"
#include "nbeatsx/training/config.hpp"
#include "nbeatsx/training/loss.hpp"
#include "nbeatsx/training/windows.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>

namespace nbeatsx {

/// Patience-based stopping that remembers the best parameters seen.
class EarlyStopping {
public:
    explicit EarlyStopping(std::size_t patience) : patience_(patience) {}

    /// Records an evaluation; returns true once `patience` evaluations in a
    /// row failed to improve strictly on the best loss.
    bool update(double loss, const ParameterSet& params, const ParameterSet& buffers, std::size_t iteration) {
        ++evaluations_;
        if (loss < best_loss_) {
            best_loss_ = loss;
            best_params_ = params;
            best_buffers_ = buffers;
            best_iteration_ = iteration;
            best_evaluation_ = evaluations_;
            stale_ = 0;
        } else {
            ++stale_;
        }
        return stale_ >= patience_;
    }

    bool has_best() const noexcept { return best_evaluation_ > 0; }
    double best_loss() const noexcept { return best_loss_; }
    std::size_t best_iteration() const noexcept { return best_iteration_; }
    std::size_t best_evaluation() const noexcept { return best_evaluation_; }  // 1-based
    std::size_t evaluations() const noexcept { return evaluations_; }
    const ParameterSet& best_parameters() const noexcept { return best_params_; }
    const ParameterSet& best_buffers() const noexcept { return best_buffers_; }

private:
    std::size_t patience_;
    std::size_t evaluations_ = 0;
    std::size_t stale_ = 0;
    double best_loss_ = std::numeric_limits<double>::infinity();
    std::size_t best_iteration_ = 0;
    std::size_t best_evaluation_ = 0;
    ParameterSet best_params_;
    ParameterSet best_buffers_;
};

/// Loss curves sampled at evaluation checkpoints.
struct TrainingCurves {
    std::vector<std::size_t> iteration;
    std::vector<double> train_mae;       // mean batch MAE since the previous checkpoint
    std::vector<double> early_stop_mae;

    void write_csv(std::ostream& os) const {
        os << "iteration,train_mae,earlystop_mae\n";
        for (std::size_t i = 0; i < iteration.size(); ++i) {
            os << iteration[i] << ',' << format_number(train_mae[i]) << ',' << format_number(early_stop_mae[i]) << '\n';
        }
    }

    void write_csv(const std::filesystem::path& path) const {
        std::ofstream os(path);
        if (!os) throw Error("cannot write " + path.string());
        write_csv(os);
    }
};

struct TrainResult {
    Model model;  // best-on-early-stop parameters
    TrainingCurves curves;
    std::size_t iterations_run = 0;
    std::size_t best_iteration = 0;
    bool stopped_early = false;
};

/// Learning rate after `iteration` completed steps: halved (by `lr_decay`)
/// at each of `lr_decays` evenly spaced milestones of max_iterations.
inline double learning_rate_at(const TrainConfig& cfg, std::size_t iteration) {
    double lr = cfg.learning_rate;
    for (std::size_t k = 1; k <= cfg.lr_decays; ++k) {
        if (iteration >= cfg.max_iterations * k / (cfg.lr_decays + 1)) lr *= cfg.lr_decay;
    }
    return lr;
}

/// Mean absolute error of the model over a window set (inference mode, normalised units).
inline double evaluate_mae(const Model& model, const WindowSet& windows, std::size_t chunk = 512) {
    if (windows.empty()) throw DataError("evaluate: no windows");
    double total = 0.0;
    std::size_t count = 0;
    const auto idx = windows.all();
    for (std::size_t b = 0; b < idx.size(); b += chunk) {
        const std::span<const std::size_t> part(idx.data() + b, std::min(chunk, idx.size() - b));
        const Prediction p = predict(model, windows.input(part));
        const Tensor y = windows.target(part);
        for (std::size_t i = 0; i < y.size(); ++i) total += std::abs(p.forecast[i] - y[i]);
        count += y.size();
    }
    return total / static_cast<double>(count);
}

/// Minibatch ADAM with early stopping on `early_stop`.
inline TrainResult train(Model model, const WindowSet& fit, const WindowSet& early_stop, const TrainConfig& cfg) {
    validate(cfg);
    if (fit.empty()) throw DataError("train: no training windows");
    if (early_stop.empty()) throw DataError("train: no early-stop windows");

    Rng shuffle_rng(derive_seed(cfg.seed, 11));
    std::vector<std::size_t> order = fit.all();
    std::size_t cursor = order.size();
    const std::size_t batch = std::min(cfg.batch_size, order.size());

    AdamState adam = AdamState::for_parameters(model.parameters());
    EarlyStopping stopper(cfg.patience);
    TrainResult result{model, {}, 0, 0, false};
    double running = 0.0;
    std::size_t running_n = 0;

    for (std::size_t it = 0; it < cfg.max_iterations; ++it) {
        if (cursor + batch > order.size()) {
            std::shuffle(order.begin(), order.end(), shuffle_rng);
            cursor = 0;
        }
        const std::span<const std::size_t> ids(order.data() + cursor, batch);
        cursor += batch;

        const double lr = learning_rate_at(cfg, it);
        Tape tape(true);
        const ForwardPass pass = network_forward(tape, model, fit.input(ids), derive_seed(cfg.seed, 1'000'000 + it));
        const LossParts loss = training_loss(pass.forecast, tape.constant(fit.target(ids)), pass.coefficients,
                                             pass.penalized_weights, cfg.lambda1, cfg.lambda2);
        const double value = loss.total.value().item();
        if (!std::isfinite(value)) {
            throw TrainingError("train: non-finite loss at iteration " + std::to_string(it + 1) +
                                " (lr " + format_number(lr) + ", data term " + format_number(loss.data) + ")");
        }
        const ParameterSet grads = tape.backward(loss.total);
        adam_step(model.parameters(), grads, adam, AdamConfig{lr});
        update_batch_norm_buffers(model, pass);
        running += loss.data;
        ++running_n;
        result.iterations_run = it + 1;

        if ((it + 1) % cfg.eval_every == 0 || it + 1 == cfg.max_iterations) {
            const double es = evaluate_mae(model, early_stop);
            result.curves.iteration.push_back(it + 1);
            result.curves.train_mae.push_back(running / static_cast<double>(running_n));
            result.curves.early_stop_mae.push_back(es);
            running = 0.0;
            running_n = 0;
            if (stopper.update(es, model.parameters(), model.buffers(), it + 1)) {
                result.stopped_early = true;
                break;
            }
        }
    }
    result.model = model;
    if (stopper.has_best()) {
        result.model.parameters() = stopper.best_parameters();
        result.model.buffers() = stopper.best_buffers();
        result.best_iteration = stopper.best_iteration();
    }
    return result;
}

}  // namespace nbeatsx
