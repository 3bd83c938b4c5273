#pragma once

#include "nbeatsx/data/split.hpp"
#include "nbeatsx/error.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace nbeatsx {

enum class NormalizationScheme { none, median, std_dev, invariant };

inline std::string_view to_string(NormalizationScheme s) {
    switch (s) {
        case NormalizationScheme::none: return "none";
        case NormalizationScheme::median: return "median";
        case NormalizationScheme::std_dev: return "std";
        case NormalizationScheme::invariant: return "invariant";
    }
    return "?";
}

inline std::optional<NormalizationScheme> parse_normalization(std::string_view s) {
    for (auto n : {NormalizationScheme::none, NormalizationScheme::median, NormalizationScheme::std_dev,
                   NormalizationScheme::invariant}) {
        if (to_string(n) == s) return n;
    }
    return std::nullopt;
}

/// Optimisation settings. Defaults follow the reference configuration
/// (batch 256, 30000 iterations, evaluation every 100, patience 10).
struct TrainConfig {
    std::size_t batch_size = 256;
    double learning_rate = 1e-3;
    double lr_decay = 0.5;
    std::size_t lr_decays = 3;
    std::size_t max_iterations = 30000;
    std::size_t eval_every = 100;
    std::size_t patience = 10;
    std::size_t stride = 24;
    NormalizationScheme normalization = NormalizationScheme::median;
    double lambda1 = 0.0;  // lasso on block coefficients
    double lambda2 = 0.0;  // L2 on weights
    EarlyStopMode early_stop_mode = EarlyStopMode::random_weeks;
    std::size_t early_stop_weeks = 42;
    bool warm_start = false;
    std::uint64_t seed = 1;

    friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

inline constexpr double kMinLearningRate = 5e-4;
inline constexpr double kMaxLearningRate = 1e-2;
inline constexpr double kMaxLambda1 = 0.1;
inline constexpr double kMinLambda2 = 1e-5;
inline constexpr double kMaxLambda2 = 1.0;

/// Range checks. Iteration counts and batch size only need to be positive
/// so that small runs stay possible; lambda2 = 0 disables the L2 term.
inline void validate(const TrainConfig& c) {
    auto fail = [](const std::string& m) { throw ConfigError("train config: " + m); };
    if (c.batch_size == 0) fail("batch_size must be positive");
    if (!(c.learning_rate >= kMinLearningRate && c.learning_rate <= kMaxLearningRate)) {
        fail("learning_rate must lie in [5e-4, 1e-2], got " + std::to_string(c.learning_rate));
    }
    if (!(c.lr_decay > 0.0 && c.lr_decay <= 1.0)) fail("lr_decay must lie in (0, 1]");
    if (c.max_iterations == 0) fail("max_iterations must be positive");
    if (c.eval_every == 0) fail("eval_every must be positive");
    if (c.patience == 0) fail("patience must be positive");
    if (c.stride != 1 && c.stride != 24) fail("stride must be 1 or 24");
    if (!(c.lambda1 >= 0.0 && c.lambda1 <= kMaxLambda1)) fail("lambda1 must lie in [0, 0.1]");
    if (!(c.lambda2 == 0.0 || (c.lambda2 >= kMinLambda2 && c.lambda2 <= kMaxLambda2))) {
        fail("lambda2 must be 0 or lie in [1e-5, 1]");
    }
    if (c.early_stop_weeks == 0) fail("early_stop_weeks must be positive");
}

inline nlohmann::json to_json(const TrainConfig& c) {
    return {{"batch_size", c.batch_size},
            {"learning_rate", c.learning_rate},
            {"lr_decay", c.lr_decay},
            {"lr_decays", c.lr_decays},
            {"max_iterations", c.max_iterations},
            {"eval_every", c.eval_every},
            {"patience", c.patience},
            {"stride", c.stride},
            {"normalization", to_string(c.normalization)},
            {"lambda1", c.lambda1},
            {"lambda2", c.lambda2},
            {"early_stop_mode", to_string(c.early_stop_mode)},
            {"early_stop_weeks", c.early_stop_weeks},
            {"warm_start", c.warm_start},
            {"seed", c.seed}};
}

}  // namespace nbeatsx
