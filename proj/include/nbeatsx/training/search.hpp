#pragma once

#include "nbeatsx/training/ensemble.hpp"

#include <cmath>
#include <limits>

namespace nbeatsx {

enum class SearchFamily { generic, interpretable };

inline std::string_view to_string(SearchFamily f) { return f == SearchFamily::generic ? "generic" : "interpretable"; }

inline std::optional<SearchFamily> parse_search_family(std::string_view s) {
    if (s == "generic") return SearchFamily::generic;
    if (s == "interpretable") return SearchFamily::interpretable;
    return std::nullopt;
}

/// Sampling space. Defaults are the full hyperparameter table; fields may be
/// narrowed for small runs. Sets are sampled uniformly, ranges uniformly except
/// learning rate and lambda2, which are log-uniform. Dropout is drawn from [0, dropout_max).
struct SearchSpace {
    SearchFamily family = SearchFamily::generic;
    std::size_t hidden_min = 50, hidden_max = 500;
    std::size_t kernel_min = 2, kernel_max = 10;
    std::vector<std::size_t> n_pol{2, 3, 4};
    std::vector<double> n_harmonics{1.0, 2.0};
    std::vector<Activation> activations{std::begin(kAllActivations), std::end(kAllActivations)};
    std::vector<InitStrategy> inits{InitStrategy::orthogonal, InitStrategy::he_norm, InitStrategy::glorot_norm};
    std::vector<bool> take_x{true, false};
    std::vector<bool> batch_norm{true, false};
    double lr_min = kMinLearningRate, lr_max = kMaxLearningRate;
    std::vector<std::size_t> batch_sizes{256, 512};
    double dropout_max = 1.0;
    double lambda1_max = kMaxLambda1;
    double lambda2_min = kMinLambda2, lambda2_max = kMaxLambda2;
    std::vector<std::size_t> strides{1, 24};
    std::vector<NormalizationScheme> normalizations{NormalizationScheme::none, NormalizationScheme::median,
                                                    NormalizationScheme::invariant, NormalizationScheme::std_dev};
    std::vector<EarlyStopMode> early_stop_modes{EarlyStopMode::random_weeks, EarlyStopMode::trailing_weeks};
    std::uint64_t seed_min = 1, seed_max = 1000;
};

inline void validate(const SearchSpace& s) {
    auto fail = [](const std::string& m) { throw ConfigError("search space: " + m); };
    if (s.hidden_min == 0 || s.hidden_min > s.hidden_max) fail("hidden range");
    if (s.kernel_min < 2 || s.kernel_min > s.kernel_max || s.kernel_max > 10) fail("kernel range");
    if (s.n_pol.empty() || s.n_harmonics.empty() || s.activations.empty() || s.inits.empty() || s.take_x.empty() ||
        s.batch_norm.empty() || s.batch_sizes.empty() || s.strides.empty() || s.normalizations.empty() ||
        s.early_stop_modes.empty()) {
        fail("every categorical set needs at least one value");
    }
    if (!(s.lr_min > 0.0 && s.lr_min <= s.lr_max)) fail("learning rate range");
    if (!(s.dropout_max >= 0.0 && s.dropout_max <= 1.0)) fail("dropout_max must lie in [0, 1]");
    if (!(s.lambda1_max >= 0.0)) fail("lambda1 range");
    if (!(s.lambda2_min > 0.0 && s.lambda2_min <= s.lambda2_max)) fail("lambda2 range");
    if (s.seed_min > s.seed_max) fail("seed range");
}

struct SampledConfig {
    ModelConfig model;
    TrainConfig train;
};

namespace detail {

template <class T>
const T& pick(const std::vector<T>& v, Rng& rng) {
    return v[static_cast<std::size_t>(rng() % v.size())];
}

inline bool pick(const std::vector<bool>& v, Rng& rng) { return v[static_cast<std::size_t>(rng() % v.size())]; }

inline std::size_t uniform_int(std::size_t lo, std::size_t hi, Rng& rng) {
    return lo + static_cast<std::size_t>(rng() % (hi - lo + 1));
}

inline double log_uniform(double lo, double hi, Rng& rng) {
    return std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * uniform01(rng));
}

}  // namespace detail

/// Draws one configuration. Window sizes and covariate count come from
/// `base_model`; iteration budget, evaluation cadence, patience and the
/// early-stop week count come from `base_train`.
inline SampledConfig sample_configuration(const SearchSpace& space, Rng& rng, const ModelConfig& base_model,
                                          const TrainConfig& base_train) {
    using detail::pick;
    SampledConfig out;
    ModelConfig& m = out.model;
    m.input_size = base_model.input_size;
    m.horizon = base_model.horizon;
    m.n_covariates = base_model.n_covariates;

    const std::size_t hidden = detail::uniform_int(space.hidden_min, space.hidden_max, rng);
    const Activation act = pick(space.activations, rng);
    const bool bn = pick(space.batch_norm, rng);
    const bool take_x = pick(space.take_x, rng) && m.n_covariates > 0;
    if (space.family == SearchFamily::generic) {
        if (m.n_covariates == 0) throw ConfigError("search: the generic family needs covariates for its encoder");
        const StackKind enc = rng() % 2 == 0 ? StackKind::tcn : StackKind::wavenet;
        const bool encoder_first = rng() % 2 == 0;
        m.stacks = generic_preset(m.input_size, m.horizon, m.n_covariates, enc, encoder_first, hidden, act).stacks;
        const std::size_t kernel = detail::uniform_int(space.kernel_min, space.kernel_max, rng);
        for (auto& s : m.stacks)
            if (is_encoder(s.kind)) s.kernel_size = kernel;
    } else {
        m.stacks = interpretable_preset(m.input_size, m.horizon, m.n_covariates, hidden, act, m.n_covariates > 0).stacks;
        const std::size_t n_pol = pick(space.n_pol, rng);
        const double n_hr = pick(space.n_harmonics, rng);
        for (auto& s : m.stacks) {
            s.n_pol = n_pol;
            s.n_harmonics = n_hr;
        }
    }
    for (auto& s : m.stacks) {
        s.batch_norm = bn;
        s.coefficients_take_x = take_x;
    }
    m.init = pick(space.inits, rng);
    m.dropout_projection = space.dropout_max * uniform01(rng);
    m.dropout_encoder = space.dropout_max * uniform01(rng);
    m.seed = space.seed_min + rng() % (space.seed_max - space.seed_min + 1);

    TrainConfig& t = out.train;
    t = base_train;
    t.learning_rate = detail::log_uniform(space.lr_min, space.lr_max, rng);
    t.batch_size = pick(space.batch_sizes, rng);
    t.lambda1 = space.lambda1_max * uniform01(rng);
    t.lambda2 = detail::log_uniform(space.lambda2_min, space.lambda2_max, rng);
    t.stride = pick(space.strides, rng);
    t.normalization = pick(space.normalizations, rng);
    t.early_stop_mode = pick(space.early_stop_modes, rng);
    t.seed = m.seed;
    return out;
}

struct Trial {
    std::size_t index = 0;  // draw order
    SampledConfig config;
    double validation_mae = std::numeric_limits<double>::infinity();
    std::string error;  // non-empty when the trial failed
};

/// Days of history used for fitting and for validation scoring, counted from the first row.
struct SearchSplit {
    std::size_t train_days = 3 * kDaysPerSplitYear;
    std::size_t validation_days = kDaysPerSplitYear;
};

/// Mean absolute error of daily forecasts against the frame's targets.
inline double forecast_mae(const SeriesFrame& frame, const std::vector<DailyForecast>& forecasts) {
    double total = 0.0;
    std::size_t n = 0;
    for (const auto& f : forecasts) {
        const std::size_t row = frame.index_of(f.origin);
        for (std::size_t h = 0; h < f.values.size(); ++h) total += std::abs(frame.target.at(row + h) - f.values[h]);
        n += f.values.size();
    }
    if (n == 0) throw DataError("forecast_mae: no forecasts");
    return total / static_cast<double>(n);
}

/// Scores one sampled configuration: trains on the training days and
/// forecasts each validation day with the fitted model.
inline double validation_mae(const SeriesFrame& frame, const SampledConfig& c, const SearchSplit& split) {
    const std::size_t train_end = split.train_days * kHoursPerDay;
    if (frame.size() < train_end + split.validation_days * kHoursPerDay) {
        throw DataError("search: frame shorter than the training plus validation days");
    }
    validate(c.model);
    const FittedModel fitted = fit_history(frame, train_end, c.train, c.model);
    return forecast_mae(frame, forecast_days(fitted.result.model, fitted.stats, frame, train_end, split.validation_days));
}

/// Random search: draws `budget` configurations from `seed`, scores each on the
/// validation days and returns them sorted by ascending validation MAE.
/// Trials that fail keep an infinite MAE and their error message.
inline std::vector<Trial> random_search(const SeriesFrame& frame, const SearchSpace& space, std::size_t budget,
                                        const ModelConfig& base_model, const TrainConfig& base_train,
                                        const SearchSplit& split, std::uint64_t seed, std::size_t jobs = 1) {
    if (budget == 0) throw ConfigError("search: budget must be at least 1");
    validate(space);
    Rng rng(seed);
    std::vector<Trial> trials(budget);
    for (std::size_t i = 0; i < budget; ++i) {
        trials[i].index = i;
        trials[i].config = sample_configuration(space, rng, base_model, base_train);
    }
    parallel_for(budget, jobs, [&](std::size_t i) {
        try {
            trials[i].validation_mae = validation_mae(frame, trials[i].config, split);
        } catch (const Error& e) {
            trials[i].error = e.what();
        }
    });
    std::stable_sort(trials.begin(), trials.end(),
                     [](const Trial& a, const Trial& b) { return a.validation_mae < b.validation_mae; });
    return trials;
}

}  // namespace nbeatsx
