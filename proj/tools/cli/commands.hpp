#pragma once

#include "cli/run_config.hpp"
#include "nbeatsx/data/synth.hpp"
#include "nbeatsx/evaluation/forecast_table.hpp"
#include "nbeatsx/evaluation/gw.hpp"
#include "nbeatsx/model/serialize.hpp"
#include "nbeatsx/training/ensemble.hpp"

#include <filesystem>
#include <fstream>

namespace nbeatsx::cli {

namespace fs = std::filesystem;

inline const char* kModelFile = "model.nbx";
inline const char* kCurvesFile = "curves.csv";
inline const char* kForecastsFile = "forecasts.csv";

/// Data frame as the model sees it: the CSV plus calendar columns when enabled.
inline SeriesFrame load_frame(const fs::path& path, bool calendar) {
    SeriesFrame f = load_csv(path);
    return calendar ? calendar_features(std::move(f)) : f;
}

/// Resolves the data path: an explicit override wins, otherwise the config
/// value relative to the config file's directory.
inline fs::path data_path(const RunConfig& c, const fs::path& config_path, const std::string& override_path) {
    if (!override_path.empty()) return override_path;
    if (c.data.empty()) throw ConfigError("no data file: set \"data\" in the config or pass --data");
    const fs::path p(c.data);
    return p.is_absolute() ? p : config_path.parent_path() / p;
}

inline fs::path output_dir(const RunConfig& c, const fs::path& config_path, const std::string& override_dir) {
    fs::path dir = !override_dir.empty() ? fs::path(override_dir)
                   : fs::path(c.output_dir).is_absolute() ? fs::path(c.output_dir)
                                                          : config_path.parent_path() / c.output_dir;
    fs::create_directories(dir);
    return dir;
}

/// Row of the first forecast origin: `test_start` when given, else the row after `train_days`,
/// else the last midnight that still leaves a full horizon inside the frame.
inline std::size_t first_origin_row(const RunConfig& c, const SeriesFrame& f) {
    if (!c.test_start.empty()) return f.index_of(*parse_timestamp(c.test_start));
    if (c.train_days > 0) {
        const std::size_t row = c.train_days * kHoursPerDay;
        if (row >= f.size()) throw DataError("train_days reaches past the end of the data");
        return row;
    }
    if (f.size() < c.horizon) throw DataError("data shorter than one horizon");
    std::size_t row = f.size() - c.horizon;
    while (row > 0 && hour_of_day(f.timestamps[row]) != 0) --row;
    return row;
}

inline ForecastTable to_table(const std::vector<DailyForecast>& forecasts) {
    ForecastTable t;
    for (const auto& d : forecasts) {
        t.origins.push_back(d.origin);
        t.values.push_back(d.values);
    }
    return t;
}

inline nlohmann::json model_metadata(const SeriesFrame& f, const NormalizationStats& stats, const TrainConfig& t,
                                     bool calendar, HourStamp train_end) {
    return {{"normalization", to_json(stats)},
            {"covariate_names", f.covariate_names},
            {"calendar_features", calendar},
            {"train_end", format_timestamp(train_end)},
            {"train_config", to_json(t)}};
}

inline void write_curves(const fs::path& path, const std::vector<TrainingCurves>& days) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot write " + path.string());
    os << "day,iteration,train_mae,earlystop_mae\n";
    for (std::size_t d = 0; d < days.size(); ++d) {
        const auto& c = days[d];
        for (std::size_t i = 0; i < c.iteration.size(); ++i) {
            os << d << ',' << c.iteration[i] << ',' << format_number(c.train_mae[i]) << ','
               << format_number(c.early_stop_mae[i]) << '\n';
        }
    }
}

/// A saved model with the frame prepared the way it was trained.
struct LoadedModel {
    ModelArtifact artifact;
    NormalizationStats stats;
    SeriesFrame frame;
};

inline LoadedModel load_model_and_data(const fs::path& model_path, const fs::path& data) {
    LoadedModel m{load_model(model_path), {}, {}};
    const auto& meta = m.artifact.metadata;
    if (!meta.contains("normalization")) throw DataError("model file has no normalization statistics");
    m.stats = normalization_from_json(meta.at("normalization"));
    m.frame = load_frame(data, meta.value("calendar_features", false));
    const auto names = meta.value("covariate_names", std::vector<std::string>{});
    if (names != m.frame.covariate_names) {
        std::string have;
        for (const auto& n : m.frame.covariate_names) have += (have.empty() ? "" : ",") + n;
        throw DataError("data covariates [" + have + "] do not match the model's");
    }
    return m;
}

// ---- commands ------------------------------------------------------------

struct Summary {
    nlohmann::json fields = nlohmann::json::object();
};

inline Summary cmd_synth(std::size_t days, std::uint64_t seed, const fs::path& out, const std::string& components) {
    const SyntheticSeries s = synth_generate(days, seed);
    write_csv(out, s.frame);
    fs::path comp = components.empty() ? out.parent_path() / (out.stem().string() + "_components.csv") : fs::path(components);
    write_components_csv(comp, s);
    return {{{"data", out.string()}, {"components", comp.string()}, {"rows", s.frame.size()}}};
}

inline Summary cmd_train(const fs::path& config_path, const std::string& data_override, const std::string& out_override) {
    const RunConfig c = load_run_config(config_path);
    const SeriesFrame f = load_frame(data_path(c, config_path, data_override), c.calendar_features);
    f.validate();
    const ModelConfig m = model_config(c, f.n_covariates());
    const std::size_t end = first_origin_row(c, f);
    const FittedModel fitted = fit_history(f, end, c.train, m);
    const fs::path dir = output_dir(c, config_path, out_override);
    save_model(dir / kModelFile, fitted.result.model,
               model_metadata(f, fitted.stats, c.train, c.calendar_features, f.timestamps[end]));
    write_curves(dir / kCurvesFile, {fitted.result.curves});
    return {{{"model", (dir / kModelFile).string()},
             {"train_end", format_timestamp(f.timestamps[end])},
             {"iterations", fitted.result.iterations_run},
             {"best_iteration", fitted.result.best_iteration}}};
}

inline Summary cmd_recalibrate(const fs::path& config_path, const std::string& data_override,
                               const std::string& out_override) {
    const RunConfig c = load_run_config(config_path);
    const SeriesFrame f = load_frame(data_path(c, config_path, data_override), c.calendar_features);
    f.validate();
    const ModelConfig m = model_config(c, f.n_covariates());
    const HourStamp start = f.timestamps.at(first_origin_row(c, f));
    const RecalibrationResult r = recalibrate_daily(f, c.train, m, start, c.test_days);
    const fs::path dir = output_dir(c, config_path, out_override);
    write_forecast_csv(dir / kForecastsFile, to_table(r.forecasts));
    write_curves(dir / kCurvesFile, r.curves);
    const HourStamp last_origin = r.forecasts.back().origin;
    save_model(dir / kModelFile, *r.last_model, model_metadata(f, r.last_stats, c.train, c.calendar_features, last_origin));
    double total = 0.0;
    for (double s : r.seconds_per_day) total += s;
    return {{{"forecasts", (dir / kForecastsFile).string()},
             {"days", r.forecasts.size()},
             {"seconds_per_day", total / static_cast<double>(r.forecasts.size())}}};
}

/// File-name form of a variant, e.g. "member_stride24_random_weeks.csv".
inline std::string member_file(const EnsembleVariant& v) {
    return "member_stride" + std::to_string(v.stride) + "_" + std::string(to_string(v.mode)) + ".csv";
}

inline Summary cmd_ensemble(const fs::path& config_path, const std::string& data_override,
                            const std::string& out_override, std::size_t jobs) {
    const RunConfig c = load_run_config(config_path);
    const SeriesFrame f = load_frame(data_path(c, config_path, data_override), c.calendar_features);
    f.validate();
    const ModelConfig m = model_config(c, f.n_covariates());
    const HourStamp start = f.timestamps.at(first_origin_row(c, f));
    const EnsembleResult r = ensemble(f, c.train, m, start, c.test_days, default_variants(), jobs);
    const fs::path dir = output_dir(c, config_path, out_override);
    nlohmann::json members = nlohmann::json::array();
    for (std::size_t i = 0; i < r.variants.size(); ++i) {
        write_forecast_csv(dir / member_file(r.variants[i]), to_table(r.members[i]));
        members.push_back(member_file(r.variants[i]));
    }
    write_forecast_csv(dir / kForecastsFile, to_table(r.combined));
    return {{{"forecasts", (dir / kForecastsFile).string()}, {"members", members}, {"days", r.combined.size()}}};
}

inline HourStamp parse_date_arg(const std::string& s, const char* what) {
    const auto t = parse_timestamp(s);
    if (!t) throw ConfigError(std::string(what) + ": '" + s + "' is not a date");
    return *t;
}

inline Summary cmd_forecast(const fs::path& model_path, const fs::path& data, const std::string& start,
                            std::size_t days, const fs::path& out) {
    if (days == 0) throw ConfigError("--days must be positive");
    const LoadedModel m = load_model_and_data(model_path, data);
    m.frame.validate();
    const std::size_t row = m.frame.index_of(parse_date_arg(start, "--start"));
    const auto forecasts = forecast_days(m.artifact.model, m.stats, m.frame, row, days);
    write_forecast_csv(out, to_table(forecasts));
    return {{{"forecasts", out.string()}, {"days", forecasts.size()}}};
}

/// Decomposition CSV: timestamp, actual, level, one column per stack, forecast, residual.
inline Summary cmd_decompose(const fs::path& model_path, const fs::path& data, const std::string& start,
                             const fs::path& out) {
    const LoadedModel m = load_model_and_data(model_path, data);
    if (!m.artifact.model.config().interpretable()) {
        throw ConfigError("decomposition requires interpretable configuration");
    }
    m.frame.validate();
    const std::size_t row = m.frame.index_of(parse_date_arg(start, "--start"));
    const DailyForecast f = forecast_at(m.artifact.model, m.stats, m.frame, row);
    const ForecastDecomposition& d = f.decomposition;
    std::ofstream os(out, std::ios::binary);
    if (!os) throw DataError("cannot write " + out.string());
    os << "timestamp,actual,level";
    for (const auto& n : d.names) os << ',' << n;
    os << ",forecast,residual\n";
    for (std::size_t h = 0; h < d.horizon(); ++h) {
        const double actual = m.frame.target[row + h];
        os << format_timestamp(m.frame.timestamps[row + h]) << ',' << format_number(actual) << ','
           << format_number(d.level);
        for (const auto& c : d.components) os << ',' << format_number(c[h]);
        os << ',' << format_number(d.forecast[h]) << ',' << format_number(actual - d.forecast[h]) << '\n';
    }
    return {{{"decomposition", out.string()}, {"horizon", d.horizon()}}};
}

inline Summary cmd_evaluate(const fs::path& forecasts, const fs::path& data, const fs::path& out) {
    const ForecastTable t = read_forecast_csv(forecasts);
    if (t.days() == 0) throw DataError(forecasts.string() + " has no forecast rows");
    const SeriesFrame f = load_csv(data);
    const MetricsReport r = compute_metrics(aligned_actuals(f, t), t.values, aligned_naive(f, t));
    nlohmann::json j = to_json(r);
    j["first_origin"] = format_date(t.origins.front());
    j["last_origin"] = format_date(t.origins.back());
    std::ofstream os(out, std::ios::binary);
    if (!os) throw DataError("cannot write " + out.string());
    os << j.dump(2) << '\n';
    return {{{"metrics", out.string()}, {"mae", r.mae}, {"rmae", r.rmae}}};
}

/// Throws naming the first file whose dates differ from the first file's.
inline void check_aligned(const std::vector<fs::path>& paths, const std::vector<ForecastTable>& tables) {
    auto span = [](const ForecastTable& t) {
        return t.days() == 0 ? std::string("no rows")
                             : format_date(t.origins.front()) + ".." + format_date(t.origins.back()) + " (" +
                                   std::to_string(t.days()) + " days)";
    };
    for (std::size_t i = 1; i < tables.size(); ++i) {
        if (tables[i].origins != tables[0].origins || tables[i].horizon() != tables[0].horizon()) {
            throw DataError("misaligned forecasts: " + paths[0].string() + " covers " + span(tables[0]) + ", " +
                            paths[i].string() + " covers " + span(tables[i]));
        }
    }
}

inline Summary cmd_gwtest(const std::vector<fs::path>& files, const fs::path& data, const fs::path& out,
                          std::size_t lags) {
    if (files.size() < 2) throw ConfigError("gwtest needs at least two forecast files");
    std::vector<ForecastTable> tables;
    std::vector<std::string> names;
    for (const auto& p : files) {
        tables.push_back(read_forecast_csv(p));
        names.push_back(p.stem().string());
    }
    check_aligned(files, tables);
    const SeriesFrame f = load_csv(data);
    std::vector<DayMatrix> values;
    for (const auto& t : tables) values.push_back(t.values);
    const GWMatrix m = gw_matrix(names, values, aligned_actuals(f, tables[0]), lags);
    std::ofstream os(out, std::ios::binary);
    if (!os) throw DataError("cannot write " + out.string());
    m.write_csv(os);
    return {{{"matrix", out.string()}, {"models", names}, {"days", tables[0].days()}}};
}

inline Summary cmd_search(const fs::path& config_path, const std::string& data_override, std::size_t budget,
                          const fs::path& out, std::size_t jobs) {
    const RunConfig c = load_run_config(config_path);
    const SeriesFrame f = load_frame(data_path(c, config_path, data_override), c.calendar_features);
    f.validate();
    SearchSpace space;
    space.family = *parse_search_family(c.search_family);
    SearchSplit split;
    if (c.train_days > 0) split.train_days = c.train_days;
    if (c.validation_days > 0) split.validation_days = c.validation_days;
    const ModelConfig base = model_config(c, f.n_covariates());
    const auto trials = random_search(f, space, budget, base, c.train, split, derive_seed(c.seed, 3), jobs);

    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    std::ofstream os(out, std::ios::binary);
    if (!os) throw DataError("cannot write " + out.string());
    std::vector<std::string> keys;
    const nlohmann::json columns = flat_config(c, trials.front().config);
    for (const auto& [k, v] : columns.items()) keys.push_back(k);
    os << "rank,trial,validation_mae";
    for (const auto& k : keys) os << ',' << k;
    os << ",error\n";
    for (std::size_t r = 0; r < trials.size(); ++r) {
        const Trial& t = trials[r];
        const nlohmann::json flat = flat_config(c, t.config);
        os << r + 1 << ',' << t.index << ',' << format_number(t.validation_mae);
        for (const auto& k : keys) {
            const auto& v = flat.at(k);
            os << ',' << (v.is_string() ? v.get<std::string>() : v.is_number_float() ? format_number(v.get<double>()) : v.dump());
        }
        std::string err = t.error;
        for (char& ch : err)
            if (ch == ',' || ch == '\n') ch = ';';
        os << ',' << err << '\n';
    }
    nlohmann::json best = flat_config(c, trials.front().config);
    best["train_days"] = split.train_days;
    best["validation_days"] = split.validation_days;
    const fs::path best_path = out.parent_path() / "best_config.json";
    std::ofstream bs(best_path, std::ios::binary);
    bs << best.dump(2) << '\n';
    return {{{"ranked", out.string()},
             {"best_config", best_path.string()},
             {"trials", trials.size()},
             {"best_validation_mae", trials.front().validation_mae}}};
}

}  // namespace nbeatsx::cli
