// nbeatsx command-line driver.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or validation error.
// Errors are reported on stderr as one JSON object; successes print a JSON summary on stdout.

#include "cli/commands.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

using namespace nbeatsx;
using namespace nbeatsx::cli;

int report_error(const char* kind, const std::string& message, int code) {
    std::cerr << nlohmann::json{{"status", "error"}, {"kind", kind}, {"message", message}}.dump() << '\n';
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"NBEATSx electricity price forecasting"};
    app.require_subcommand(1);

    std::string config, data, out, model, start, components;
    std::size_t days = 0, jobs = 1, budget = 0, lags = 1;
    std::uint64_t seed = 0;
    std::vector<std::string> forecast_files;
    std::string forecasts;

    auto* synth = app.add_subcommand("synth", "generate a synthetic price series");
    synth->add_option("--days", days, "number of days (at least 60)")->required();
    synth->add_option("--seed", seed, "generator seed")->required();
    synth->add_option("--out", out, "data CSV path")->required();
    synth->add_option("--components", components, "ground-truth components CSV path");

    auto add_run = [&](const char* name, const char* help) {
        auto* cmd = app.add_subcommand(name, help);
        cmd->add_option("--config", config, "run configuration (JSON)")->required()->check(CLI::ExistingFile);
        cmd->add_option("--data", data, "data CSV, overrides the config");
        return cmd;
    };
    auto* train = add_run("train", "train one model on the history before the first test day");
    train->add_option("--out", out, "output directory, overrides the config");
    auto* recal = add_run("recalibrate", "retrain daily and forecast each test day");
    recal->add_option("--out", out, "output directory, overrides the config");
    auto* ens = add_run("ensemble", "daily-recalibrated ensemble over stride and early-stop variants");
    ens->add_option("--out", out, "output directory, overrides the config");
    ens->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
    auto* search = add_run("search", "random hyperparameter search");
    search->add_option("--budget", budget, "number of configurations")->required();
    search->add_option("--out", out, "ranked configurations CSV")->required();
    search->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);

    auto* forecast = app.add_subcommand("forecast", "forecast with a saved model");
    forecast->add_option("--model", model)->required()->check(CLI::ExistingFile);
    forecast->add_option("--data", data)->required()->check(CLI::ExistingFile);
    forecast->add_option("--start", start, "first forecast day, YYYY-MM-DD")->required();
    forecast->add_option("--days", days, "number of days")->default_val(1);
    forecast->add_option("--out", out)->required();

    auto* decompose = app.add_subcommand("decompose", "per-stack decomposition of one forecast");
    decompose->add_option("--model", model)->required()->check(CLI::ExistingFile);
    decompose->add_option("--data", data)->required()->check(CLI::ExistingFile);
    decompose->add_option("--start", start, "forecast origin, YYYY-MM-DD")->required();
    decompose->add_option("--out", out)->required();

    auto* evaluate = app.add_subcommand("evaluate", "accuracy metrics of a forecast file");
    evaluate->add_option("--forecasts", forecasts)->required()->check(CLI::ExistingFile);
    evaluate->add_option("--data", data)->required()->check(CLI::ExistingFile);
    evaluate->add_option("--out", out, "metrics JSON path")->required();

    auto* gwtest = app.add_subcommand("gwtest", "pairwise predictive-ability tests");
    gwtest->add_option("--forecasts", forecast_files, "two or more forecast files")->required()->check(CLI::ExistingFile);
    gwtest->add_option("--data", data)->required()->check(CLI::ExistingFile);
    gwtest->add_option("--out", out, "p-value matrix CSV")->required();
    gwtest->add_option("--lags", lags, "lags of the loss differential in the instruments")->default_val(1);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return report_error("UsageError", e.what(), 2);
    }

    try {
        Summary s;
        if (*synth) {
            if (days < 60) throw ConfigError("--days must be at least 60, got " + std::to_string(days));
            s = cmd_synth(days, seed, out, components);
        } else if (*train) {
            s = cmd_train(config, data, out);
        } else if (*recal) {
            s = cmd_recalibrate(config, data, out);
        } else if (*ens) {
            s = cmd_ensemble(config, data, out, jobs);
        } else if (*search) {
            s = cmd_search(config, data, budget, out, jobs);
        } else if (*forecast) {
            s = cmd_forecast(model, data, start, days, out);
        } else if (*decompose) {
            s = cmd_decompose(model, data, start, out);
        } else if (*evaluate) {
            s = cmd_evaluate(forecasts, data, out);
        } else if (*gwtest) {
            std::vector<std::filesystem::path> files(forecast_files.begin(), forecast_files.end());
            s = cmd_gwtest(files, data, out, lags);
        }
        s.fields["status"] = "ok";
        s.fields["command"] = app.get_subcommands().front()->get_name();
        std::cout << s.fields.dump() << '\n';
        return 0;
    } catch (const ConfigError& e) {
        return report_error("ConfigError", e.what(), 2);
    } catch (const DataError& e) {
        return report_error("DataError", e.what(), 2);
    } catch (const ShapeError& e) {
        return report_error("ShapeError", e.what(), 2);
    } catch (const TrainingError& e) {
        return report_error("TrainingError", e.what(), 1);
    } catch (const std::exception& e) {
        return report_error("Error", e.what(), 1);
    }
}
