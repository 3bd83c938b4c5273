#include "cli/commands.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <sstream>
#include <sys/wait.h>

namespace {

using namespace nbeatsx;
namespace fs = std::filesystem;

struct CliRun {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::vector<std::string> lines_of(const fs::path& p) {
    std::istringstream in(slurp(p));
    std::vector<std::string> out;
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

class CliTest : public ::testing::Test {
protected:
    fs::path dir;

    void SetUp() override {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir = fs::temp_directory_path() / ("nbeatsx_cli_" + std::string(info->name()));
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    void TearDown() override { fs::remove_all(dir); }

    CliRun run(const std::string& args) const {
        const std::string cmd = "cd '" + dir.string() + "' && '" NBEATSX_CLI_PATH "' " + args + " > stdout.txt 2> stderr.txt";
        const int status = std::system(cmd.c_str());
        return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(dir / "stdout.txt"), slurp(dir / "stderr.txt")};
    }

    void write(const std::string& name, const std::string& text) const {
        std::ofstream(dir / name, std::ios::binary) << text;
    }

    /// 120 days of synthetic data and a small, fast configuration.
    void prepare(const std::string& extra = "") const {
        ASSERT_EQ(run("synth --days 120 --seed 7 --out d.csv").code, 0);
        write("cfg.json", R"({"data":"d.csv","output_dir":"out","hidden_units":16,"max_iterations":60,)"
                          R"("eval_every":20,"patience":3,"batch_size":32,"early_stop_weeks":2,)"
                          R"("train_days":100,"seed":5)" + extra + "}");
    }
};

std::vector<double> row_values(const std::string& line) {
    std::vector<double> v;
    const auto fields = split_fields(line);
    for (std::size_t i = 1; i < fields.size(); ++i) v.push_back(*parse_number(fields[i]));
    return v;
}

TEST(RunConfig, DefaultsAndDerivedSeeds) {
    const auto c = cli::parse_run_config(nlohmann::json::object());
    EXPECT_EQ(c.architecture, "interpretable");
    EXPECT_EQ(c.train.seed, derive_seed(1, 2));
    EXPECT_EQ(cli::model_config(c, 1).seed, derive_seed(1, 1));
    EXPECT_EQ(cli::model_config(c, 1).stacks.size(), 3u);
    EXPECT_EQ(cli::model_config(c, 0).stacks.size(), 2u);
}

TEST(RunConfig, RejectsUnknownKeysAndWrongTypes) {
    EXPECT_THROW(cli::parse_run_config({{"hidden", 3}}), ConfigError);
    EXPECT_THROW(cli::parse_run_config({{"hidden_units", "many"}}), ConfigError);
    EXPECT_THROW(cli::parse_run_config({{"hidden_units", -4}}), ConfigError);
    EXPECT_THROW(cli::parse_run_config({{"normalization", "zscore"}}), ConfigError);
    EXPECT_THROW(cli::parse_run_config({{"learning_rate", 0.5}}), ConfigError);
    EXPECT_THROW(cli::parse_run_config({{"test_start", "yesterday"}}), ConfigError);
    EXPECT_THROW(cli::parse_run_config(nlohmann::json::array()), ConfigError);
}

TEST(RunConfig, GenericArchitectureUsesEncoder) {
    const auto c = cli::parse_run_config({{"architecture", "generic"}, {"encoder", "wavenet"}, {"kernel_size", 3}});
    const ModelConfig m = cli::model_config(c, 2);
    EXPECT_FALSE(m.interpretable());
    EXPECT_EQ(m.stacks[1].kind, StackKind::wavenet);
    EXPECT_EQ(m.stacks[1].kernel_size, 3u);
    EXPECT_THROW(cli::model_config(c, 0), ConfigError);
}

TEST(RunConfig, FlatConfigOfSampleParsesBack) {
    Rng rng(4);
    SearchSpace space;
    space.family = SearchFamily::generic;
    const auto base = cli::parse_run_config(nlohmann::json::object());
    const SampledConfig s = sample_configuration(space, rng, cli::model_config(base, 1), base.train);
    const auto back = cli::parse_run_config(cli::flat_config(base, s));
    ModelConfig m = cli::model_config(back, 1);
    m.seed = s.model.seed;
    EXPECT_EQ(m, s.model);
    TrainConfig t = back.train;
    t.seed = s.train.seed;
    EXPECT_EQ(t, s.train);
}

TEST_F(CliTest, SynthWritesRowsAndIsByteIdentical) {
    const CliRun a = run("synth --days 1460 --seed 7 --out d.csv");
    ASSERT_EQ(a.code, 0) << a.err;
    EXPECT_EQ(lines_of(dir / "d.csv").size(), 1460u * 24 + 1);
    EXPECT_TRUE(fs::exists(dir / "d_components.csv"));
    const std::string first = slurp(dir / "d.csv");
    ASSERT_EQ(run("synth --days 1460 --seed 7 --out d.csv").code, 0);
    EXPECT_EQ(slurp(dir / "d.csv"), first);
}

TEST_F(CliTest, SynthBelowMinimumExitsTwo) {
    const CliRun r = run("synth --days 10 --seed 1 --out d.csv");
    EXPECT_EQ(r.code, 2);
    const auto j = nlohmann::json::parse(r.err);
    EXPECT_EQ(j.at("status"), "error");
    EXPECT_NE(j.at("message").get<std::string>().find("at least 60"), std::string::npos);
    EXPECT_FALSE(fs::exists(dir / "d.csv"));
}

TEST_F(CliTest, UsageErrorsExitTwo) {
    EXPECT_EQ(run("").code, 2);
    EXPECT_EQ(run("synth --days 100").code, 2);
    EXPECT_EQ(run("nonsense").code, 2);
}

TEST_F(CliTest, UnknownConfigKeyExitsTwo) {
    prepare(R"(,"hidden_unit":3)");
    const CliRun r = run("train --config cfg.json");
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("hidden_unit"), std::string::npos);
}

TEST_F(CliTest, TrainThenForecastOnTrainEnd) {
    prepare();
    const CliRun t = run("train --config cfg.json");
    ASSERT_EQ(t.code, 0) << t.err;
    EXPECT_TRUE(fs::exists(dir / "out/model.nbx"));
    EXPECT_EQ(lines_of(dir / "out/curves.csv").front(), "day,iteration,train_mae,earlystop_mae");
    const std::string end = nlohmann::json::parse(t.out).at("train_end").get<std::string>().substr(0, 10);
    const CliRun f = run("forecast --model out/model.nbx --data d.csv --start " + end + " --out f.csv");
    ASSERT_EQ(f.code, 0) << f.err;
    const auto lines = lines_of(dir / "f.csv");
    ASSERT_EQ(lines.size(), 2u);
    EXPECT_EQ(lines[0].substr(0, 16), "origin_date,h00,");
    EXPECT_EQ(lines[1].substr(0, 10), end);
    const auto v = row_values(lines[1]);
    ASSERT_EQ(v.size(), 24u);
    for (double x : v) EXPECT_TRUE(std::isfinite(x));
}

TEST_F(CliTest, ForecastRejectsDataWithOtherCovariates) {
    prepare();
    ASSERT_EQ(run("train --config cfg.json").code, 0);
    write("bare.csv", "timestamp,price\n");
    std::ofstream bare(dir / "bare.csv", std::ios::app);
    for (const auto& l : lines_of(dir / "d.csv")) {
        if (l.rfind("timestamp", 0) == 0) continue;
        bare << l.substr(0, l.rfind(',')) << '\n';
    }
    bare.close();
    const CliRun r = run("forecast --model out/model.nbx --data bare.csv --start 2015-04-15 --out f.csv");
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("covariates"), std::string::npos);
}

TEST_F(CliTest, TrainingFailureExitsOne) {
    prepare(R"(,"normalization":"none")");
    std::ofstream huge(dir / "huge.csv", std::ios::binary);
    huge << "timestamp,price,load\n";
    std::size_t i = 0;
    for (const auto& l : lines_of(dir / "d.csv")) {
        if (l.rfind("timestamp", 0) == 0) continue;
        const auto f = split_fields(l);
        huge << f[0] << ',' << (i++ % 2 ? "1e307" : "-1e307") << ',' << f[2] << '\n';
    }
    huge.close();
    const CliRun r = run("train --config cfg.json --data huge.csv");
    EXPECT_EQ(r.code, 1);
    EXPECT_EQ(nlohmann::json::parse(r.err).at("kind"), "TrainingError");
}

TEST_F(CliTest, RecalibrateSevenDaysIsReproducible) {
    prepare(R"(,"test_days":7)");
    ASSERT_EQ(run("recalibrate --config cfg.json --out a").code, 0);
    ASSERT_EQ(run("recalibrate --config cfg.json --out b").code, 0);
    const auto lines = lines_of(dir / "a/forecasts.csv");
    ASSERT_EQ(lines.size(), 8u);
    EXPECT_EQ(lines[1].substr(0, 10), "2015-04-15");
    EXPECT_EQ(lines[7].substr(0, 10), "2015-04-21");
    EXPECT_EQ(slurp(dir / "a/forecasts.csv"), slurp(dir / "b/forecasts.csv"));
    EXPECT_EQ(slurp(dir / "a/model.nbx"), slurp(dir / "b/model.nbx"));
    const auto curves = lines_of(dir / "a/curves.csv");
    EXPECT_EQ(curves.back().substr(0, 2), "6,");
}

TEST_F(CliTest, EnsembleRowIsMeanOfMemberRows) {
    prepare(R"(,"test_days":2)");
    const CliRun r = run("ensemble --config cfg.json --jobs 2");
    ASSERT_EQ(r.code, 0) << r.err;
    const auto members = nlohmann::json::parse(r.out).at("members");
    ASSERT_EQ(members.size(), 4u);
    const auto combined = lines_of(dir / "out/forecasts.csv");
    std::vector<std::vector<std::string>> rows;
    for (const auto& m : members) rows.push_back(lines_of(dir / "out" / m.get<std::string>()));
    ASSERT_EQ(combined.size(), 3u);
    for (std::size_t d = 1; d < combined.size(); ++d) {
        const auto c = row_values(combined[d]);
        std::vector<double> mean(c.size(), 0.0);
        for (const auto& m : rows) {
            ASSERT_EQ(m[d].substr(0, 10), combined[d].substr(0, 10));
            const auto v = row_values(m[d]);
            for (std::size_t h = 0; h < v.size(); ++h) mean[h] += v[h] / 4.0;
        }
        for (std::size_t h = 0; h < c.size(); ++h) EXPECT_NEAR(c[h], mean[h], 1e-9 * (1.0 + std::abs(mean[h])));
    }
}

struct DecompRow {
    double actual, level, forecast, residual, sum;
};

std::vector<DecompRow> read_decomposition(const fs::path& p, std::vector<std::string>& header) {
    const auto lines = lines_of(p);
    header.clear();
    for (auto f : split_fields(lines[0])) header.emplace_back(f);
    std::vector<DecompRow> out;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto v = row_values(lines[i]);
        double sum = v[1];
        for (std::size_t c = 2; c + 2 < v.size(); ++c) sum += v[c];
        out.push_back({v[0], v[1], v[v.size() - 2], v.back(), sum});
    }
    return out;
}

TEST_F(CliTest, DecomposeColumnsAddUpToForecast) {
    prepare();
    ASSERT_EQ(run("train --config cfg.json").code, 0);
    const CliRun r = run("decompose --model out/model.nbx --data d.csv --start 2015-04-20 --out dec.csv");
    ASSERT_EQ(r.code, 0) << r.err;
    std::vector<std::string> header;
    const auto rows = read_decomposition(dir / "dec.csv", header);
    EXPECT_EQ(header, (std::vector<std::string>{"timestamp", "actual", "level", "trend", "seasonality", "exogenous",
                                                "forecast", "residual"}));
    ASSERT_EQ(rows.size(), 24u);
    for (const auto& r : rows) {
        EXPECT_NEAR(r.sum, r.forecast, 1e-9 * (1.0 + std::abs(r.forecast)));
        EXPECT_EQ(r.residual, r.actual - r.forecast);
    }
    const CliRun f = run("forecast --model out/model.nbx --data d.csv --start 2015-04-20 --out f.csv");
    ASSERT_EQ(f.code, 0);
    const auto v = row_values(lines_of(dir / "f.csv")[1]);
    for (std::size_t h = 0; h < 24; ++h) EXPECT_EQ(v[h], rows[h].forecast);
}

TEST_F(CliTest, DecomposeWeekAheadHorizon) {
    prepare(R"(,"horizon":168,"max_iterations":20)");
    ASSERT_EQ(run("train --config cfg.json").code, 0);
    const CliRun r = run("decompose --model out/model.nbx --data d.csv --start 2015-04-15 --out dec.csv");
    ASSERT_EQ(r.code, 0) << r.err;
    std::vector<std::string> header;
    const auto rows = read_decomposition(dir / "dec.csv", header);
    ASSERT_EQ(rows.size(), 168u);
    for (const auto& row : rows) EXPECT_NEAR(row.sum, row.forecast, 1e-9 * (1.0 + std::abs(row.forecast)));
}

TEST_F(CliTest, DecomposeRejectsGenericModel) {
    prepare(R"(,"architecture":"generic")");
    ASSERT_EQ(run("train --config cfg.json").code, 0);
    const CliRun r = run("decompose --model out/model.nbx --data d.csv --start 2015-04-15 --out dec.csv");
    EXPECT_NE(r.code, 0);
    EXPECT_NE(r.err.find("decomposition requires interpretable configuration"), std::string::npos);
}

/// Forecast file holding the observed prices of `days` days from `first`.
void write_actuals_as_forecasts(const fs::path& data, std::size_t first_day, std::size_t days, const fs::path& out) {
    const SeriesFrame f = load_csv(data);
    ForecastTable t;
    for (std::size_t d = 0; d < days; ++d) {
        const std::size_t row = (first_day + d) * kHoursPerDay;
        t.origins.push_back(f.timestamps[row]);
        t.values.emplace_back(f.target.begin() + static_cast<std::ptrdiff_t>(row),
                              f.target.begin() + static_cast<std::ptrdiff_t>(row + kHoursPerDay));
    }
    write_forecast_csv(out, t);
}

TEST_F(CliTest, EvaluatePerfectForecastsGivesZeros) {
    ASSERT_EQ(run("synth --days 60 --seed 2 --out d.csv").code, 0);
    write_actuals_as_forecasts(dir / "d.csv", 14, 30, dir / "perfect.csv");
    const CliRun r = run("evaluate --forecasts perfect.csv --data d.csv --out metrics.json");
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(slurp(dir / "metrics.json"));
    for (const char* k : {"mae", "rmae", "smape", "rmse"}) EXPECT_EQ(j.at(k).get<double>(), 0.0) << k;
    EXPECT_EQ(j.at("n_days"), 30);
}

TEST_F(CliTest, EvaluateOutsideDataExitsTwo) {
    ASSERT_EQ(run("synth --days 60 --seed 2 --out d.csv").code, 0);
    write("late.csv", "origin_date,h00\n2030-01-01,1\n");
    EXPECT_EQ(run("evaluate --forecasts late.csv --data d.csv --out m.json").code, 2);
}

TEST_F(CliTest, GwTestOfIdenticalFilesIsOne) {
    ASSERT_EQ(run("synth --days 60 --seed 2 --out d.csv").code, 0);
    write_actuals_as_forecasts(dir / "d.csv", 7, 40, dir / "a.csv");
    {
        ForecastTable t = read_forecast_csv(dir / "a.csv");
        for (auto& day : t.values)
            for (double& v : day) v += 1.0;
        write_forecast_csv(dir / "shifted.csv", t);
    }
    const CliRun r = run("gwtest --forecasts shifted.csv shifted.csv --data d.csv --out gw.csv");
    ASSERT_EQ(r.code, 0) << r.err;
    const auto lines = lines_of(dir / "gw.csv");
    ASSERT_EQ(lines.size(), 3u);
    EXPECT_EQ(lines[0], "model,shifted,shifted");
    EXPECT_EQ(lines[1], "shifted,1,1");
    EXPECT_EQ(lines[2], "shifted,1,1");
}

TEST_F(CliTest, GwTestMisalignedExitsTwoNamingSpans) {
    ASSERT_EQ(run("synth --days 60 --seed 2 --out d.csv").code, 0);
    write_actuals_as_forecasts(dir / "d.csv", 7, 40, dir / "a.csv");
    write_actuals_as_forecasts(dir / "d.csv", 8, 40, dir / "b.csv");
    const CliRun r = run("gwtest --forecasts a.csv b.csv --data d.csv --out gw.csv");
    EXPECT_EQ(r.code, 2);
    const std::string msg = nlohmann::json::parse(r.err).at("message");
    EXPECT_NE(msg.find("a.csv covers 2015-01-12..2015-02-20"), std::string::npos) << msg;
    EXPECT_NE(msg.find("b.csv covers 2015-01-13..2015-02-21"), std::string::npos) << msg;
}

TEST_F(CliTest, SearchBudgetFiveGivesFiveRankedRows) {
    prepare(R"(,"train_days":90,"validation_days":7,"search_family":"interpretable","max_iterations":4,"eval_every":2)");
    const CliRun r = run("search --config cfg.json --budget 5 --out s/ranked.csv");
    ASSERT_EQ(r.code, 0) << r.err;
    const auto lines = lines_of(dir / "s/ranked.csv");
    ASSERT_EQ(lines.size(), 6u);
    EXPECT_EQ(lines[0].substr(0, 27), "rank,trial,validation_mae,a");
    double prev = -1.0;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto f = split_fields(lines[i]);
        EXPECT_EQ(f[0], std::to_string(i));
        const double mae = *parse_number(f[2]);
        EXPECT_GE(mae, prev);
        prev = mae;
    }
    const auto best = nlohmann::json::parse(slurp(dir / "s/best_config.json"));
    EXPECT_NO_THROW(cli::parse_run_config(best));
}

}  // namespace
