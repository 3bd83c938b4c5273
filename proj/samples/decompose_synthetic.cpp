// Trains an interpretable model on a synthetic series and prints the
// decomposition of the first day after the training span.

#include "nbeatsx/data/synth.hpp"
#include "nbeatsx/training/recalibration.hpp"

#include <cstdio>

int main() {
    using namespace nbeatsx;
    const SyntheticSeries s = synth_generate(240, 11);
    const std::size_t origin = 200 * kHoursPerDay;

    ModelConfig m = interpretable_preset(168, 24, s.frame.n_covariates(), 64);
    TrainConfig t;
    t.max_iterations = 1500;
    t.batch_size = 64;
    t.early_stop_weeks = 4;

    const FittedModel fitted = fit_history(s.frame, origin, t, m);
    const DailyForecast f = forecast_at(fitted.result.model, fitted.stats, s.frame, origin);
    const ForecastDecomposition& d = f.decomposition;

    std::printf("trained %zu iterations, best at %zu\n", fitted.result.iterations_run, fitted.result.best_iteration);
    std::printf("hour %9s %9s", "actual", "level");
    for (const auto& n : d.names) std::printf(" %11s", n.c_str());
    std::printf(" %9s\n", "forecast");
    for (std::size_t h = 0; h < d.horizon(); ++h) {
        std::printf("%4zu %9.3f %9.3f", h, s.frame.target[origin + h], d.level);
        for (const auto& c : d.components) std::printf(" %11.3f", c[h]);
        std::printf(" %9.3f\n", d.forecast[h]);
    }
}
