#include "codetree/gauge.hpp"
#include "codetree/measure.hpp"
#include "codetree/rifs.hpp"

#include <benchmark/benchmark.h>

#include <memory>

using namespace codetree;

namespace {

Ifs ifs_of(std::string label, std::vector<double> ratios) {
  Ifs out{std::move(label), {}};
  for (double c : ratios) out.maps.emplace_back(c);
  return out;
}

std::shared_ptr<const RifsFamily> worked() {
  return std::make_shared<const RifsFamily>(
      std::vector<Ifs>{ifs_of("A", {1.0 / 3, 1.0 / 3}), ifs_of("B", {1.0 / 3, 1.0 / 3, 1.0 / 3})},
      std::vector<double>{0.5, 0.5}, 1);
}

std::vector<std::uint64_t> linear_depths(std::uint64_t n) {
  std::vector<std::uint64_t> d;
  for (std::uint64_t k = 1; k <= n; ++k) d.push_back(k);
  return d;
}

void BM_Dimension(benchmark::State& state) {
  const auto f = worked();
  const auto model = state.range(0) == 0 ? DimensionModel::homogeneous : DimensionModel::recursive;
  for (auto _ : state) benchmark::DoNotOptimize(dimension(*f, model));
}
BENCHMARK(BM_Dimension)->Arg(0)->Arg(1);

void BM_GaugeEval(benchmark::State& state) {
  const auto h = GaugeFunction::h1(0.8154648767857287, 0.0374, 0.5);
  double log_t = -1e2;
  for (auto _ : state) {
    benchmark::DoNotOptimize(h.eval_log(log_t));
    log_t = log_t < -1e6 ? -1e2 : log_t * 1.01;
  }
}
BENCHMARK(BM_GaugeEval);

void BM_LevelSumsClosedForm(benchmark::State& state) {
  const auto f = worked();
  const Realization r(ModelSpec::homogeneous(), 1, f);
  const auto h = GaugeFunction::power(0.8154648767857287);
  const auto depths = linear_depths(static_cast<std::uint64_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(level_sums_closed_form(r, h, depths));
}
BENCHMARK(BM_LevelSumsClosedForm)->Arg(1000)->Arg(10000);

void BM_LevelSumsStreaming(benchmark::State& state) {
  const auto f = worked();
  const Realization r(ModelSpec::recursive(), 1, f);
  const auto h = GaugeFunction::power(0.8340437671464697);
  const auto depths = linear_depths(static_cast<std::uint64_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(level_sums_streaming(r, h, depths));
}
BENCHMARK(BM_LevelSumsStreaming)->Arg(8)->Arg(12);

void BM_SectionInfimum(benchmark::State& state) {
  const auto f = worked();
  const Realization r(ModelSpec::recursive(), 3, f);
  const auto h = GaugeFunction::power(0.8340437671464697);
  const auto cap = static_cast<std::uint64_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(section_infimum(r, h, 1, cap));
}
BENCHMARK(BM_SectionInfimum)->Arg(6)->Arg(10);

void BM_Drift(benchmark::State& state) {
  const auto f = worked();
  DriftConfig cfg;
  cfg.n_realizations = 100;
  cfg.depths = linear_depths(1000);
  cfg.workers = static_cast<unsigned>(state.range(0));
  const auto h = GaugeFunction::power(0.8154648767857287);
  for (auto _ : state) benchmark::DoNotOptimize(drift_experiment(f, ModelSpec::homogeneous(), h, cfg));
}
BENCHMARK(BM_Drift)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
