#include <benchmark/benchmark.h>

#include "mkv/catalog.hpp"

using namespace mkv;

namespace {

const ManifoldSpec& halfspace() {
  static const ManifoldSpec spec = catalog_entry("olszak-halfspace").spec;
  return spec;
}

const ManifoldSpec& flat() {
  static const ManifoldSpec spec = catalog_entry("flat-r3").spec;
  return spec;
}

const std::vector<double> kPoint = {0.2, -0.3, 1.7};

void BM_ParseEval(benchmark::State& state) {
  const std::vector<std::string> coords = {"x", "y", "z"};
  const std::vector<std::string> params;
  for (auto _ : state) {
    const Expression e =
        parse_expression("exp(2*x)/z^2 + sin(y)*cos(x*z) - sqrt(1 + x^2)", coords, params);
    benchmark::DoNotOptimize(e.eval(kPoint, {}, 3));
  }
}
BENCHMARK(BM_ParseEval);

void BM_GeometryCache(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(geometry_at(halfspace(), kPoint));
}
BENCHMARK(BM_GeometryCache);

void BM_SecondDerivativeOfMetric(benchmark::State& state) {
  const GeometryCache geo = geometry_at(flat(), kPoint);
  const FieldJets v = field_jets(flat(), "V", kPoint, 2);
  for (auto _ : state) benchmark::DoNotOptimize(second_lie_derivative_metric(geo, v));
}
BENCHMARK(BM_SecondDerivativeOfMetric);

void BM_StructureAtPoint(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(structure_at(halfspace(), kPoint));
}
BENCHMARK(BM_StructureAtPoint);

void BM_ClassifyField(benchmark::State& state) {
  CheckOptions opt;
  opt.grid = 3;
  for (auto _ : state) benchmark::DoNotOptimize(classify_field(flat(), "V", opt));
}
BENCHMARK(BM_ClassifyField);

void BM_ReproduceChecklist(benchmark::State& state) {
  CheckOptions opt;
  opt.grid = 2;
  for (auto _ : state) benchmark::DoNotOptimize(reproduce_entry("flat-r3", opt));
}
BENCHMARK(BM_ReproduceChecklist);

}  // namespace

BENCHMARK_MAIN();
