#include <benchmark/benchmark.h>

#include <fstream>
#include <sstream>

#include "hyrql/analysis.hpp"
#include "hyrql/canonical.hpp"
#include "hyrql/eval.hpp"
#include "hyrql/parser.hpp"
#include "hyrql/translate.hpp"
#include "hyrql/typecheck.hpp"

using namespace hyrql;

namespace {

SourceFile load(const char* file) {
  std::ifstream in(std::string(HYRQL_CORPUS_DIR) + "/" + file);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void BM_ReduceHadamard(benchmark::State& st) {
  SourceFile src = load("hadamard.hyrql");
  for (auto _ : st) benchmark::DoNotOptimize(reduce(src.registry, src.entry()->term, 1000));
}
BENCHMARK(BM_ReduceHadamard);

void BM_ReduceAckermann(benchmark::State& st) {
  SourceFile src = load("ackermann.hyrql");
  TermPtr t = mk_apps(src.find("ack")->term, {mk_nat(2), mk_nat(static_cast<unsigned>(st.range(0)))});
  for (auto _ : st) benchmark::DoNotOptimize(reduce(src.registry, t, 1000000));
}
BENCHMARK(BM_ReduceAckermann)->DenseRange(0, 3);

void BM_RewriteAckermann(benchmark::State& st) {
  SourceFile src = load("ackermann.hyrql");
  Translation tr = translate_entry(src.find("ack")->term, src.registry);
  trs::STermPtr t = trs::s_apply(trs::s_fn("ack"), {trs::s_nat(2), trs::s_nat(static_cast<unsigned>(st.range(0)))});
  for (auto _ : st) benchmark::DoNotOptimize(trs::rewrite_star(tr.system, t, 1000000));
}
BENCHMARK(BM_RewriteAckermann)->DenseRange(0, 3);

void BM_TranslateKeygen(benchmark::State& st) {
  SourceFile src = load("keygen.hyrql");
  for (auto _ : st) benchmark::DoNotOptimize(translate_entry(src.entry()->term, src.registry));
}
BENCHMARK(BM_TranslateKeygen);

void BM_TypecheckQuantumSwitch(benchmark::State& st) {
  SourceFile src = load("qs.hyrql");
  const Definition* d = src.find("QS");
  for (auto _ : st) {
    TypeChecker tc(src.registry);
    benchmark::DoNotOptimize(tc.check(d->term, d->type));
  }
}
BENCHMARK(BM_TypecheckQuantumSwitch);

void BM_CanonicalizeWideSum(benchmark::State& st) {
  std::vector<SumItem> items;
  for (int i = 0; i < st.range(0); ++i)
    items.push_back({Amplitude::zeta(i % 8), mk_pair(mk_nat(static_cast<unsigned>(i % 7)), mk_ket(i % 2))});
  TermPtr t = mk_sum(items);
  for (auto _ : st) benchmark::DoNotOptimize(canonicalize(t));
}
BENCHMARK(BM_CanonicalizeWideSum)->RangeMultiplier(4)->Range(4, 256);

void BM_LpoAckermann(benchmark::State& st) {
  SourceFile src = load("ackermann.hyrql");
  trs::Sttrs R = translate_entry(src.find("ack")->term, src.registry).system;
  for (auto _ : st) benchmark::DoNotOptimize(analysis::lpo_terminates(R));
}
BENCHMARK(BM_LpoAckermann);

} // namespace

BENCHMARK_MAIN();
