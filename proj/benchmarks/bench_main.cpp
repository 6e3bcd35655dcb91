#include "hrlf/frf.hpp"
#include "hrlf/msm.hpp"
#include "hrlf/nn.hpp"
#include "hrlf/ops.hpp"
#include "hrlf/trainer.hpp"

#include <benchmark/benchmark.h>

using namespace hrlf;

namespace {

// Default desk-scale shapes, one training batch.
struct DeskBatch {
  data::Dataset ds;
  ModelConfig model;
  Batch batch;

  explicit DeskBatch(std::size_t batch_size) {
    data::SyntheticConfig sc;
    sc.splits = {{"train", batch_size}};
    ds = data::generate_synthetic(sc);
    model = ModelConfig::for_dataset(ds.manifest);
    batch = make_batch(std::span<const data::MultimodalSample>(ds.splits[0].samples));
  }
};

void BM_EncoderForward(benchmark::State& state) {
  const DeskBatch desk(static_cast<std::size_t>(state.range(0)));
  Rng rng(1);
  const encoder::ModalityEncoder enc(desk.model.input_dims[0], desk.model.encoder, rng);
  const ag::NoGradGuard guard;
  for (auto _ : state) {
    benchmark::DoNotOptimize(enc(Var(desk.batch.inputs[0]), desk.batch.size, desk.batch.seq_len[0], nullptr));
  }
}
BENCHMARK(BM_EncoderForward)->Arg(32)->Unit(benchmark::kMicrosecond);

void BM_EncoderBackward(benchmark::State& state) {
  const DeskBatch desk(static_cast<std::size_t>(state.range(0)));
  Rng rng(1);
  const encoder::ModalityEncoder enc(desk.model.input_dims[0], desk.model.encoder, rng);
  Rng dropout(2);
  for (auto _ : state) {
    const auto out = enc(Var(desk.batch.inputs[0]), desk.batch.size, desk.batch.seq_len[0], &dropout);
    ag::mean(out.summary).backward();
  }
}
BENCHMARK(BM_EncoderBackward)->Arg(32)->Unit(benchmark::kMicrosecond);

void BM_FrfLoss(benchmark::State& state) {
  const auto d = static_cast<Index>(state.range(0));
  Rng rng(3);
  const frf::FrfParams params(d, rng);
  frf::ModalityVars z;
  for (auto& v : z) v = Var::parameter(Matrix::Random(32, d));
  for (auto _ : state) frf::loss_frf(z, params).total.backward();
}
BENCHMARK(BM_FrfLoss)->Arg(32)->Unit(benchmark::kMicrosecond);

void BM_StudentStep(benchmark::State& state) {
  const DeskBatch desk(static_cast<std::size_t>(state.range(0)));
  const Network teacher(desk.model, Role::teacher, 1);
  const Network student(desk.model, Role::student, 2);
  const Index d = desk.model.encoder.embed_dim;
  Rng rng(3);
  const hmi::StatisticsNets stats(d, desk.model.statistics_width(), rng);
  const hal::ScaleDiscriminators discs(d, rng);
  nn::ParamList list = student.parameters();
  stats.collect(list, "stats");
  nn::Adam opt(nn::vars_of(list), nn::AdamOptions{});
  const train::TrainConfig cfg;
  Rng dropout(4);
  for (auto _ : state) {
    NetworkOutput t;
    {
      const ag::NoGradGuard guard;
      t = teacher.forward(desk.batch, nullptr);
    }
    const auto s = student.forward(desk.batch, &dropout);
    opt.zero_grad();
    train::student_objective(student, s, t, desk.batch.labels, stats, discs, cfg, 5).total.backward();
    opt.step();
  }
}
BENCHMARK(BM_StudentStep)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_ApplyMsm(benchmark::State& state) {
  data::SyntheticConfig sc;
  sc.splits = {{"train", 1}};
  const auto ds = data::generate_synthetic(sc);
  const auto& sample = ds.splits[0].samples[0];
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(msm::apply_msm(sample, msm::MissingSpec::uniform(0.5, msm::ModalitySet::all(), ++seed)));
  }
}
BENCHMARK(BM_ApplyMsm);

}  // namespace
BENCHMARK_MAIN();
