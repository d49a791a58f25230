#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "advscen/geometry.hpp"
#include "advscen/hybrid_rl.hpp"
#include "advscen/nn.hpp"
#include "advscen/policies.hpp"
#include "advscen/random.hpp"
#include "advscen/replay_buffer.hpp"
#include "advscen/traffic_sim.hpp"

namespace {

using namespace advscen;

std::vector<OrientedRect> random_rects(std::size_t n, Rng& rng) {
  std::vector<OrientedRect> out;
  const VehicleDims dims;
  for (std::size_t i = 0; i < n; ++i) {
    VehicleState s{uniform(rng, 0, 10), uniform(rng, 0, 4), 20.0, uniform(rng, -0.5, 0.5)};
    out.push_back(footprint(s, dims));
  }
  return out;
}

void BM_RectOverlap(benchmark::State& state) {
  Rng rng(1);
  const auto rects = random_rects(256, rng);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(rect_overlap(rects[i % 256], rects[(i * 7 + 3) % 256]));
    ++i;
  }
}
BENCHMARK(BM_RectOverlap);

void BM_RectMinDistance(benchmark::State& state) {
  Rng rng(2);
  const auto rects = random_rects(256, rng);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(rect_min_distance(rects[i % 256], rects[(i * 7 + 3) % 256]));
    ++i;
  }
}
BENCHMARK(BM_RectMinDistance);

void BM_EnvStep(benchmark::State& state) {
  const EnvConfig cfg;
  SyntheticInit init;
  init.n_bv = static_cast<std::size_t>(state.range(0));
  PolicySpec spec;
  spec.kind = PolicyKind::uniform;
  auto av = make_av_controller(spec, cfg);
  Rng rng(3);
  Scene scene = env_reset(cfg, init, rng);
  const std::vector<VehicleAction> idle(init.n_bv);
  for (auto _ : state) {
    StepOutcome o = env_step(scene, idle, *av, cfg, rng);
    scene = o.terminal() ? env_reset(cfg, init, rng) : std::move(o.next_scene);
    benchmark::DoNotOptimize(scene);
  }
}
BENCHMARK(BM_EnvStep)->Arg(1)->Arg(4);

void BM_MlpForward(benchmark::State& state) {
  Rng rng(4);
  const auto batch = static_cast<Eigen::Index>(state.range(0));
  const nn::Mlp net = nn::Mlp::random({10, 64, 64, 1}, nn::Activation::relu, rng);
  const nn::Matrix x = nn::Matrix::Random(10, batch);
  for (auto _ : state) benchmark::DoNotOptimize(net.forward(x));
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_MlpForward)->Arg(1)->Arg(128);

Transition random_transition(std::size_t n_bv, Rng& rng) {
  Transition t;
  for (std::size_t i = 0; i < kStateDim * (n_bv + 1); ++i) {
    t.s.push_back(uniform(rng, 0, 30));
    t.s_next.push_back(uniform(rng, 0, 30));
  }
  for (std::size_t i = 0; i < kActionDim * n_bv; ++i) t.a.push_back(uniform(rng, -0.05, 0.05));
  t.r = uniform(rng, -20, 0);
  return t;
}

void BM_SacUpdate(benchmark::State& state) {
  const EnvConfig env;
  TrainConfig cfg;
  cfg.batch_size = static_cast<std::size_t>(state.range(0));
  cfg.sim_real_ratio = 1.0;
  Rng rng(5);
  ReplayBuffer sim(4096), real(4096);
  for (int i = 0; i < 4096; ++i) {
    sim.push(random_transition(1, rng));
    real.push(random_transition(1, rng));
  }
  SacAgent agent = make_agent(Role::bv, 1, cfg, rng);
  for (auto _ : state) {
    const MixedBatch b = mixed_batch(sim, real, cfg.sim_real_ratio, cfg.batch_size, rng);
    benchmark::DoNotOptimize(sac_update(agent, b, cfg, env, rng));
  }
}
BENCHMARK(BM_SacUpdate)->Arg(32)->Arg(128)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
