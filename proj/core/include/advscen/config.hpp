#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "advscen/hybrid_rl.hpp"
#include "advscen/ndd.hpp"
#include "advscen/policies.hpp"
#include "advscen/traffic_sim.hpp"

namespace advscen {

struct NddConfig {
  FilterSpec filter;
  double proximity = 50.0;     ///< m, centre distance that keeps a group together
  std::size_t min_frames = 10;
};

struct SynthSection {
  SynthConfig synth;
  std::uint64_t seed = 0;
};

struct EvalConfig {
  std::size_t episodes = 100;
  std::vector<std::uint64_t> seeds = {0, 1, 2};
  bool bv_stochastic = false;
  /// "ndd": head frames of the ingested segments; "synthetic": random scenes;
  /// "auto": ndd when an ingested corpus is supplied.
  std::string init = "auto";
};

struct ReportConfig {
  std::vector<double> following_edges = linear_edges(0.0, 100.0, 20);
  std::vector<double> lateral_edges = linear_edges(-12.0, 12.0, 24);
  std::vector<double> collision_edges = linear_edges(0.0, 120.0, 12);
};

/// Fine-tuning schedule.
struct FinetuneConfig {
  std::size_t phases = 2;
  std::size_t phase_len = 200;
  std::size_t eval_episodes = 4;
};

struct AppConfig {
  EnvConfig env;
  SyntheticInit synthetic_init;  ///< its n_bv is the task's BV count
  PolicySpec av;  ///< AV model used by train-bv and evaluate
  PolicySpec bv;  ///< BV model used by train-av and evaluate
  NddConfig ndd;
  SynthSection synth;
  TrainConfig train;
  FinetuneConfig finetune;
  EvalConfig eval;
  ReportConfig report;
};

/// Environment variable naming the default configuration file.
inline constexpr const char* kConfigEnvVar = "ADVSCEN_CONFIG";

/// JSON document with optional sections env, av, bv, ndd, synth, train,
/// finetune, eval and report; absent keys keep their defaults and unknown keys
/// are rejected. Throws ConfigError.
AppConfig parse_config(const std::string& json_text);
AppConfig load_config(const std::string& path);
/// Canonical JSON of a configuration (every key present).
std::string dump_config(const AppConfig& cfg);

PolicySpec parse_policy_spec(const std::string& json_text);

}  // namespace advscen
