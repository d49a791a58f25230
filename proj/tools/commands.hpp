#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace advscen::cli {

struct IngestArgs {
  std::vector<std::string> inputs;
  std::string config;
  std::string out;
  bool dry_run = false;
};

struct SynthArgs {
  std::string config;
  std::string out;
  long long seed = -1;  // -1: from config
};

struct TrainArgs {
  std::string config;
  std::string ndd;
  std::string av_policy;
  std::string bv_policy;
  std::string out;
  std::string ratio;
  double beta = -1.0;
  long long steps = -1;
  long long seed = -1;
  std::string resume;
};

struct EvalArgs {
  std::string config;
  std::string ndd;
  std::string bv;
  std::string av;
  long long episodes = -1;
  std::vector<std::uint64_t> seeds;
  std::string out;
  bool record = false;
};

struct ReportArgs {
  std::string config;
  std::string logs;
  std::string out;
};

int cmd_ingest(const IngestArgs& a, const std::vector<std::string>& argv);
int cmd_synth_ndd(const SynthArgs& a, const std::vector<std::string>& argv);
int cmd_train_bv(const TrainArgs& a, const std::vector<std::string>& argv);
int cmd_train_av(const TrainArgs& a, const std::vector<std::string>& argv);
int cmd_finetune(const TrainArgs& a, const std::vector<std::string>& argv);
int cmd_evaluate(const EvalArgs& a, const std::vector<std::string>& argv);
int cmd_report(const ReportArgs& a, const std::vector<std::string>& argv);

}  // namespace advscen::cli
