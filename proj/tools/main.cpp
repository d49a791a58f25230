#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "advscen/errors.hpp"
#include "commands.hpp"

using namespace advscen;

int main(int argc, char** argv) {
  CLI::App app{"Adversarial traffic scenario generation with hybrid offline/online RL"};
  app.require_subcommand(1);
  std::vector<std::string> args(argv, argv + argc);

  cli::IngestArgs ingest;
  auto* c_ingest = app.add_subcommand("ingest", "Extract segments and transitions from track CSVs");
  c_ingest->add_option("--input", ingest.inputs, "Track CSV files")->required();
  c_ingest->add_option("--config", ingest.config, "Configuration file");
  c_ingest->add_option("--out", ingest.out, "Output directory");
  c_ingest->add_flag("--dry-run", ingest.dry_run, "Print the report without writing");

  cli::SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth-ndd", "Generate a synthetic naturalistic corpus");
  c_synth->add_option("--config", synth.config, "Configuration file");
  c_synth->add_option("--out", synth.out, "Output directory")->required();
  c_synth->add_option("--seed", synth.seed, "Overrides synth.seed");

  auto add_train = [&](CLI::App* c, cli::TrainArgs& t) {
    c->add_option("--config", t.config, "Configuration file");
    c->add_option("--ndd", t.ndd, "Directory written by ingest");
    c->add_option("--av-policy", t.av_policy, "AV model name or checkpoint");
    c->add_option("--bv-policy", t.bv_policy, "BV model name or checkpoint");
    c->add_option("--out", t.out, "Output directory")->required();
    c->add_option("--ratio", t.ratio, "Simulation/real sampling ratio (number or inf)");
    c->add_option("--beta", t.beta, "Regulariser scale");
    c->add_option("--steps", t.steps, "Gradient steps");
    c->add_option("--seed", t.seed, "Training seed");
    c->add_option("--resume", t.resume, "Trainer state to resume from");
  };
  cli::TrainArgs train_bv, train_av, finetune;
  auto* c_tbv = app.add_subcommand("train-bv", "Train adversarial BVs");
  add_train(c_tbv, train_bv);
  auto* c_tav = app.add_subcommand("train-av", "Train the AV with soft actor-critic");
  add_train(c_tav, train_av);
  auto* c_ft = app.add_subcommand("finetune", "Alternate BV and AV training phases");
  add_train(c_ft, finetune);

  cli::EvalArgs eval;
  auto* c_eval = app.add_subcommand("evaluate", "Evaluate an AV against BV models");
  c_eval->add_option("--config", eval.config, "Configuration file");
  c_eval->add_option("--ndd", eval.ndd, "Directory written by ingest");
  c_eval->add_option("--bv", eval.bv, "BV model name or checkpoint");
  c_eval->add_option("--av", eval.av, "AV model name or checkpoint");
  c_eval->add_option("--episodes", eval.episodes, "Episodes per seed");
  c_eval->add_option("--seeds", eval.seeds, "Evaluation seeds")->delimiter(',');
  c_eval->add_option("--out", eval.out, "Output directory")->required();
  c_eval->add_flag("--record", eval.record, "Write every episode as a scenario log");

  cli::ReportArgs report;
  auto* c_report = app.add_subcommand("report", "Histograms and PCA data from run outputs");
  c_report->add_option("--config", report.config, "Configuration file");
  c_report->add_option("--logs", report.logs, "Directory written by evaluate or train-bv")->required();
  c_report->add_option("--out", report.out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (c_ingest->parsed()) return cli::cmd_ingest(ingest, args);
    if (c_synth->parsed()) return cli::cmd_synth_ndd(synth, args);
    if (c_tbv->parsed()) return cli::cmd_train_bv(train_bv, args);
    if (c_tav->parsed()) return cli::cmd_train_av(train_av, args);
    if (c_ft->parsed()) return cli::cmd_finetune(finetune, args);
    if (c_eval->parsed()) return cli::cmd_evaluate(eval, args);
    if (c_report->parsed()) return cli::cmd_report(report, args);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const SchemaError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
