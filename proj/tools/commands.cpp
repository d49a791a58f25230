#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "advscen/config.hpp"
#include "advscen/errors.hpp"
#include "advscen/hybrid_rl.hpp"
#include "advscen/metrics.hpp"
#include "advscen/ndd.hpp"
#include "advscen/policies.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace advscen::cli {

namespace {

AppConfig resolve_config(const std::string& flag, std::string& used_path) {
  used_path = flag;
  if (used_path.empty()) {
    if (const char* env = std::getenv(kConfigEnvVar)) used_path = env;
  }
  return used_path.empty() ? parse_config("{}") : load_config(used_path);
}

std::string iso_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string run_id(const std::string& command, const AppConfig& cfg,
                   const std::vector<std::string>& argv) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    h ^= 0xff;
    h *= 0x100000001b3ULL;
  };
  mix(command);
  mix(dump_config(cfg));
  for (std::size_t i = 1; i < argv.size(); ++i) mix(argv[i]);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + dir + ": " + ec.message());
}

std::ofstream open_out(const fs::path& p, bool binary = false) {
  std::ofstream out(p, binary ? std::ios::binary : std::ios::out);
  if (!out) throw ConfigError("cannot write " + p.string());
  return out;
}

std::ifstream open_in(const fs::path& p, bool binary = false) {
  if (!fs::exists(p)) throw ConfigError("file not found: " + p.string());
  std::ifstream in(p, binary ? std::ios::binary : std::ios::in);
  if (!in) throw ConfigError("cannot open " + p.string());
  return in;
}

void write_manifest(const std::string& out, const std::string& command, const std::string& config_path,
                    const std::vector<std::uint64_t>& seeds, const AppConfig& cfg,
                    const std::vector<std::string>& argv, const std::string& started) {
  json m{{"command", command},
         {"config_path", config_path},
         {"seeds", seeds},
         {"output_dir", out},
         {"run_id", run_id(command, cfg, argv)},
         {"argv", std::vector<std::string>(argv.begin() + 1, argv.end())},
         {"started", started},
         {"finished", iso_now()}};
  open_out(fs::path(out) / "manifest.json") << m.dump(2) << '\n';
  open_out(fs::path(out) / "config.json") << dump_config(cfg) << '\n';
}

// --- corpus files -------------------------------------------------------------------

fs::path transitions_file(const std::string& dir, std::size_t n_bv) {
  return fs::path(dir) / ("transitions_n" + std::to_string(n_bv) + ".txt");
}
fs::path heads_file(const std::string& dir, std::size_t n_bv) {
  return fs::path(dir) / ("heads_n" + std::to_string(n_bv) + ".txt");
}

void write_heads(const std::vector<Scene>& heads, std::size_t n_bv, std::ostream& out) {
  out << "# advscen-heads v1 n_bv=" << n_bv << " count=" << heads.size() << '\n';
  char buf[40];
  for (const auto& h : heads) {
    bool first = true;
    for (double v : flatten_scene(h)) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << (first ? "" : " ") << buf;
      first = false;
    }
    out << '\n';
  }
}

std::vector<Scene> read_heads(std::istream& in) {
  std::string line;
  std::size_t n_bv = 0, count = 0;
  if (!std::getline(in, line) ||
      std::sscanf(line.c_str(), "# advscen-heads v1 n_bv=%zu count=%zu", &n_bv, &count) != 2) {
    throw ParseError("missing head-frame header", 1);
  }
  std::vector<Scene> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::vector<double> v;
    double x = 0;
    while (ss >> x) v.push_back(x);
    if (v.size() != kStateDim * (n_bv + 1)) throw ParseError("head frame of the wrong length", lineno);
    out.push_back(unflatten_scene(v));
  }
  if (out.size() != count) throw ParseError("head-frame count does not match the header", lineno);
  return out;
}

std::vector<Transition> load_transitions(const std::string& dir, std::size_t n_bv) {
  auto in = open_in(transitions_file(dir, n_bv));
  return read_transitions(in);
}

InitSource resolve_init(const AppConfig& cfg, const std::string& ndd_dir) {
  const std::string mode = cfg.eval.init == "auto" ? (ndd_dir.empty() ? "synthetic" : "ndd") : cfg.eval.init;
  if (mode == "synthetic") return cfg.synthetic_init;
  if (ndd_dir.empty()) throw ConfigError("--ndd is required when eval.init is \"ndd\"");
  auto in = open_in(heads_file(ndd_dir, cfg.synthetic_init.n_bv));
  PoolInit pool{read_heads(in)};
  if (pool.scenes.empty()) throw ConfigError("no head frames with the configured BV count in " + ndd_dir);
  return pool;
}

// Policy name, or a checkpoint path for a learned policy.
PolicySpec policy_from_arg(const std::string& arg, PolicySpec base) {
  if (arg.empty()) return base;
  try {
    base.kind = policy_kind_from_name(arg);
    return base;
  } catch (const ConfigError&) {
    if (!fs::exists(arg)) throw;
  }
  base.kind = PolicyKind::learned;
  base.checkpoint = arg;
  return base;
}

void apply_train_overrides(const TrainArgs& a, AppConfig& cfg) {
  if (!a.ratio.empty()) cfg.train.sim_real_ratio = parse_ratio(a.ratio);
  if (a.beta >= 0.0) cfg.train.beta = a.beta;
  if (a.steps >= 0) cfg.train.total_steps = static_cast<std::size_t>(a.steps);
  if (a.seed >= 0) cfg.train.seed = static_cast<std::uint64_t>(a.seed);
  validate(cfg.train);
}

class CsvLog {
 public:
  explicit CsvLog(const fs::path& p) : out_(open_out(p)) { write_log_header(out_); }
  void operator()(const LogRow& row) {
    write_log_row(row, out_);
    out_.flush();
  }

 private:
  std::ofstream out_;
};

void write_q_samples(const Trainer& tr, const std::string& out) {
  Rng rng(derive_seed(tr.config().seed, 7));
  auto dump = [&](const ReplayBuffer& buf, const char* name) {
    std::vector<Transition> picked;
    const std::size_t n = std::min<std::size_t>(500, buf.size());
    for (std::size_t i : buf.sample_indices(n, rng)) picked.push_back(buf.at(i));
    auto f = open_out(fs::path(out) / name);
    write_transitions(picked, f);
  };
  dump(tr.real_buffer(), "q_samples_real.txt");
  dump(tr.sim_buffer(), "q_samples_sim.txt");
  auto f = open_out(fs::path(out) / "critic_q1.bin", true);
  nn::save_mlp(tr.agent().q1, f);
}

void print_report(const MetricsReport& r, const char* label) {
  std::printf("%s: episodes=%zu collisions=%zu CR=%.2f%% CPS=%.4g CPM=%.4g/100m\n", label, r.n_episodes,
              r.n_collisions, r.cr, r.cps, r.cpm_per_100m);
}

}  // namespace

// --- ingest -------------------------------------------------------------------------

int cmd_ingest(const IngestArgs& a, const std::vector<std::string>& argv) {
  const std::string started = iso_now();
  std::string cfg_path;
  const AppConfig cfg = resolve_config(a.config, cfg_path);
  if (!a.dry_run && a.out.empty()) throw ConfigError("--out is required unless --dry-run is given");
  for (const auto& f : a.inputs) {
    if (!fs::exists(f)) throw ConfigError("input file not found: " + f);
  }

  std::size_t rows = 0, vehicles = 0;
  ExtractStats total;
  std::map<std::size_t, std::vector<Transition>> transitions;
  std::map<std::size_t, std::vector<Scene>> heads;
  std::map<std::size_t, std::size_t> segments_by_n;
  for (const auto& f : a.inputs) {
    auto in = open_in(f);
    const std::vector<TrackRow> tracks = parse_tracks(in);
    rows += tracks.size();
    for (std::size_t i = 0; i < tracks.size(); ++i) {
      if (i == 0 || tracks[i].vehicle_id != tracks[i - 1].vehicle_id) ++vehicles;
    }
    ExtractStats st;
    const std::vector<Segment> segs =
        extract_segments(tracks, cfg.ndd.filter, cfg.ndd.proximity, cfg.ndd.min_frames, &st);
    total.windows += st.windows;
    total.rejected_short += st.rejected_short;
    total.rejected_kinematics += st.rejected_kinematics;
    total.segments += st.segments;
    for (const auto& s : segs) {
      const std::size_t n = s.bv_count();
      ++segments_by_n[n];
      heads[n].push_back(segment_scene(s, 0));
      const auto tr = build_transitions(s, cfg.env);
      transitions[n].insert(transitions[n].end(), tr.begin(), tr.end());
    }
  }

  json report{{"inputs", a.inputs},
              {"rows", rows},
              {"vehicles", vehicles},
              {"windows", total.windows},
              {"rejected_short", total.rejected_short},
              {"rejected_kinematics", total.rejected_kinematics},
              {"segments", total.segments}};
  const double considered = static_cast<double>(total.segments + total.rejected_kinematics);
  report["filter_pass_rate"] = considered > 0 ? static_cast<double>(total.segments) / considered : 1.0;
  json by_n = json::object();
  for (const auto& [n, count] : segments_by_n) {
    by_n[std::to_string(n)] = {{"segments", count}, {"transitions", transitions[n].size()}};
  }
  report["by_n_bv"] = by_n;

  if (a.dry_run) {
    std::printf("%s\n", report.dump(2).c_str());
    return 0;
  }
  ensure_dir(a.out);
  for (const auto& [n, tr] : transitions) {
    auto f = open_out(transitions_file(a.out, n));
    write_transitions(tr, f);
    auto h = open_out(heads_file(a.out, n));
    write_heads(heads[n], n, h);
  }
  open_out(fs::path(a.out) / "ingest_report.json") << report.dump(2) << '\n';
  write_manifest(a.out, "ingest", cfg_path, {}, cfg, argv, started);
  std::printf("ingested %zu rows: %zu segments, %zu rejected by the kinematic filter\n", rows,
              total.segments, total.rejected_kinematics);
  return 0;
}

// --- synth-ndd ----------------------------------------------------------------------

int cmd_synth_ndd(const SynthArgs& a, const std::vector<std::string>& argv) {
  const std::string started = iso_now();
  std::string cfg_path;
  AppConfig cfg = resolve_config(a.config, cfg_path);
  if (a.seed >= 0) cfg.synth.seed = static_cast<std::uint64_t>(a.seed);
  Rng rng(cfg.synth.seed);
  const std::vector<TrackRow> rows = synth_ndd(cfg.synth.synth, cfg.env.road, cfg.env.dims, rng);
  ensure_dir(a.out);
  auto f = open_out(fs::path(a.out) / "tracks.csv");
  write_tracks_csv(rows, f);
  write_manifest(a.out, "synth-ndd", cfg_path, {cfg.synth.seed}, cfg, argv, started);
  std::printf("wrote %zu rows to %s\n", rows.size(), (fs::path(a.out) / "tracks.csv").c_str());
  return 0;
}

// --- training -----------------------------------------------------------------------

int cmd_train_bv(const TrainArgs& a, const std::vector<std::string>& argv) {
  const std::string started = iso_now();
  std::string cfg_path;
  AppConfig cfg = resolve_config(a.config, cfg_path);
  apply_train_overrides(a, cfg);
  const std::size_t n_bv = cfg.synthetic_init.n_bv;
  ReplayBuffer offline(1);
  if (!std::isinf(cfg.train.sim_real_ratio)) {
    if (a.ndd.empty()) throw ConfigError("--ndd is required unless the ratio is inf");
    offline = offline_buffer(load_transitions(a.ndd, n_bv), cfg.train);
  }
  const PolicySpec av_spec = policy_from_arg(a.av_policy, cfg.av);
  validate(av_spec);
  const EnvConfig env = cfg.env;
  TrainEnv te{env, resolve_init(cfg, a.ndd), n_bv,
              [av_spec, env] { return make_av_controller(av_spec, env); }, {}};
  Trainer tr(Role::bv, cfg.train, te, std::move(offline));
  if (!a.resume.empty()) {
    auto in = open_in(a.resume, true);
    tr.load_state(in);
  }
  ensure_dir(a.out);
  CsvLog log(fs::path(a.out) / "train_log.csv");
  const auto rows = train_bv(tr, [&log](const LogRow& r) { log(r); });
  save_policy(tr.agent().policy, (fs::path(a.out) / "bv_policy.bin").string());
  {
    auto f = open_out(fs::path(a.out) / "trainer_state.bin", true);
    tr.save_state(f);
  }
  write_q_samples(tr, a.out);
  write_manifest(a.out, "train-bv", cfg_path, {cfg.train.seed}, cfg, argv, started);
  std::printf("trained %zu steps (%zu environment steps)\n", tr.steps_done(), tr.env_steps());
  for (const auto& r : rows) {
    if (r.eval && r.step == tr.steps_done()) print_report(*r.eval, "final evaluation");
  }
  return 0;
}

int cmd_train_av(const TrainArgs& a, const std::vector<std::string>& argv) {
  const std::string started = iso_now();
  std::string cfg_path;
  AppConfig cfg = resolve_config(a.config, cfg_path);
  apply_train_overrides(a, cfg);
  cfg.train = av_sac_config(cfg.train);
  const PolicySpec bv_spec = policy_from_arg(a.bv_policy, cfg.bv);
  validate(bv_spec);
  const EnvConfig env = cfg.env;
  TrainEnv te{env, resolve_init(cfg, a.ndd), cfg.synthetic_init.n_bv, {},
              [bv_spec, env] { return make_bv_controller(bv_spec, env); }};
  Trainer tr(Role::av, cfg.train, te, ReplayBuffer(1));
  if (!a.resume.empty()) {
    auto in = open_in(a.resume, true);
    tr.load_state(in);
  }
  ensure_dir(a.out);
  CsvLog log(fs::path(a.out) / "train_log.csv");
  tr.run([&log](const LogRow& r) { log(r); });
  save_policy(tr.agent().policy, (fs::path(a.out) / "av_policy.bin").string());
  auto f = open_out(fs::path(a.out) / "trainer_state.bin", true);
  tr.save_state(f);
  write_manifest(a.out, "train-av", cfg_path, {cfg.train.seed}, cfg, argv, started);
  std::printf("trained %zu steps\n", tr.steps_done());
  return 0;
}

int cmd_finetune(const TrainArgs& a, const std::vector<std::string>& argv) {
  const std::string started = iso_now();
  std::string cfg_path;
  AppConfig cfg = resolve_config(a.config, cfg_path);
  apply_train_overrides(a, cfg);
  if (a.av_policy.empty()) throw ConfigError("finetune needs --av-policy with an AV checkpoint");
  if (!fs::exists(a.av_policy)) throw ConfigError("AV checkpoint not found: " + a.av_policy);
  LearnedPolicy av_init = load_policy(a.av_policy);
  if (av_init.role != Role::av) throw ConfigError(a.av_policy + " is not an AV checkpoint");
  const std::size_t n_bv = cfg.synthetic_init.n_bv;
  const EnvConfig env = cfg.env;
  const InitSource init = resolve_init(cfg, a.ndd);

  ReplayBuffer offline(1);
  if (!std::isinf(cfg.train.sim_real_ratio)) {
    if (a.ndd.empty()) throw ConfigError("--ndd is required unless the ratio is inf");
    offline = offline_buffer(load_transitions(a.ndd, n_bv), cfg.train);
  }
  TrainEnv bv_env{env, init, n_bv,
                  [av_init, env] { return make_learned_av(av_init, ActMode::deterministic, env); }, {}};
  Trainer bv_tr(Role::bv, cfg.train, bv_env, std::move(offline));
  if (!a.bv_policy.empty()) {
    if (!fs::exists(a.bv_policy)) throw ConfigError("BV checkpoint not found: " + a.bv_policy);
    LearnedPolicy p = load_policy(a.bv_policy);
    if (p.role != Role::bv || p.net.sizes() != bv_tr.agent().policy.net.sizes()) {
      throw ConfigError(a.bv_policy + " does not match the configured BV network");
    }
    bv_tr.agent().policy = std::move(p);
  }
  PolicySpec fvdm = cfg.bv;
  fvdm.kind = PolicyKind::fvdm;
  const BvFactory yardstick = [fvdm, env] { return make_bv_controller(fvdm, env); };
  TrainConfig av_cfg = av_sac_config(cfg.train);
  av_cfg.seed = derive_seed(cfg.train.seed, 31);
  Trainer av_tr(Role::av, av_cfg, TrainEnv{env, init, n_bv, {}, yardstick}, ReplayBuffer(1));
  if (av_init.net.sizes() != av_tr.agent().policy.net.sizes()) {
    throw ConfigError(a.av_policy + " does not match the configured AV network");
  }
  av_tr.agent().policy = av_init;

  ensure_dir(a.out);
  CsvLog log(fs::path(a.out) / "finetune_log.csv");
  finetune_alternate(bv_tr, av_tr, cfg.finetune.phases, cfg.finetune.phase_len, yardstick,
                     cfg.finetune.eval_episodes, derive_seed(cfg.train.seed, 99),
                     [&log](const LogRow& r) { log(r); });
  save_policy(av_tr.agent().policy, (fs::path(a.out) / "av_policy.bin").string());
  save_policy(bv_tr.agent().policy, (fs::path(a.out) / "bv_policy.bin").string());
  write_manifest(a.out, "finetune", cfg_path, {cfg.train.seed}, cfg, argv, started);
  std::printf("fine-tuned %zu phases of %zu steps\n", cfg.finetune.phases, cfg.finetune.phase_len);
  return 0;
}

// --- evaluate -----------------------------------------------------------------------

int cmd_evaluate(const EvalArgs& a, const std::vector<std::string>& argv) {
  const std::string started = iso_now();
  std::string cfg_path;
  AppConfig cfg = resolve_config(a.config, cfg_path);
  if (a.episodes >= 0) cfg.eval.episodes = static_cast<std::size_t>(a.episodes);
  if (!a.seeds.empty()) cfg.eval.seeds = a.seeds;
  PolicySpec av_spec = policy_from_arg(a.av, cfg.av);
  PolicySpec bv_spec = policy_from_arg(a.bv, cfg.bv);
  if (bv_spec.kind == PolicyKind::learned) bv_spec.stochastic = cfg.eval.bv_stochastic;
  validate(av_spec);
  validate(bv_spec);
  // Surface unknown names and unusable checkpoints before any output is written.
  (void)make_av_controller(av_spec, cfg.env);
  (void)make_bv_controller(bv_spec, cfg.env);
  const InitSource init = resolve_init(cfg, a.ndd);

  ensure_dir(a.out);
  auto metrics = open_out(fs::path(a.out) / "metrics.csv");
  metrics << "av,bv,seed,episodes,n_collisions,cr,act,acd,cps,cpm_per_m,cpm_per_100m,av_avg_reward,"
             "av_avg_speed\n";
  auto episodes = open_out(fs::path(a.out) / "episodes.csv");
  episodes << "seed,episode,episode_seed,outcome,steps,duration,av_distance,av_reward\n";
  if (a.record) ensure_dir((fs::path(a.out) / "scenarios").string());

  const std::string av_label = av_spec.kind == PolicyKind::learned ? av_spec.checkpoint
                                                                   : std::string(policy_name(av_spec.kind));
  const std::string bv_label = bv_spec.kind == PolicyKind::learned ? bv_spec.checkpoint
                                                                   : std::string(policy_name(bv_spec.kind));
  char buf[512];
  auto opt = [](const std::optional<double>& v) {
    if (!v) return std::string();
    char b[40];
    std::snprintf(b, sizeof b, "%.10g", *v);
    return std::string(b);
  };
  auto row = [&](const std::string& seed, const MetricsReport& r) {
    std::snprintf(buf, sizeof buf, ",%.10g,%.10g,%.10g,%.10g,%.10g\n", r.cps, r.cpm_per_m, r.cpm_per_100m,
                  r.av_avg_reward, r.av_avg_speed);
    metrics << av_label << ',' << bv_label << ',' << seed << ',' << r.n_episodes << ',' << r.n_collisions
            << ',' << opt(r.cr) << ',' << opt(r.act) << ',' << opt(r.acd) << buf;
  };

  std::vector<MetricsReport> reports;
  for (std::uint64_t seed : cfg.eval.seeds) {
    auto av = make_av_controller(av_spec, cfg.env);
    auto bv = make_bv_controller(bv_spec, cfg.env);
    const auto logs = run_evaluation(*av, *bv, cfg.eval.episodes, cfg.env, init, seed, a.record);
    for (std::size_t i = 0; i < logs.size(); ++i) {
      const EpisodeLog& l = logs[i];
      std::snprintf(buf, sizeof buf, "%llu,%zu,%llu,%s,%ld,%.17g,%.17g,%.17g\n",
                    static_cast<unsigned long long>(seed), i, static_cast<unsigned long long>(l.seed),
                    std::string(to_string(l.outcome)).c_str(), l.steps, l.duration, l.av_distance,
                    l.av_reward);
      episodes << buf;
      if (a.record) {
        auto f = open_out(fs::path(a.out) / "scenarios" /
                          ("seed" + std::to_string(seed) + "_ep" + std::to_string(i) + ".log"));
        write_scenario_log(*l.scenario, f);
      }
    }
    if (logs.empty()) continue;
    reports.push_back(compute_metrics(logs));
    row(std::to_string(seed), reports.back());
    print_report(reports.back(), ("seed " + std::to_string(seed)).c_str());
  }
  if (!reports.empty()) {
    MetricsReport m;
    double act_n = 0, act = 0, acd = 0;
    for (const auto& r : reports) {
      m.n_episodes += r.n_episodes;
      m.n_collisions += r.n_collisions;
      m.cr += r.cr;
      m.cps += r.cps;
      m.cpm_per_m += r.cpm_per_m;
      m.av_avg_reward += r.av_avg_reward;
      m.av_avg_speed += r.av_avg_speed;
      if (r.act) {
        act += *r.act;
        acd += *r.acd;
        act_n += 1;
      }
    }
    const double k = static_cast<double>(reports.size());
    m.cr /= k;
    m.cps /= k;
    m.cpm_per_m /= k;
    m.cpm_per_100m = 100.0 * m.cpm_per_m;
    m.av_avg_reward /= k;
    m.av_avg_speed /= k;
    if (act_n > 0) {
      m.act = act / act_n;
      m.acd = acd / act_n;
    }
    row("mean", m);
    print_report(m, "mean");
  }
  write_manifest(a.out, "evaluate", cfg_path, cfg.eval.seeds, cfg, argv, started);
  return 0;
}

// --- report -------------------------------------------------------------------------

namespace {

std::vector<EpisodeLog> read_episodes(const fs::path& p) {
  auto in = open_in(p);
  std::string line;
  std::getline(in, line);
  std::vector<EpisodeLog> logs;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 8) throw ParseError("malformed episode row", lineno);
    EpisodeLog l;
    try {
      l.seed = std::stoull(cells[2]);
      l.outcome = event_from_string(cells[3]);
      l.steps = std::stol(cells[4]);
      l.duration = std::stod(cells[5]);
      l.av_distance = std::stod(cells[6]);
      l.av_reward = std::stod(cells[7]);
    } catch (const std::logic_error&) {
      throw ParseError("malformed episode row", lineno);
    }
    logs.push_back(l);
  }
  return logs;
}

}  // namespace

int cmd_report(const ReportArgs& a, const std::vector<std::string>& argv) {
  const std::string started = iso_now();
  std::string cfg_path;
  const AppConfig cfg = resolve_config(a.config, cfg_path);
  const fs::path logs_dir(a.logs);
  if (!fs::is_directory(logs_dir)) throw ConfigError("log directory not found: " + a.logs);

  bool produced = false;
  ensure_dir(a.out);
  const fs::path out(a.out);

  if (fs::exists(logs_dir / "episodes.csv")) {
    const auto logs = read_episodes(logs_dir / "episodes.csv");
    if (!logs.empty()) {
      const CollisionDistance cd = collision_distance_distribution(logs, cfg.report.collision_edges);
      auto p = open_out(out / "collision_distance_probability.csv");
      write_histogram_csv(cd.probability, p);
      auto f = open_out(out / "collision_distance_frequency.csv");
      write_histogram_csv(cd.frequency, f);
      const MetricsReport m = compute_metrics(logs);
      char buf[256];
      std::snprintf(buf, sizeof buf, "%zu,%zu,%.17g,%.17g,%.17g,%.17g\n", m.n_episodes, m.n_collisions,
                    m.cr, m.cps, m.cpm_per_m, cd.frequency.total());
      open_out(out / "summary.csv") << "episodes,n_collisions,cr,cps,cpm_per_m,frequency_sum\n" << buf;
      produced = true;
    }
  }

  std::vector<Scenario> scenarios;
  if (fs::is_directory(logs_dir / "scenarios")) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(logs_dir / "scenarios")) {
      if (e.path().extension() == ".log") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      auto in = open_in(f);
      scenarios.push_back(read_scenario_log(in));
    }
  }
  if (!scenarios.empty()) {
    const GapDistributions g =
        gap_distributions(scenarios, cfg.report.following_edges, cfg.report.lateral_edges, cfg.env);
    auto f = open_out(out / "following_distance.csv");
    write_histogram_csv(g.following, f);
    auto l = open_out(out / "lateral_gap.csv");
    write_histogram_csv(g.lateral, l);
    produced = true;
  }

  if (fs::exists(logs_dir / "critic_q1.bin")) {
    auto cin = open_in(logs_dir / "critic_q1.bin", true);
    const nn::Mlp q = nn::load_mlp(cin);
    std::vector<Transition> rows;
    std::vector<std::string> source;
    for (const char* name : {"real", "sim"}) {
      const fs::path p = logs_dir / (std::string("q_samples_") + name + ".txt");
      if (!fs::exists(p)) continue;
      auto in = open_in(p);
      for (auto& t : read_transitions(in)) {
        rows.push_back(std::move(t));
        source.emplace_back(name);
      }
    }
    if (rows.size() >= 2) {
      const std::size_t n_bv = rows.front().a.size() / kActionDim;
      const nn::Bounds b = role_bounds(Role::bv, n_bv, cfg.env);
      std::vector<const Transition*> ptrs;
      for (const auto& t : rows) ptrs.push_back(&t);
      const Batch batch = make_batch(ptrs, b, cfg.env);
      Eigen::MatrixXd x(batch.size(), batch.s.rows() + batch.a.rows());
      x << batch.s.transpose(), batch.a.transpose();
      const Eigen::VectorXd qv = critic_values(q, batch.s, batch.a).transpose();
      const PcaResult pca = pca_project(x, qv);
      auto f = open_out(out / "pca.csv");
      f << "pc1,pc2,q,source\n";
      char buf[128];
      for (Eigen::Index i = 0; i < pca.points.rows(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,", pca.points(i, 0), pca.points(i, 1), qv(i));
        f << buf << source[static_cast<std::size_t>(i)] << '\n';
      }
      produced = true;
    }
  }

  if (!produced) throw ConfigError("no episode logs, scenarios or critic samples in " + a.logs);
  write_manifest(a.out, "report", cfg_path, {}, cfg, argv, started);
  return 0;
}

}  // namespace advscen::cli
