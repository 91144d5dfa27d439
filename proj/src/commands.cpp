#include "conjunctive/commands.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include "conjunctive/config.hpp"
#include "conjunctive/episode_log.hpp"
#include "conjunctive/errors.hpp"
#include "conjunctive/fidelity.hpp"

namespace conjunctive {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Flags {
  std::string config;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out;
  int episodes = 0;
  bool episodes_set = false;
  int parallelism = 0;
  bool parallelism_set = false;
  std::vector<std::string> logs;
};

std::string num(double v, int precision = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + path.string());
  f << text;
  if (!f) throw IoError("write failed for " + path.string());
}

void write_json(const fs::path& path, const json& doc) { write_text(path, doc.dump(2) + "\n"); }

// Single-instance guard for an output directory; removed on scope exit.
class OutputLock {
 public:
  explicit OutputLock(const fs::path& dir) : path_(dir / ".lock") {
    fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd_ < 0) {
      if (errno == EEXIST) {
        throw IoError("output directory " + dir.string() + " is locked by another run (" +
                      path_.string() + ")");
      }
      throw IoError("cannot create lock " + path_.string() + ": " + std::strerror(errno));
    }
  }
  OutputLock(const OutputLock&) = delete;
  OutputLock& operator=(const OutputLock&) = delete;
  ~OutputLock() {
    ::close(fd_);
    std::error_code ec;
    fs::remove(path_, ec);
  }

 private:
  fs::path path_;
  int fd_ = -1;
};

struct Session {
  ExperimentConfig cfg;
  bool has_config = false;
  fs::path out;
  std::uint64_t seed = 0;
  std::unique_ptr<OutputLock> lock;
};

Session open_session(const std::string& command, const Flags& flags, bool config_required) {
  Session s;
  json inputs = json::array();
  if (!flags.config.empty()) {
    s.cfg = load_config(flags.config);
    s.has_config = true;
    inputs.push_back({{"path", flags.config}, {"sha256", sha256_file(flags.config)}});
  } else if (config_required) {
    throw ConfigError("--config is required for " + command);
  }
  if (flags.episodes_set) {
    if (flags.episodes < 1) throw ValidationError("--episodes: must be >= 1");
    s.cfg.run.episodes = flags.episodes;
  }
  if (flags.parallelism_set) {
    if (flags.parallelism < 1) throw ValidationError("--parallelism: must be >= 1");
    s.cfg.run.parallelism = flags.parallelism;
  }
  s.seed = flags.seed_set ? flags.seed : s.cfg.run.seed;
  for (const auto& log : flags.logs) {
    inputs.push_back({{"path", log}, {"sha256", sha256_file(log)}});
  }

  if (flags.out.empty()) return s;
  s.out = flags.out;
  std::error_code ec;
  fs::create_directories(s.out, ec);
  if (ec) throw IoError("cannot create output directory " + s.out.string() + ": " + ec.message());
  s.lock = std::make_unique<OutputLock>(s.out);

  json manifest = {{"command", command},
                   {"config_path", flags.config.empty() ? json(nullptr) : json(flags.config)},
                   {"seed", s.seed},
                   {"episodes", s.cfg.run.episodes},
                   {"output_dir", s.out.string()},
                   {"inputs", inputs}};
  write_json(s.out / "manifest.json", manifest);
  return s;
}

std::unique_ptr<AgentBackend> make_backend(const ExperimentConfig& cfg) {
  if (cfg.backend.kind == BackendKind::simulated) {
    cfg.backend.simulated.validate();
    return std::make_unique<SimulatedBackend>(cfg.backend.simulated);
  }
  RemoteEndpoint endpoint = cfg.backend.remote;
  if (const char* token = std::getenv(kRemoteTokenEnv)) endpoint.bearer_token = token;
  return std::make_unique<RemoteBackend>(std::move(endpoint));
}

RunOptions run_options(const ExperimentConfig& cfg, std::uint64_t seed) {
  return RunOptions{cfg.run.episodes, seed, cfg.run.parallelism};
}

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json aggregate_json(const TopologyAggregate& a) {
  return {{"min", a.min}, {"mean", a.mean}, {"max", a.max}};
}

// ---------------------------------------------------------------------------
// Regime summaries shared by simulate and report.

struct LogSummary {
  std::string label;
  TopologyKind topology = TopologyKind::star;
  std::string defenses;  // '+'-joined policy ids, "none" when empty
  RegimeReport report;
  std::optional<Decomposition> decomposition;
  std::vector<Regime> missing;
};

std::string defense_key(const EpisodeRecord& r) {
  if (r.defense_flags.empty()) return "none";
  std::string key;
  for (const auto& f : r.defense_flags) key += (key.empty() ? "" : "+") + f;
  return key;
}

LogSummary summarize(std::string label, std::span<const EpisodeRecord> records) {
  LogSummary s;
  s.label = std::move(label);
  s.topology = records.front().topology_kind;
  s.defenses = defense_key(records.front());
  s.report = make_report(records);
  std::vector<EpisodeRecord> both;
  for (const auto& r : records) {
    if (r.regime == Regime::both) both.push_back(r);
  }
  if (!both.empty()) s.decomposition = decompose(both);
  for (auto regime : kAllRegimes) {
    if (!s.report.asr.contains(regime)) s.missing.push_back(regime);
  }
  return s;
}

json summary_json(const LogSummary& s) {
  json asr = json::object();
  for (auto regime : kAllRegimes) {
    const auto it = s.report.asr.find(regime);
    asr[std::string(to_string(regime))] = it == s.report.asr.end() ? json(nullptr) : json(it->second);
  }
  json j = {{"label", s.label},
            {"topology", std::string(to_string(s.topology))},
            {"defenses", s.defenses},
            {"episodes_per_regime", s.report.episodes_per_regime},
            {"asr", asr},
            {"fa", opt_json(s.report.fa)}};
  if (s.decomposition) {
    j["decomposition"] = {{"p_route_emp", s.decomposition->p_route_emp},
                          {"p_template_emp", opt_json(s.decomposition->p_template_emp)},
                          {"asr_emp", s.decomposition->asr_emp}};
  } else {
    j["decomposition"] = nullptr;
  }
  return j;
}

struct Rendered {
  json doc;
  std::string text;
};

Rendered render_summaries(const std::vector<LogSummary>& summaries) {
  Rendered r;
  std::ostringstream t;
  r.doc["logs"] = json::array();
  t << pad("log", 28) << pad("topology", 9) << pad("defenses", 16);
  for (auto regime : kAllRegimes) t << pad(std::string(to_string(regime)), 15);
  t << pad("FA", 8) << pad("P_route", 9) << "P_tmpl\n";
  for (const auto& s : summaries) {
    r.doc["logs"].push_back(summary_json(s));
    t << pad(s.label, 28) << pad(std::string(to_string(s.topology)), 9) << pad(s.defenses, 16);
    for (auto regime : kAllRegimes) {
      const auto it = s.report.asr.find(regime);
      t << pad(it == s.report.asr.end() ? "absent" : num(it->second), 15);
    }
    t << pad(s.report.fa ? num(*s.report.fa) : "n/a", 8);
    if (s.decomposition) {
      t << pad(num(s.decomposition->p_route_emp), 9)
        << (s.decomposition->p_template_emp ? num(*s.decomposition->p_template_emp) : "n/a");
    } else {
      t << pad("n/a", 9) << "n/a";
    }
    t << '\n';
  }

  // Topology aggregation within each defense setting.
  std::map<std::string, std::vector<const LogSummary*>> by_defense;
  for (const auto& s : summaries) by_defense[s.defenses].push_back(&s);
  r.doc["aggregate"] = json::object();
  t << "\ntopology aggregate (min / mean / max)\n";
  for (const auto& [defenses, group] : by_defense) {
    json agg = json::object();
    for (auto regime : kAllRegimes) {
      std::vector<double> values;
      for (const auto* s : group) {
        if (const auto it = s->report.asr.find(regime); it != s->report.asr.end()) {
          values.push_back(it->second);
        }
      }
      const auto name = std::string(to_string(regime));
      if (values.empty()) {
        agg[name] = nullptr;
        continue;
      }
      const auto a = aggregate_values(values);
      agg[name] = aggregate_json(a);
      t << pad(defenses, 16) << pad(name, 15) << num(a.min) << " / " << num(a.mean) << " / "
        << num(a.max) << '\n';
    }
    r.doc["aggregate"][defenses] = agg;
  }

  // Defense attenuation relative to undefended logs of the same topology.
  r.doc["defense_attenuation"] = json::array();
  const auto base_it = by_defense.find("none");
  if (base_it != by_defense.end() && by_defense.size() > 1) {
    t << "\ndefense attenuation (both-ASR and FA change vs. none)\n";
    for (const auto& [defenses, group] : by_defense) {
      if (defenses == "none") continue;
      for (const auto* s : group) {
        for (const auto* b : base_it->second) {
          if (b->topology != s->topology) continue;
          const auto bb = b->report.asr.find(Regime::both);
          const auto sb = s->report.asr.find(Regime::both);
          if (bb == b->report.asr.end() || sb == s->report.asr.end()) continue;
          json row = {{"topology", std::string(to_string(s->topology))},
                      {"defenses", defenses},
                      {"baseline", b->label},
                      {"defended", s->label},
                      {"both_baseline", bb->second},
                      {"both_defended", sb->second},
                      {"both_delta", sb->second - bb->second}};
          std::optional<double> fa_delta;
          if (b->report.fa && s->report.fa) fa_delta = *s->report.fa - *b->report.fa;
          row["fa_delta"] = opt_json(fa_delta);
          r.doc["defense_attenuation"].push_back(row);
          t << pad(defenses, 16) << pad(std::string(to_string(s->topology)), 9) << num(bb->second)
            << " -> " << num(sb->second) << "  FA delta "
            << (fa_delta ? num(*fa_delta) : std::string("n/a")) << '\n';
        }
      }
    }
  }
  r.text = t.str();
  return r;
}

// Runs the configured regimes on every configured topology, writing one log
// per topology plus report.json / report.txt into `dir`.
Rendered simulate_into(const ExperimentConfig& cfg, const AttackConfig& attack,
                       const AgentBackend& backend, std::uint64_t seed, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  std::vector<LogSummary> summaries;
  for (auto kind : cfg.topologies) {
    const auto scenario = with_topology(cfg.scenario, kind);
    std::vector<EpisodeRecord> records;
    for (auto regime : cfg.run.regimes) {
      auto batch = run_regime(scenario, regime, attack, backend, cfg.defenses, run_options(cfg, seed));
      records.insert(records.end(), std::make_move_iterator(batch.begin()),
                     std::make_move_iterator(batch.end()));
    }
    const auto name = "episodes_" + std::string(to_string(kind)) + ".jsonl";
    write_episode_log(records, dir / name);
    summaries.push_back(summarize(name, records));
  }
  auto rendered = render_summaries(summaries);
  rendered.doc["attack"] = to_json(attack);
  rendered.doc["seed"] = seed;
  write_json(dir / "report.json", rendered.doc);
  write_text(dir / "report.txt", rendered.text);
  return rendered;
}

// ---------------------------------------------------------------------------

int cmd_simulate(const Flags& flags, std::ostream& out, std::ostream&) {
  auto session = open_session("simulate", flags, true);
  if (session.out.empty()) throw ConfigError("--out is required for simulate");
  const auto backend = make_backend(session.cfg);
  const auto rendered =
      simulate_into(session.cfg, session.cfg.attack, *backend, session.seed, session.out);
  out << rendered.text;
  return kExitOk;
}

std::array<double, 3> logit_clamped(const std::array<double, 3>& p) {
  std::array<double, 3> w{};
  for (std::size_t t = 0; t < 3; ++t) w[t] = logit(std::clamp(p[t], 1e-6, 1.0 - 1e-6));
  return w;
}

std::array<double, 3> initial_slot_weights(const ExperimentConfig& cfg, const AgentBackend& backend,
                                           std::uint64_t seed) {
  const auto& o = cfg.optimizer;
  switch (o.w_init) {
    case WeightInit::zeros: return {0.0, 0.0, 0.0};
    case WeightInit::prior: return logit_clamped(o.w_prior);
    case WeightInit::ground_truth:
      if (cfg.backend.kind != BackendKind::simulated) {
        throw ConfigError(
            "optimizer.w_init: ground_truth needs the simulated backend; use prior or empirical");
      }
      return logit_clamped(cfg.backend.simulated.slot_effectiveness);
    case WeightInit::empirical: break;
  }
  // Pilot runs: star topology, fully biased routing, key on the segment of
  // highest affinity; the activation rate among routed episodes estimates each
  // slot's effectiveness.
  const auto affinity = cfg.affinity_vector();
  const int j = static_cast<int>(argmax(affinity)) + 1;
  Scenario scenario = with_topology(cfg.scenario, TopologyKind::star);
  std::array<double, 3> rates{};
  for (auto slot : kAllSlots) {
    const AttackConfig pilot{j, slot, 1.0};
    const RunOptions run{o.pilot_episodes, splitmix64(seed ^ (slot_position(slot) + 1)),
                         cfg.run.parallelism};
    const auto records = run_regime(scenario, Regime::both, pilot, backend, {}, run);
    const auto d = decompose(records);
    if (!d.p_template_emp) {
      throw ConfigError(
          "optimizer.w_init: empirical pilot routed no key segment to the compromised agent; "
          "check routing.alpha and the account labels");
    }
    rates[slot_position(slot)] = *d.p_template_emp;
  }
  return logit_clamped(rates);
}

json theta_json(const OptimizationResult& r, OptimizationLevel level, std::uint64_t seed) {
  const auto& s = r.final_state;
  std::vector<double> eff;
  for (double w : s.slot_weights) eff.push_back(logistic(w));
  return {{"level", std::string(to_string(level))},
          {"seed", seed},
          {"config", to_json(r.config)},
          {"rho", r.config.routing_bias},
          {"final_loss", r.loss_trace.empty() ? json(nullptr) : json(r.loss_trace.back())},
          {"key_logits", s.key_logits},
          {"slot_logits", s.slot_logits},
          {"bias_logit", s.bias_logit},
          {"slot_weights", s.slot_weights},
          {"slot_effectiveness", eff}};
}

int cmd_optimize(const Flags& flags, std::ostream& out, std::ostream&) {
  auto session = open_session("optimize", flags, true);
  if (session.out.empty()) throw ConfigError("--out is required for optimize");
  const auto& cfg = session.cfg;
  const auto backend = make_backend(cfg);
  const auto affinity = cfg.affinity_vector();
  OptimizeOptions options;
  options.slot_weights = initial_slot_weights(cfg, *backend, session.seed);
  options.train_slot_weights = cfg.optimizer.train_slot_weights;
  const auto result =
      optimize(affinity, cfg.optimizer.hyper, session.seed, cfg.optimizer.level, options);

  write_json(session.out / "theta.json", theta_json(result, cfg.optimizer.level, session.seed));
  std::string csv = "step,temperature,loss\n";
  for (std::size_t i = 0; i < result.loss_trace.size(); ++i) {
    char line[96];
    std::snprintf(line, sizeof line, "%zu,%.17g,%.17g\n", i,
                  cfg.optimizer.hyper.temperature_at(static_cast<int>(i)), result.loss_trace[i]);
    csv += line;
  }
  write_text(session.out / "loss_trace.csv", csv);

  out << "level " << to_string(cfg.optimizer.level) << ": key_index " << result.config.key_index
      << ", slot " << to_string(result.config.slot) << ", rho " << num(result.config.routing_bias)
      << '\n';
  if (cfg.optimizer.follow_up_simulate) {
    const auto rendered =
        simulate_into(cfg, result.config, *backend, session.seed, session.out / "follow_up");
    out << "\nfollow-up simulation under the decoded configuration\n" << rendered.text;
  }
  return kExitOk;
}

int cmd_evaluate(const Flags& flags, std::ostream& out, std::ostream&) {
  auto session = open_session("evaluate", flags, true);
  if (session.out.empty()) throw ConfigError("--out is required for evaluate");
  const auto& cfg = session.cfg;
  const auto backend = make_backend(cfg);
  const auto affinity = cfg.affinity_vector();
  OptimizeOptions options;
  options.slot_weights = initial_slot_weights(cfg, *backend, session.seed);
  options.train_slot_weights = cfg.optimizer.train_slot_weights;

  json doc = {{"seed", session.seed}, {"episodes", cfg.run.episodes}, {"levels", json::array()}};
  std::ostringstream t;
  t << pad("level", 13);
  for (auto kind : cfg.topologies) t << pad(std::string(to_string(kind)), 9);
  t << "min / mean / max\n";
  for (auto level : cfg.optimizer.levels) {
    std::map<TopologyKind, double> asr;
    json runs = json::array();
    for (int s = 0; s < cfg.optimizer.seeds; ++s) {
      const std::uint64_t opt_seed = session.seed + static_cast<std::uint64_t>(s);
      const auto result = optimize(affinity, cfg.optimizer.hyper, opt_seed, level, options);
      json run = {{"seed", opt_seed}, {"config", to_json(result.config)}, {"both_asr", json::object()}};
      for (auto kind : cfg.topologies) {
        const auto records = run_regime(with_topology(cfg.scenario, kind), Regime::both,
                                        result.config, *backend, cfg.defenses,
                                        run_options(cfg, session.seed));
        const double a = estimate_asr(records);
        asr[kind] += a / cfg.optimizer.seeds;
        run["both_asr"][std::string(to_string(kind))] = a;
      }
      runs.push_back(run);
    }
    const auto agg = aggregate_topologies(asr);
    json mean = json::object();
    t << pad(std::string(to_string(level)), 13);
    for (const auto& [kind, a] : asr) mean[std::string(to_string(kind))] = a;
    for (auto kind : cfg.topologies) t << pad(num(asr[kind]), 9);
    t << num(agg.min) << " / " << num(agg.mean) << " / " << num(agg.max) << '\n';
    doc["levels"].push_back({{"level", std::string(to_string(level))},
                             {"mean_both_asr", mean},
                             {"aggregate", aggregate_json(agg)},
                             {"runs", runs}});
  }
  write_json(session.out / "evaluation.json", doc);
  write_text(session.out / "evaluation.txt", t.str());
  out << t.str();
  return kExitOk;
}

std::optional<double> try_corr(double (*fn)(std::span<const double>, std::span<const double>),
                               const std::vector<double>& xs, const std::vector<double>& ys,
                               const char* what, std::ostream& err) {
  try {
    return fn(xs, ys);
  } catch (const EstimationError& e) {
    err << "warning: " << what << " unavailable: " << e.what() << '\n';
    return std::nullopt;
  }
}

int cmd_fidelity(const Flags& flags, std::ostream& out, std::ostream& err) {
  auto session = open_session("fidelity", flags, true);
  if (session.out.empty()) throw ConfigError("--out is required for fidelity");
  const auto& cfg = session.cfg;
  if (cfg.backend.kind != BackendKind::simulated) {
    throw ConfigError("backend.kind: the fidelity grid needs the simulated backend");
  }
  FidelityGridOptions options;
  options.topologies = cfg.topologies;
  options.rhos = cfg.fidelity.rhos;
  options.run = run_options(cfg, session.seed);
  const auto points = run_fidelity_grid(cfg.scenario, cfg.attack, cfg.backend.simulated, options);

  json doc = {{"seed", session.seed}, {"episodes", cfg.run.episodes}, {"points", json::array()}};
  std::ostringstream t;
  t << pad("topology", 9) << pad("rho", 6) << pad("P_route", 9) << pad("P_tmpl", 9)
    << pad("surrogate", 11) << pad("empirical", 11) << "analytic\n";
  std::vector<double> sur, emp, ana;
  double max_gap = 0.0;
  for (const auto& p : points) {
    doc["points"].push_back({{"topology", std::string(to_string(p.topology))},
                             {"rho", p.rho},
                             {"p_route_emp", p.p_route_emp},
                             {"p_template_emp", p.p_template_emp},
                             {"asr_surrogate", p.asr_surrogate},
                             {"asr_emp", p.asr_emp},
                             {"asr_analytic", p.asr_analytic}});
    t << pad(std::string(to_string(p.topology)), 9) << pad(num(p.rho, 2), 6)
      << pad(num(p.p_route_emp), 9) << pad(num(p.p_template_emp), 9) << pad(num(p.asr_surrogate), 11)
      << pad(num(p.asr_emp), 11) << num(p.asr_analytic) << '\n';
    sur.push_back(p.asr_surrogate);
    emp.push_back(p.asr_emp);
    ana.push_back(p.asr_analytic);
    max_gap = std::max(max_gap, std::abs(p.asr_surrogate - p.asr_emp));
  }

  t << "\n" << pad("topology", 9) << pad("surrogate min/mean/max", 26) << "empirical min/mean/max\n";
  doc["table"] = json::array();
  for (const auto& row : fidelity_table(points)) {
    doc["table"].push_back({{"topology", std::string(to_string(row.topology))},
                            {"surrogate", aggregate_json(row.surrogate)},
                            {"empirical", aggregate_json(row.empirical)}});
    t << pad(std::string(to_string(row.topology)), 9)
      << pad(num(row.surrogate.min, 2) + "/" + num(row.surrogate.mean, 2) + "/" +
                 num(row.surrogate.max, 2),
             26)
      << num(row.empirical.min, 2) << "/" << num(row.empirical.mean, 2) << "/"
      << num(row.empirical.max, 2) << '\n';
  }

  const auto r_p = try_corr(pearson, sur, emp, "Pearson r", err);
  const auto r_s = try_corr(spearman, sur, emp, "Spearman rho", err);
  const auto r_a = try_corr(pearson, ana, emp, "analytic Pearson r", err);
  doc["correlation"] = {{"pearson", opt_json(r_p)},
                        {"spearman", opt_json(r_s)},
                        {"pearson_analytic", opt_json(r_a)},
                        {"max_abs_gap", max_gap}};
  t << "\nPearson r " << (r_p ? num(*r_p) : "n/a") << ", Spearman " << (r_s ? num(*r_s) : "n/a")
    << ", max |surrogate - empirical| " << num(max_gap) << '\n';

  write_json(session.out / "fidelity.json", doc);
  write_text(session.out / "fidelity.txt", t.str());
  out << t.str();
  return kExitOk;
}

int cmd_calibrate(const Flags& flags, std::ostream& out, std::ostream&) {
  auto session = open_session("calibrate", flags, false);
  if (session.out.empty()) throw ConfigError("--out is required for calibrate");
  const int episodes = session.has_config || flags.episodes_set ? session.cfg.run.episodes : 1000;
  const auto cal = calibrate_from_anchors();
  const auto env = calibrated_environment();
  const SimulatedBackend backend(env.backend);
  const RunOptions run{episodes, session.seed, session.cfg.run.parallelism};

  auto branch = [](const CalibrationBranch& b) {
    return json{{"alpha", b.alpha},
                {"template_effectiveness", b.template_effectiveness},
                {"self_consistent", b.self_consistent}};
  };
  json doc = {{"clipped", branch(cal.clipped)},
              {"unclipped", branch(cal.unclipped)},
              {"episodes", episodes},
              {"seed", session.seed},
              {"check", json::array()}};
  std::ostringstream t;
  t << "clipped branch:   alpha " << num(cal.clipped.alpha) << ", P_t "
    << num(cal.clipped.template_effectiveness)
    << (cal.clipped.self_consistent ? "" : " (not self-consistent)") << '\n';
  t << "unclipped branch: alpha " << num(cal.unclipped.alpha) << ", P_t "
    << num(cal.unclipped.template_effectiveness)
    << (cal.unclipped.self_consistent ? "" : " (not self-consistent)") << '\n';
  t << "\nMonte Carlo check on star, " << episodes << " episodes per regime\n";
  t << pad("rho", 6) << pad("target", 8) << pad("both", 8) << "clean\n";
  for (auto [rho, target] : {std::pair{calibration_anchors::kRhoBaseline, calibration_anchors::kBothBaseline},
                             std::pair{calibration_anchors::kRhoBiased, calibration_anchors::kBothBiased}}) {
    AttackConfig attack = env.attack;
    attack.routing_bias = rho;
    const double both =
        estimate_asr(run_regime(env.scenario, Regime::both, attack, backend, {}, run));
    const double clean =
        estimate_asr(run_regime(env.scenario, Regime::clean, attack, backend, {}, run));
    doc["check"].push_back({{"rho", rho}, {"target", target}, {"both", both}, {"clean", clean}});
    t << pad(num(rho, 2), 6) << pad(num(target, 2), 8) << pad(num(both), 8) << num(clean) << '\n';
  }
  write_json(session.out / "calibration.json", doc);
  write_text(session.out / "calibration.txt", t.str());
  out << t.str();
  return kExitOk;
}

int cmd_report(const Flags& flags, std::ostream& out, std::ostream& err) {
  if (flags.logs.empty()) throw ValidationError("report needs at least one episode log");
  auto session = open_session("report", flags, false);
  std::vector<LogSummary> summaries;
  for (const auto& path : flags.logs) {
    const auto records = read_episode_log(path);
    if (records.empty()) {
      err << "warning: " << path << " holds no episodes; skipped\n";
      continue;
    }
    // A log may mix topologies or defense settings; summarize each group.
    std::map<std::pair<TopologyKind, std::string>, std::vector<EpisodeRecord>> groups;
    for (const auto& r : records) groups[{r.topology_kind, defense_key(r)}].push_back(r);
    const auto label = fs::path(path).filename().string();
    for (const auto& [key, group] : groups) {
      auto s = summarize(label, group);
      for (auto regime : s.missing) {
        err << "warning: " << label << " (" << to_string(s.topology) << ") has no "
            << to_string(regime) << " episodes; marked absent\n";
      }
      summaries.push_back(std::move(s));
    }
  }
  if (summaries.empty()) throw ValidationError("report found no episodes in the given logs");
  const auto rendered = render_summaries(summaries);
  if (!session.out.empty()) {
    write_json(session.out / "report.json", rendered.doc);
    write_text(session.out / "report.txt", rendered.text);
  }
  out << rendered.text;
  return kExitOk;
}

void add_common(CLI::App* sub, Flags& f, bool config_required) {
  auto* config = sub->add_option("--config", f.config, "experiment config (JSON)");
  if (config_required) config->required();
  sub->add_option("--seed", f.seed, "run seed (overrides run.seed)")
      ->each([&f](const std::string&) { f.seed_set = true; });
  sub->add_option("--out", f.out, "output directory");
  sub->add_option("--episodes", f.episodes, "episodes per regime (overrides run.episodes)")
      ->each([&f](const std::string&) { f.episodes_set = true; });
  sub->add_option("--parallelism", f.parallelism, "episode worker threads")
      ->each([&f](const std::string&) { f.parallelism_set = true; });
}

int classify(const Error& e) {
  if (dynamic_cast<const ValidationError*>(&e)) return kExitValidation;
  if (dynamic_cast<const IoError*>(&e)) return kExitIo;
  return kExitRuntime;
}

}  // namespace

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string bytes = buf.str();
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 computation failed");
  }
  std::string hex;
  char byte[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(byte, sizeof byte, "%02x", digest[i]);
    hex += byte;
  }
  return hex;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Conjunctive prompt-attack simulator and counterpart optimizer"};
  app.require_subcommand(1);
  Flags flags;
  auto* simulate = app.add_subcommand("simulate", "run all regimes and write episode logs");
  add_common(simulate, flags, true);
  auto* optimize_cmd = app.add_subcommand("optimize", "optimize the relaxed counterpart");
  add_common(optimize_cmd, flags, true);
  auto* evaluate = app.add_subcommand("evaluate", "optimize each level and measure both-ASR");
  add_common(evaluate, flags, true);
  auto* fidelity = app.add_subcommand("fidelity", "surrogate vs. empirical ASR grid");
  add_common(fidelity, flags, true);
  auto* calibrate = app.add_subcommand("calibrate", "solve and check the calibration anchors");
  add_common(calibrate, flags, false);
  auto* report = app.add_subcommand("report", "summarize episode logs");
  add_common(report, flags, false);
  report->add_option("logs", flags.logs, "episode logs (JSONL)")->required();

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(flags, out, err);
    if (optimize_cmd->parsed()) return cmd_optimize(flags, out, err);
    if (evaluate->parsed()) return cmd_evaluate(flags, out, err);
    if (fidelity->parsed()) return cmd_fidelity(flags, out, err);
    if (calibrate->parsed()) return cmd_calibrate(flags, out, err);
    if (report->parsed()) return cmd_report(flags, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return classify(e);
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitValidation;
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace conjunctive
