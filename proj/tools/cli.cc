// Copyright 2026 The priorshift Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cli.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "priorshift/harness.h"
#include "priorshift/io.h"
#include "priorshift/sampler.h"
#include "priorshift/schedule.h"
#include "priorshift/train.h"
#include "verify.h"

#ifndef PRIORSHIFT_VERSION
#define PRIORSHIFT_VERSION "0.0.0"
#endif

namespace priorshift::cli {
namespace {

namespace fs = std::filesystem;

// Bad flag values found after parsing; reported like parse errors.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string version_text() {
  return std::string("priorshift ") + PRIORSHIFT_VERSION + " (model " + kModelFormat +
         ", world " + kWorldFormat + ", dataset #dim/labels text v1)";
}

// logfmt records on the error stream.
class Logger {
 public:
  Logger(std::ostream& err, std::string cmd) : err_(err), cmd_(std::move(cmd)) {}

  void set_quiet(bool q) { quiet_ = q; }

  void info(const std::string& msg,
            std::initializer_list<std::pair<std::string, std::string>> kv = {}) {
    if (!quiet_) write("info", msg, kv);
  }
  void error(const std::string& msg) { write("error", msg, {}); }

 private:
  static std::string quote(const std::string& v) {
    if (!v.empty() && v.find_first_of(" \"=\t") == std::string::npos) return v;
    std::string q = "\"";
    for (char c : v) {
      if (c == '"' || c == '\\') q += '\\';
      q += c;
    }
    return q + '"';
  }

  void write(const char* level, const std::string& msg,
             std::initializer_list<std::pair<std::string, std::string>> kv) {
    err_ << "level=" << level << " cmd=" << quote(cmd_) << " msg=" << quote(msg);
    for (const auto& [k, v] : kv) err_ << ' ' << k << '=' << quote(v);
    err_ << '\n';
  }

  std::ostream& err_;
  std::string cmd_;
  bool quiet_ = false;
};

struct Globals {
  int threads = 1;
  bool force = false;
  bool quiet = false;
  std::optional<double> beta_min;
  std::optional<double> beta_max;
  std::optional<int> num_steps;

  bool schedule_overridden() const { return beta_min || beta_max || num_steps; }

  Schedule schedule() const {
    try {
      return Schedule::linear(beta_min.value_or(kDefaultBetaMin),
                              beta_max.value_or(kDefaultBetaMax),
                              num_steps.value_or(kDefaultNumSteps));
    } catch (const std::invalid_argument& e) {
      throw UsageError(std::string("--beta-min/--beta-max/--T: ") + e.what());
    }
  }
};

std::vector<int> parse_t_starts(const std::string& text, const Schedule& s, int lowest) {
  std::vector<int> out;
  try {
    out = parse_ints(text, ',');
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("--t-start: ") + e.what());
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i] < lowest || out[i] > s.num_steps()) {
      throw UsageError("--t-start: " + std::to_string(out[i]) + " outside [" +
                       std::to_string(lowest) + ", " + std::to_string(s.num_steps()) + "]");
    }
    if (i > 0 && out[i] <= out[i - 1]) {
      throw UsageError("--t-start: values must be distinct and ascending");
    }
  }
  return out;
}

void emit(const std::string& path, const std::string& content, const Globals& g,
          std::ostream& out) {
  if (path == "-") {
    out << content;
    return;
  }
  write_file(path, content, g.force);
}

void require_absent(const std::string& path, const char* flag, const Globals& g) {
  if (path != "-" && !g.force && fs::exists(path)) {
    throw UsageError(std::string(flag) + ": " + path + " exists (use --force to overwrite)");
  }
}

// The model-space epsilon source behind --model: either the world's exact
// native prior or a trained denoiser loaded from disk.
struct LoadedModel {
  Schedule schedule = Schedule::default_linear();
  std::optional<Model> trained;
  ConditionalGMM exact_prior;
  std::unique_ptr<EpsSource> eps;
  const Standardizer* standardizer = nullptr;
  const ResidualParams* residual = nullptr;
};

std::unique_ptr<LoadedModel> load_eps_model(const std::string& spec, const World& world,
                                            const Globals& g) {
  auto m = std::make_unique<LoadedModel>();
  if (spec == "exact") {
    m->schedule = g.schedule();
    m->exact_prior = world.native.standardized(world.standardizer);
    m->eps = std::make_unique<ExactEps>(m->exact_prior, m->schedule);
    m->standardizer = &world.standardizer;
    return m;
  }
  m->trained = load_model(spec);
  if (g.schedule_overridden() && !(g.schedule() == m->trained->schedule)) {
    throw UsageError("--beta-min/--beta-max/--T: disagree with the schedule stored in " + spec);
  }
  m->schedule = m->trained->schedule;
  const auto& dc = m->trained->denoiser.config();
  if (dc.dim != world.dim() || dc.num_labels != world.num_labels()) {
    throw std::runtime_error("model " + spec + " (dim " + std::to_string(dc.dim) + ", labels " +
                             std::to_string(dc.num_labels) + ") does not match the world (dim " +
                             std::to_string(world.dim()) + ", labels " +
                             std::to_string(world.num_labels()) + ")");
  }
  m->eps = std::make_unique<ModelEps>(m->trained->denoiser);
  m->standardizer = &m->trained->standardizer;
  m->residual = &m->trained->residual;
  return m;
}

// ---------------------------------------------------------------------------
// Subcommands

struct GenWorldArgs {
  uint64_t seed = 0;
  std::string out;
  WorldSpec spec;
};

int cmd_gen_world(const GenWorldArgs& a, const Globals& g, std::ostream& out, Logger& log) {
  require_absent(a.out, "--out", g);
  WorldSpec spec = a.spec;
  spec.seed = a.seed;
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const World w = gen_world(spec);
  emit(a.out, world_to_string(w), g, out);
  log.info("world generated", {{"out", a.out},
                               {"dim", std::to_string(w.dim())},
                               {"labels", std::to_string(w.num_labels())},
                               {"attempts", std::to_string(w.attempts)},
                               {"regenerations", std::to_string(w.attempts - 1)},
                               {"separation", format_double(w.separation)}});
  return kExitOk;
}

struct GenDataArgs {
  std::string world;
  std::string source = "native";
  int n_seq = 100;
  int seq_len = 50;
  uint64_t seed = 0;
  std::string out;
};

int cmd_gen_data(const GenDataArgs& a, const Globals& g, std::ostream& out, Logger& log) {
  require_absent(a.out, "--out", g);
  Source src;
  try {
    src = parse_source(a.source);
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("--source: ") + e.what());
  }
  const World w = load_world(a.world);
  const Dataset ds = gen_dataset(w, src, a.n_seq, a.seq_len, a.seed);
  emit(a.out, dataset_to_string(ds), g, out);
  log.info("dataset generated", {{"out", a.out},
                                 {"source", a.source},
                                 {"sequences", std::to_string(ds.sequences.size())},
                                 {"frames", std::to_string(ds.num_frames())}});
  return kExitOk;
}

struct TrainArgs {
  std::string config;
  std::string data;
  std::string out;
  std::optional<uint64_t> seed;
  std::optional<int> epochs;
  std::optional<double> learning_rate;
  std::string loss_csv;
};

int cmd_train(const TrainArgs& a, const Globals& g, std::ostream& out, Logger& log) {
  require_absent(a.out, "--out", g);
  if (!a.loss_csv.empty()) require_absent(a.loss_csv, "--loss-csv", g);
  const std::string text = read_file(a.config);
  TrainConfig cfg;
  try {
    cfg = train_config_from_string(text);
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("--config: ") + e.what());
  }
  const bool config_has_seed = text.find("\"seed\"") != std::string::npos;
  if (a.seed) cfg.seed = *a.seed;
  else if (!config_has_seed) throw UsageError("--seed: required (not set in --config either)");
  if (a.epochs) cfg.epochs = *a.epochs;
  if (a.learning_rate) cfg.learning_rate = *a.learning_rate;
  cfg.threads = g.threads;
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const Schedule s = g.schedule();
  const Dataset ds = load_dataset(a.data);
  log.info("training", {{"data", a.data},
                        {"frames", std::to_string(ds.num_frames())},
                        {"epochs", std::to_string(cfg.epochs)},
                        {"lr", format_double(cfg.learning_rate)},
                        {"seed", std::to_string(cfg.seed)}});
  std::string curve = "epoch,loss\n";
  auto result = train(cfg, ds.sequences, ds.num_labels, s, [&](int epoch, double loss) {
    curve += std::to_string(epoch) + ',' + format_double(loss) + '\n';
    log.info("epoch", {{"epoch", std::to_string(epoch)}, {"loss", format_double(loss)}});
  });
  Model m{s, std::move(result.denoiser), std::move(result.residual),
          std::move(result.standardizer)};
  emit(a.out, model_to_string(m), g, out);
  if (!a.loss_csv.empty()) write_file(a.loss_csv, curve, g.force);
  log.info("model written", {{"out", a.out}});
  return kExitOk;
}

struct ConvertArgs {
  std::string model;
  std::string world;
  int t_start = 0;
  uint64_t seed = 0;
  std::string in;
  std::string out;
  bool no_snap = false;
  bool no_residual = false;
  std::string diagnostics;
};

int cmd_convert(const ConvertArgs& a, const Globals& g, std::ostream& out, Logger& log) {
  require_absent(a.out, "--out", g);
  if (!a.diagnostics.empty()) require_absent(a.diagnostics, "--diagnostics", g);
  const World w = load_world(a.world);
  const auto m = load_eps_model(a.model, w, g);
  if (a.t_start < 0 || a.t_start > m->schedule.num_steps()) {
    throw UsageError("--t-start: " + std::to_string(a.t_start) + " outside [0, " +
                     std::to_string(m->schedule.num_steps()) + "]");
  }
  if (!a.no_residual && m->residual == nullptr) {
    throw UsageError("--no-residual: required with --model exact (no residual head)");
  }
  const Dataset in = load_dataset(a.in);
  if (in.dim != w.dim() || in.num_labels > w.num_labels()) {
    throw std::runtime_error("dataset " + a.in + " does not match the world's dim/labels");
  }

  ConversionContext ctx;
  ctx.schedule = &m->schedule;
  ctx.standardizer = m->standardizer;
  ctx.eps = m->eps.get();
  ctx.codebook = &w.codebook;
  ctx.residual = m->residual;
  SamplerConfig sc;
  sc.t_start = a.t_start;
  sc.seed = a.seed;
  sc.snap = !a.no_snap;
  sc.predict_residual = !a.no_residual;
  sc.threads = g.threads;

  Dataset result;
  result.dim = in.dim;
  result.num_labels = in.num_labels;
  std::string diag = "id,t_start,identity_l2,native_prob\n";
  uint64_t first = 0;
  for (const auto& seq : in.sequences) {
    LatentSequence conv = convert(seq, ctx, sc, first);
    first += seq.size();
    const auto sm = sequence_metrics(w, seq, conv, a.t_start);
    diag += sm.id + ',' + std::to_string(sm.t_start) + ',' + format_double(sm.identity_l2) + ',' +
            format_double(sm.native_prob) + '\n';
    result.sequences.push_back(std::move(conv));
  }
  emit(a.out, dataset_to_string(result), g, out);
  if (!a.diagnostics.empty()) write_file(a.diagnostics, diag, g.force);
  log.info("converted", {{"in", a.in},
                         {"out", a.out},
                         {"t_start", std::to_string(a.t_start)},
                         {"frames", std::to_string(first)}});
  return kExitOk;
}

struct SweepArgs {
  std::string t_starts;
  uint64_t seed = 0;
  std::string world;
  std::string model = "exact";
  int n_seq = 50;
  int seq_len = 10;
  bool snap = false;
  bool residual = false;
  bool stratified = false;
  std::string out = "-";
};

int cmd_sweep(const SweepArgs& a, const Globals& g, std::ostream& out, Logger& log) {
  require_absent(a.out, "--out", g);
  if (a.n_seq < 1 || a.seq_len < 1) throw UsageError("--n-seq/--seq-len: must be >= 1");
  World w;
  if (a.world.empty()) {
    WorldSpec spec;
    spec.seed = a.seed;
    w = gen_world(spec);
    log.info("default world generated", {{"seed", std::to_string(a.seed)},
                                         {"attempts", std::to_string(w.attempts)},
                                         {"separation", format_double(w.separation)}});
  } else {
    w = load_world(a.world);
  }
  const auto m = load_eps_model(a.model, w, g);
  if (a.residual && m->residual == nullptr) {
    throw UsageError("--residual: needs a trained --model");
  }
  SweepConfig sc;
  sc.t_starts = parse_t_starts(a.t_starts, m->schedule, 0);
  sc.n_seq = a.n_seq;
  sc.seq_len = a.seq_len;
  sc.seed = a.seed;
  sc.snap = a.snap;
  sc.predict_residual = a.residual;
  sc.aggregation = a.stratified ? Aggregation::kStratified : Aggregation::kFrames;
  sc.threads = g.threads;
  const SweepModel sm{m->eps.get(), m->standardizer, m->residual};
  const SweepTable table = sweep(w, sm, sc, m->schedule);
  emit(a.out, table.to_csv(), g, out);
  for (const auto& r : table.rows) {
    log.info("sweep row", {{"t_start", std::to_string(r.t_start)},
                           {"identity_cos", format_double(r.identity_cos)},
                           {"native_prob", format_double(r.native_prob)}});
  }
  return kExitOk;
}

struct PosteriorArgs {
  std::string out_dir;
  double x0 = 3.0;
  std::string t_starts = "1,25,50,75,100";
  std::string world;
  int label = 0;
  std::optional<int> axis;
  double prior_mean = 0.0;
  double prior_var = 1.0;
  std::optional<double> grid_min;
  std::optional<double> grid_max;
  int grid_points = 20001;
};

int cmd_posterior(const PosteriorArgs& a, const Globals& g, std::ostream& out, Logger& log) {
  const Schedule s = g.schedule();
  const auto t_starts = parse_t_starts(a.t_starts, s, 1);
  ConditionalGMM prior;
  if (a.world.empty()) {
    if (!(a.prior_var > 0.0)) throw UsageError("--prior-var: must be > 0");
    prior = ConditionalGMM::single_gaussian({a.prior_mean}, {a.prior_var});
    if (a.label != 0) throw UsageError("--label: only label 0 exists without --world");
  } else {
    const World w = load_world(a.world);
    if (a.label < 0 || a.label >= w.num_labels()) throw UsageError("--label: outside vocabulary");
    if (w.dim() > 1 && !a.axis) throw UsageError("--axis: required for a world with dim > 1");
    const int axis = a.axis.value_or(0);
    if (axis < 0 || axis >= w.dim()) throw UsageError("--axis: outside [0, dim)");
    prior = w.native.marginal(axis);
  }
  double lo = a.x0 - 1.0, hi = a.x0 + 1.0;
  for (const auto& c : prior.components(a.label)) {
    lo = std::min(lo, c.mean[0] - 12.0 * std::sqrt(c.var[0]));
    hi = std::max(hi, c.mean[0] + 12.0 * std::sqrt(c.var[0]));
  }
  lo = a.grid_min.value_or(lo);
  hi = a.grid_max.value_or(hi);
  if (!(hi > lo)) throw UsageError("--grid-min/--grid-max: empty range");
  if (a.grid_points < 3) throw UsageError("--grid-points: must be >= 3");
  const auto grid = linspace(lo, hi, static_cast<std::size_t>(a.grid_points));
  const Fig1Data data = fig1_data(prior, a.label, a.x0, t_starts, grid, s);
  const auto written = write_fig1(data, a.out_dir, g.force);

  std::string summary = "t_start,x_t,posterior_mean,posterior_var\n";
  for (const auto& p : data.posteriors) {
    summary += std::to_string(p.t_start) + ',' + format_double(p.x_t) + ',' +
               format_double(p.mean()) + ',' + format_double(p.variance()) + '\n';
  }
  out << summary;
  log.info("posterior curves written", {{"dir", a.out_dir},
                                        {"files", std::to_string(written.size())}});
  return kExitOk;
}

int cmd_verify(uint64_t seed, const Globals& g, std::ostream& out, Logger& log) {
  const auto results = run_verify_suites(g.schedule(), seed);
  bool all = true;
  for (const auto& r : results) {
    out << (r.passed ? "PASS " : "FAIL ") << r.name << " cases=" << r.cases
        << " max_error=" << format_double(r.max_error) << " tol=" << r.tolerance
        << '\n';
    all = all && r.passed;
  }
  log.info(all ? "all suites passed" : "suite failure");
  return all ? kExitOk : kExitFailure;
}

// CLI11 reports missing required options before unknown ones; find the
// unknown flag first so the message names it.
std::string find_unknown_flag(CLI::App& app, int argc, const char* const* argv) {
  CLI::App* scope = &app;
  for (int i = 1; i < argc; ++i) {
    const std::string tok = argv[i];
    if (tok == "--") break;
    if (tok.size() < 2 || tok[0] != '-') {
      if (scope == &app) {
        if (auto* sub = app.get_subcommand_no_throw(tok)) scope = sub;
      }
      continue;
    }
    if (tok.size() > 1 && (std::isdigit(static_cast<unsigned char>(tok[1])) || tok[1] == '.')) continue;
    const std::string name = tok.substr(0, tok.find('='));
    const bool known = scope->get_option_no_throw(name) != nullptr ||
                       app.get_option_no_throw(name) != nullptr;
    if (!known) return name;
  }
  return {};
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Prior-shift latent conversion with DDIM over Gaussian-mixture worlds",
               "priorshift"};
  app.set_version_flag("--version", version_text());
  app.require_subcommand(1, 1);
  app.fallthrough();

  Globals g;
  app.add_option("--threads", g.threads, "Worker threads; outputs do not depend on it")
      ->check(CLI::PositiveNumber);
  app.add_flag("--force", g.force, "Overwrite existing output files");
  app.add_flag("-q,--quiet", g.quiet, "Only log errors");
  app.add_option("--beta-min", g.beta_min, "First beta of the linear schedule");
  app.add_option("--beta-max", g.beta_max, "Last beta of the linear schedule");
  app.add_option("--T", g.num_steps, "Number of diffusion steps");

  GenWorldArgs gw;
  auto* c_gw = app.add_subcommand("gen-world", "Generate a synthetic native/L2 world");
  c_gw->add_option("--seed", gw.seed, "Generation seed")->required();
  c_gw->add_option("--out", gw.out, "World JSON file ('-' for stdout)")->required();
  c_gw->add_option("--dim", gw.spec.dim, "Latent dimension");
  c_gw->add_option("--labels", gw.spec.num_labels, "Number of condition labels");
  c_gw->add_option("--components", gw.spec.components, "Native components per label");
  c_gw->add_option("--shift", gw.spec.l2_shift, "L2 mean shift in pooled standard deviations");
  c_gw->add_option("--codebook-size", gw.spec.codebook_size, "Codebook entries");
  c_gw->add_option("--h-noise", gw.spec.h_noise, "Observation noise std of h");
  c_gw->add_option("--min-separation", gw.spec.min_separation,
                   "Required native/L2 class-probability separation");

  GenDataArgs gd;
  auto* c_gd = app.add_subcommand("gen-data", "Sample a dataset from a world");
  c_gd->add_option("--world", gd.world, "World file")->required()->check(CLI::ExistingFile);
  c_gd->add_option("--source", gd.source, "native or l2");
  c_gd->add_option("--n-seq", gd.n_seq, "Number of sequences")->check(CLI::PositiveNumber);
  c_gd->add_option("--seq-len", gd.seq_len, "Frames per sequence")->check(CLI::PositiveNumber);
  c_gd->add_option("--seed", gd.seed, "Sampling seed")->required();
  c_gd->add_option("--out", gd.out, "Dataset file ('-' for stdout)")->required();

  TrainArgs tr;
  auto* c_tr = app.add_subcommand("train", "Train the denoiser and residual head");
  c_tr->add_option("--config", tr.config, "Training config JSON")->required()->check(CLI::ExistingFile);
  c_tr->add_option("--data", tr.data, "Training dataset")->required()->check(CLI::ExistingFile);
  c_tr->add_option("--out", tr.out, "Model file ('-' for stdout)")->required();
  c_tr->add_option("--seed", tr.seed, "Training seed (overrides the config)");
  c_tr->add_option("--epochs", tr.epochs, "Epochs (overrides the config)");
  c_tr->add_option("--lr", tr.learning_rate, "Learning rate (overrides the config)");
  c_tr->add_option("--loss-csv", tr.loss_csv, "Write the per-epoch loss curve here");

  ConvertArgs cv;
  auto* c_cv = app.add_subcommand("convert", "Convert sequences toward the native prior");
  c_cv->add_option("--model", cv.model, "Model file or 'exact'")->required();
  c_cv->add_option("--world", cv.world, "World file")->required()->check(CLI::ExistingFile);
  c_cv->add_option("--t-start", cv.t_start, "Corruption strength 0..T")->required();
  c_cv->add_option("--seed", cv.seed, "Corruption noise seed")->required();
  c_cv->add_option("--in", cv.in, "Input dataset")->required()->check(CLI::ExistingFile);
  c_cv->add_option("--out", cv.out, "Output dataset ('-' for stdout)")->required();
  c_cv->add_flag("--no-snap", cv.no_snap, "Skip the codebook snap");
  c_cv->add_flag("--no-residual", cv.no_residual, "Skip the z_c2 prediction");
  c_cv->add_option("--diagnostics", cv.diagnostics, "Per-sequence diagnostics CSV");

  SweepArgs sw;
  auto* c_sw = app.add_subcommand("sweep", "Paired t_start sweep on an L2 evaluation set");
  c_sw->add_option("--t-start", sw.t_starts, "Comma-separated ascending t_start list")->required();
  c_sw->add_option("--seed", sw.seed, "Seed for the world, evaluation set and noise")->required();
  c_sw->add_option("--world", sw.world, "World file (default: generated from --seed)")
      ->check(CLI::ExistingFile);
  c_sw->add_option("--model", sw.model, "Model file or 'exact'");
  c_sw->add_option("--n-seq", sw.n_seq, "Evaluation sequences");
  c_sw->add_option("--seq-len", sw.seq_len, "Frames per evaluation sequence");
  c_sw->add_flag("--snap", sw.snap, "Snap outputs to the codebook");
  c_sw->add_flag("--residual", sw.residual, "Predict z_c2 with the model's residual head");
  c_sw->add_flag("--stratified", sw.stratified, "Average per label, then across labels");
  c_sw->add_option("--out", sw.out, "CSV file ('-' for stdout)");

  PosteriorArgs po;
  auto* c_po = app.add_subcommand("posterior", "Posterior, prior and likelihood curves per t_start");
  c_po->add_option("--out-dir", po.out_dir, "Directory for the CSV files")->required();
  c_po->add_option("--x0", po.x0, "Non-native scalar x0");
  c_po->add_option("--t-start", po.t_starts, "Comma-separated ascending t_start list (>= 1)");
  c_po->add_option("--world", po.world, "World file (default: single Gaussian prior)")
      ->check(CLI::ExistingFile);
  c_po->add_option("--label", po.label, "Condition label");
  c_po->add_option("--axis", po.axis, "Marginal axis of a multi-dimensional world");
  c_po->add_option("--prior-mean", po.prior_mean, "Mean of the single Gaussian prior");
  c_po->add_option("--prior-var", po.prior_var, "Variance of the single Gaussian prior");
  c_po->add_option("--grid-min", po.grid_min, "Lower grid bound");
  c_po->add_option("--grid-max", po.grid_max, "Upper grid bound");
  c_po->add_option("--grid-points", po.grid_points, "Grid size");

  uint64_t verify_seed = 0;
  auto* c_vf = app.add_subcommand("verify", "Run the built-in oracle suites");
  c_vf->add_option("--seed", verify_seed, "Seed of the random test cases");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    const std::string unknown = find_unknown_flag(app, argc, argv);
    if (!unknown.empty()) {
      err << "error: unknown flag " << unknown << "\n\n" << app.help();
    } else {
      err << "error: " << e.what() << "\n\n" << app.help();
    }
    return kExitUsage;
  }

  const auto* sub = app.get_subcommands().front();
  Logger log(err, sub->get_name());
  log.set_quiet(g.quiet);
  try {
    if (sub == c_gw) return cmd_gen_world(gw, g, out, log);
    if (sub == c_gd) return cmd_gen_data(gd, g, out, log);
    if (sub == c_tr) return cmd_train(tr, g, out, log);
    if (sub == c_cv) return cmd_convert(cv, g, out, log);
    if (sub == c_sw) return cmd_sweep(sw, g, out, log);
    if (sub == c_po) return cmd_posterior(po, g, out, log);
    return cmd_verify(verify_seed, g, out, log);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n\n" << sub->help();
    return kExitUsage;
  } catch (const std::exception& e) {
    log.error(e.what());
    return kExitFailure;
  }
}

}  // namespace priorshift::cli
