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

#include "priorshift/io.h"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace priorshift {
namespace {

using nlohmann::json;

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = text.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(text.substr(start));
      return out;
    }
    out.push_back(text.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string join(std::span<const double> v, char sep) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0) out += sep;
    out += format_double(v[i]);
  }
  return out;
}

std::string join_ints(std::span<const int> v, char sep) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0) out += sep;
    out += std::to_string(v[i]);
  }
  return out;
}

std::string join_frames(const std::vector<Frame>& frames) {
  std::string out;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (i > 0) out += '|';
    out += join(frames[i], ',');
  }
  return out;
}

std::vector<Frame> parse_frames(std::string_view text) {
  std::vector<Frame> out;
  for (auto part : split(text, '|')) out.push_back(parse_doubles(part, ','));
  return out;
}

[[noreturn]] void fail_line(std::size_t line, const std::string& what) {
  throw std::invalid_argument("line " + std::to_string(line) + ": " + what);
}

int parse_int(std::string_view token) {
  int v = 0;
  auto r = std::from_chars(token.data(), token.data() + token.size(), v);
  if (r.ec != std::errc() || r.ptr != token.data() + token.size()) {
    throw std::invalid_argument("not an integer: '" + std::string(token) + "'");
  }
  return v;
}

// ---------------------------------------------------------------------------
// World JSON

json components_to_json(const ConditionalGMM& p) {
  json labels = json::array();
  for (const auto& comps : p.all_components()) {
    json arr = json::array();
    for (const auto& c : comps) {
      arr.push_back({{"weight", c.weight}, {"mean", c.mean}, {"var", c.var}});
    }
    labels.push_back(std::move(arr));
  }
  return labels;
}

ConditionalGMM components_from_json(const json& j, int dim) {
  std::vector<std::vector<GaussianComponent>> per_label;
  for (const auto& arr : j) {
    std::vector<GaussianComponent> comps;
    for (const auto& c : arr) {
      GaussianComponent g;
      g.weight = c.at("weight").get<double>();
      g.mean = c.at("mean").get<std::vector<double>>();
      g.var = c.at("var").get<std::vector<double>>();
      comps.push_back(std::move(g));
    }
    per_label.push_back(std::move(comps));
  }
  return ConditionalGMM(dim, std::move(per_label));
}

json spec_to_json(const WorldSpec& s) {
  return {{"dim", s.dim},
          {"num_labels", s.num_labels},
          {"components", s.components},
          {"center_scale", s.center_scale},
          {"component_spread", s.component_spread},
          {"sigma_min", s.sigma_min},
          {"sigma_max", s.sigma_max},
          {"weight_min", s.weight_min},
          {"weight_max", s.weight_max},
          {"l2_shift", s.l2_shift},
          {"codebook_size", s.codebook_size},
          {"h_noise", s.h_noise},
          {"standardizer_samples", s.standardizer_samples},
          {"min_separation", s.min_separation},
          {"separation_samples", s.separation_samples},
          {"max_attempts", s.max_attempts},
          {"seed", s.seed}};
}

WorldSpec spec_from_json(const json& j) {
  WorldSpec s;
  s.dim = j.at("dim").get<int>();
  s.num_labels = j.at("num_labels").get<int>();
  s.components = j.at("components").get<int>();
  s.center_scale = j.at("center_scale").get<double>();
  s.component_spread = j.at("component_spread").get<double>();
  s.sigma_min = j.at("sigma_min").get<double>();
  s.sigma_max = j.at("sigma_max").get<double>();
  s.weight_min = j.at("weight_min").get<double>();
  s.weight_max = j.at("weight_max").get<double>();
  s.l2_shift = j.at("l2_shift").get<double>();
  s.codebook_size = j.at("codebook_size").get<int>();
  s.h_noise = j.at("h_noise").get<double>();
  s.standardizer_samples = j.at("standardizer_samples").get<int>();
  s.min_separation = j.at("min_separation").get<double>();
  s.separation_samples = j.at("separation_samples").get<int>();
  s.max_attempts = j.at("max_attempts").get<int>();
  s.seed = j.at("seed").get<uint64_t>();
  return s;
}

// ---------------------------------------------------------------------------
// Model text

std::string hidden_string(const std::vector<int>& hidden) { return join_ints(hidden, ','); }

std::vector<int> parse_hidden(std::string_view text) {
  if (text.empty()) return {};
  return parse_ints(text, ',');
}

// key=value tokens after a leading keyword.
std::vector<std::pair<std::string, std::string>> parse_fields(std::string_view line,
                                                              std::size_t line_no) {
  std::vector<std::pair<std::string, std::string>> out;
  auto tokens = split(line, ' ');
  for (std::size_t i = 1; i < tokens.size(); ++i) {
    const auto eq = tokens[i].find('=');
    if (eq == std::string_view::npos) fail_line(line_no, "expected key=value");
    out.emplace_back(std::string(tokens[i].substr(0, eq)), std::string(tokens[i].substr(eq + 1)));
  }
  return out;
}

const std::string& field(const std::vector<std::pair<std::string, std::string>>& fields,
                         const std::string& key, std::size_t line_no) {
  for (const auto& [k, v] : fields) {
    if (k == key) return v;
  }
  fail_line(line_no, "missing field '" + key + "'");
}

class LineReader {
 public:
  explicit LineReader(std::istream& is) : is_(is) {}
  std::string next(const char* what) {
    std::string line;
    if (!std::getline(is_, line)) {
      throw std::invalid_argument("model: unexpected end of file, expected " + std::string(what));
    }
    ++line_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
  }
  std::size_t line() const { return line_; }

 private:
  std::istream& is_;
  std::size_t line_ = 0;
};

std::string expect_prefix(const std::string& line, std::string_view prefix, std::size_t line_no) {
  if (line.rfind(prefix, 0) != 0) {
    fail_line(line_no, "expected '" + std::string(prefix) + "'");
  }
  return line.substr(prefix.size());
}

void write_blocks(std::ostream& os, const ParamSet& p) {
  for (std::size_t i = 0; i < p.num_blocks(); ++i) {
    const auto& b = p.block(i);
    os << "block " << b.name << ' ' << b.rows << ' ' << b.cols << '\n';
    const auto v = p.view(i);
    for (std::size_t k = 0; k < v.size(); ++k) {
      if (k > 0) os << ' ';
      os << format_double(v[k]);
    }
    os << '\n';
  }
}

void read_blocks(LineReader& in, ParamSet& p) {
  for (std::size_t i = 0; i < p.num_blocks(); ++i) {
    const std::string header = in.next("parameter block");
    const auto parts = split(header, ' ');
    const auto& b = p.block(i);
    if (parts.size() != 4 || parts[0] != "block" || parts[1] != b.name ||
        parse_int(parts[2]) != static_cast<int>(b.rows) ||
        parse_int(parts[3]) != static_cast<int>(b.cols)) {
      fail_line(in.line(), "expected block " + b.name + " " + std::to_string(b.rows) + " " +
                               std::to_string(b.cols));
    }
    const std::string data = in.next("block values");
    const auto values = data.empty() ? std::vector<double>{} : parse_doubles(data, ' ');
    if (values.size() != b.size()) {
      fail_line(in.line(), "block " + b.name + " has " + std::to_string(values.size()) +
                               " values, expected " + std::to_string(b.size()));
    }
    std::copy(values.begin(), values.end(), p.view(i).begin());
  }
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, r.ptr);
}

double parse_double(std::string_view token) {
  double v = 0.0;
  auto r = std::from_chars(token.data(), token.data() + token.size(), v);
  if (r.ec != std::errc() || r.ptr != token.data() + token.size() || token.empty()) {
    throw std::invalid_argument("not a number: '" + std::string(token) + "'");
  }
  return v;
}

std::vector<double> parse_doubles(std::string_view text, char sep) {
  std::vector<double> out;
  for (auto tok : split(text, sep)) out.push_back(parse_double(tok));
  return out;
}

std::vector<int> parse_ints(std::string_view text, char sep) {
  std::vector<int> out;
  for (auto tok : split(text, sep)) out.push_back(parse_int(tok));
  return out;
}

// ---------------------------------------------------------------------------
// Datasets

void write_dataset(std::ostream& os, const Dataset& ds) {
  ds.validate();
  os << "#dim=" << ds.dim << " labels=" << ds.num_labels << '\n';
  for (const auto& seq : ds.sequences) {
    os << seq.id << '\t' << join_ints(seq.labels, ',') << '\t' << join_frames(seq.frames);
    if (seq.has_zc2() || seq.has_h()) {
      os << '\t' << join_frames(seq.zc2) << '\t' << join_frames(seq.h);
    }
    os << '\n';
  }
}

Dataset read_dataset(std::istream& is) {
  Dataset ds;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!have_header) {
      if (std::sscanf(line.c_str(), "#dim=%d labels=%d", &ds.dim, &ds.num_labels) != 2) {
        fail_line(line_no, "expected header '#dim=<d> labels=<K>'");
      }
      have_header = true;
      continue;
    }
    const auto cols = split(line, '\t');
    if (cols.size() != 3 && cols.size() != 5) {
      fail_line(line_no, "expected 3 or 5 tab-separated columns, got " +
                             std::to_string(cols.size()));
    }
    LatentSequence seq;
    try {
      seq.id = std::string(cols[0]);
      seq.labels = parse_ints(cols[1], ',');
      seq.frames = parse_frames(cols[2]);
      if (cols.size() == 5) {
        // An empty column marks an absent side channel.
        if (!cols[3].empty()) seq.zc2 = parse_frames(cols[3]);
        if (!cols[4].empty()) seq.h = parse_frames(cols[4]);
      }
      seq.validate(ds.num_labels);
      if (seq.dim() != ds.dim) {
        throw std::invalid_argument("frame dimension " + std::to_string(seq.dim()) +
                                    " differs from header dim " + std::to_string(ds.dim));
      }
    } catch (const std::invalid_argument& e) {
      fail_line(line_no, e.what());
    }
    ds.sequences.push_back(std::move(seq));
  }
  if (!have_header) throw std::invalid_argument("dataset: missing '#dim=<d> labels=<K>' header");
  ds.validate();
  return ds;
}

std::string dataset_to_string(const Dataset& ds) {
  std::ostringstream os;
  write_dataset(os, ds);
  return os.str();
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset " + path.string());
  try {
    return read_dataset(in);
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Worlds

std::string world_to_string(const World& w) {
  w.validate();
  std::vector<std::vector<double>> codebook(w.codebook.entries().begin(),
                                            w.codebook.entries().end());
  json j = {{"format", kWorldFormat},
            {"spec", spec_to_json(w.spec)},
            {"dim", w.dim()},
            {"num_labels", w.num_labels()},
            {"native", components_to_json(w.native)},
            {"l2", components_to_json(w.l2)},
            {"codebook", codebook},
            {"standardizer",
             {{"mean", w.standardizer.mean()}, {"std", w.standardizer.stddev()}}},
            {"h_noise", w.h_noise},
            {"attempts", w.attempts},
            {"separation", w.separation}};
  return j.dump(1) + "\n";
}

World world_from_string(const std::string& text) {
  try {
    const json j = json::parse(text);
    if (j.at("format").get<std::string>() != kWorldFormat) {
      throw std::invalid_argument("unsupported world format '" +
                                  j.at("format").get<std::string>() + "'");
    }
    World w;
    w.spec = spec_from_json(j.at("spec"));
    const int dim = j.at("dim").get<int>();
    w.native = components_from_json(j.at("native"), dim);
    w.l2 = components_from_json(j.at("l2"), dim);
    w.codebook = Codebook(j.at("codebook").get<std::vector<std::vector<double>>>());
    w.standardizer = Standardizer(j.at("standardizer").at("mean").get<std::vector<double>>(),
                                  j.at("standardizer").at("std").get<std::vector<double>>());
    w.h_noise = j.at("h_noise").get<double>();
    w.attempts = j.at("attempts").get<int>();
    w.separation = j.at("separation").get<double>();
    if (w.num_labels() != j.at("num_labels").get<int>()) {
      throw std::invalid_argument("num_labels does not match the native prior");
    }
    w.validate();
    return w;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("world: malformed JSON: ") + e.what());
  }
}

World load_world(const std::filesystem::path& path) {
  try {
    return world_from_string(read_file(path));
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Models

void write_model(std::ostream& os, const Model& m) {
  const auto& dc = m.denoiser.config();
  const auto& rc = m.residual.config();
  if (rc.dim != dc.dim || m.standardizer.dim() != dc.dim) {
    throw std::invalid_argument("model: denoiser, residual and standardizer dimensions differ");
  }
  if (dc.num_steps != m.schedule.num_steps()) {
    throw std::invalid_argument("model: denoiser and schedule disagree on T");
  }
  os << kModelFormat << '\n';
  os << "schedule linear beta_min=" << format_double(m.schedule.beta_min())
     << " beta_max=" << format_double(m.schedule.beta_max()) << " T=" << m.schedule.num_steps()
     << '\n';
  os << "denoiser dim=" << dc.dim << " labels=" << dc.num_labels << " time_dim=" << dc.time_dim
     << " cond_dim=" << dc.cond_dim << " hidden=" << hidden_string(dc.hidden)
     << " dropout=" << format_double(dc.dropout) << '\n';
  os << "residual hidden=" << hidden_string(rc.hidden) << '\n';
  os << "standardizer mean=" << join(m.standardizer.mean(), ',')
     << " std=" << join(m.standardizer.stddev(), ',') << '\n';
  write_blocks(os, m.denoiser.params());
  write_blocks(os, m.residual.params());
  os << "end\n";
}

Model read_model(std::istream& is) {
  LineReader in(is);
  if (in.next("format header") != kModelFormat) {
    throw std::invalid_argument("model: missing '" + std::string(kModelFormat) + "' header");
  }
  try {
    std::string line = in.next("schedule");
    auto f = parse_fields("x " + expect_prefix(line, "schedule linear ", in.line()), in.line());
    Schedule schedule = Schedule::linear(parse_double(field(f, "beta_min", in.line())),
                                         parse_double(field(f, "beta_max", in.line())),
                                         parse_int(field(f, "T", in.line())));

    line = in.next("denoiser");
    expect_prefix(line, "denoiser ", in.line());
    f = parse_fields(line, in.line());
    DenoiserConfig dc;
    dc.dim = parse_int(field(f, "dim", in.line()));
    dc.num_labels = parse_int(field(f, "labels", in.line()));
    dc.num_steps = schedule.num_steps();
    dc.time_dim = parse_int(field(f, "time_dim", in.line()));
    dc.cond_dim = parse_int(field(f, "cond_dim", in.line()));
    dc.hidden = parse_hidden(field(f, "hidden", in.line()));
    dc.dropout = parse_double(field(f, "dropout", in.line()));

    line = in.next("residual");
    expect_prefix(line, "residual ", in.line());
    f = parse_fields(line, in.line());
    ResidualConfig rc;
    rc.dim = dc.dim;
    rc.hidden = parse_hidden(field(f, "hidden", in.line()));

    line = in.next("standardizer");
    expect_prefix(line, "standardizer ", in.line());
    f = parse_fields(line, in.line());
    Standardizer st(parse_doubles(field(f, "mean", in.line()), ','),
                    parse_doubles(field(f, "std", in.line()), ','));
    if (st.dim() != dc.dim) fail_line(in.line(), "standardizer dimension differs from model");

    Model m{schedule, DenoiserParams::zeros(dc), ResidualParams::zeros(rc), st};
    read_blocks(in, m.denoiser.params());
    read_blocks(in, m.residual.params());
    if (in.next("end marker") != "end") fail_line(in.line(), "expected 'end'");
    return m;
  } catch (const std::invalid_argument& e) {
    const std::string what = e.what();
    if (what.rfind("line ", 0) == 0) throw;
    throw std::invalid_argument("line " + std::to_string(in.line()) + ": " + what);
  }
}

std::string model_to_string(const Model& m) {
  std::ostringstream os;
  write_model(os, m);
  return os.str();
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model " + path.string());
  try {
    return read_model(in);
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Training configuration

TrainConfig train_config_from_string(const std::string& text) {
  TrainConfig c;
  try {
    const json j = json::parse(text);
    if (!j.is_object()) throw std::invalid_argument("train config: expected a JSON object");
    for (const auto& [key, value] : j.items()) {
      if (key == "learning_rate") c.learning_rate = value.get<double>();
      else if (key == "batch_size") c.batch_size = value.get<int>();
      else if (key == "epochs") c.epochs = value.get<int>();
      else if (key == "adam_beta1") c.adam_beta1 = value.get<double>();
      else if (key == "adam_beta2") c.adam_beta2 = value.get<double>();
      else if (key == "adam_epsilon") c.adam_epsilon = value.get<double>();
      else if (key == "lambda") c.residual_weight = value.get<double>();
      else if (key == "seed") c.seed = value.get<uint64_t>();
      else if (key == "hidden") c.hidden = value.get<std::vector<int>>();
      else if (key == "time_dim") c.time_dim = value.get<int>();
      else if (key == "cond_dim") c.cond_dim = value.get<int>();
      else if (key == "residual_hidden") c.residual_hidden = value.get<std::vector<int>>();
      else if (key == "dropout") c.dropout = value.get<double>();
      else if (key == "threads") c.threads = value.get<int>();
      else throw std::invalid_argument("train config: unknown key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("train config: ") + e.what());
  }
  c.validate();
  return c;
}

std::string train_config_to_string(const TrainConfig& c) {
  json j = {{"learning_rate", c.learning_rate}, {"batch_size", c.batch_size},
            {"epochs", c.epochs},               {"adam_beta1", c.adam_beta1},
            {"adam_beta2", c.adam_beta2},       {"adam_epsilon", c.adam_epsilon},
            {"lambda", c.residual_weight},      {"seed", c.seed},
            {"hidden", c.hidden},               {"time_dim", c.time_dim},
            {"cond_dim", c.cond_dim},           {"residual_hidden", c.residual_hidden},
            {"dropout", c.dropout},             {"threads", c.threads}};
  return j.dump(1) + "\n";
}

// ---------------------------------------------------------------------------
// Files

std::vector<std::filesystem::path> write_fig1(const Fig1Data& data,
                                              const std::filesystem::path& dir, bool overwrite) {
  std::filesystem::create_directories(dir);
  auto curve = [&](std::span<const double> density) {
    std::string out = "x,density\n";
    for (std::size_t i = 0; i < data.grid.size(); ++i) {
      out += format_double(data.grid[i]) + ',' + format_double(density[i]) + '\n';
    }
    return out;
  };
  std::vector<std::filesystem::path> written;
  const auto prior_path = dir / "prior.csv";
  write_file(prior_path, curve(data.prior), overwrite);
  written.push_back(prior_path);
  for (std::size_t k = 0; k < data.t_starts.size(); ++k) {
    const auto t = std::to_string(data.t_starts[k]);
    const auto post = dir / ("posterior_" + t + ".csv");
    const auto lik = dir / ("likelihood_" + t + ".csv");
    write_file(post, curve(data.posteriors[k].density), overwrite);
    write_file(lik, curve(data.likelihoods[k]), overwrite);
    written.push_back(post);
    written.push_back(lik);
  }
  return written;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& content, bool overwrite) {
  if (!overwrite && std::filesystem::exists(path)) {
    throw std::runtime_error(path.string() + " exists (use --force to overwrite)");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace priorshift
