//
// Copyright 2026 The RACE Sketch Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

// race: build, release, merge and query RACE sketches from the shell.
//
// Exit codes: 0 success, 2 usage, 3 data or parse error, 4 contract
// violation (frozen sketch, double release, incompatible sketches).

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "race/format.hpp"
#include "race/race.hpp"

namespace {

using json = nlohmann::ordered_json;

constexpr const char* kVersion = "1.0.0";

enum Exit : int { kOk = 0, kUsage = 2, kData = 3, kContract = 4 };

int ExitFor(race::ErrorCode code) {
  using race::ErrorCode;
  switch (code) {
    case ErrorCode::kFrozenSketch:
    case ErrorCode::kDoubleRelease:
    case ErrorCode::kIncompatibleSketch:
      return kContract;
    case ErrorCode::kInvalidParameter:
    case ErrorCode::kInsufficientRows:
      return kUsage;
    default:
      return kData;
  }
}

// Usage problems found after parsing (e.g. inconsistent flag values).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Shared flag handling

struct CsvFlags {
  bool header = false;
  char delimiter = ',';

  void Register(CLI::App* cmd) {
    cmd->add_flag("--header", header, "First line of every CSV is a header");
    cmd->add_option("--delimiter", delimiter, "CSV field delimiter");
  }

  race::CsvOptions Options(std::optional<int> label = std::nullopt) const {
    return race::CsvOptions{header, delimiter, label};
  }
};

struct FamilyFlags {
  std::string lsh = "srp";
  std::uint32_t depth = 4;
  double bandwidth = 1.0;
  std::uint32_t rows = 1000;
  std::uint32_t range = 500;
  std::uint64_t seed = 0;

  void Register(CLI::App* cmd) {
    cmd->add_option("--lsh", lsh, "LSH family")->check(CLI::IsMember({"srp", "euclidean"}));
    cmd->add_option("--depth", depth, "Concatenated hashes per row (p)");
    cmd->add_option("--bandwidth", bandwidth, "Bucket width for euclidean LSH");
    cmd->add_option("--rows", rows, "Sketch rows (R)");
    cmd->add_option("--range", range, "Buckets per row (W)");
    cmd->add_option("--seed", seed, "Hash seed");
  }

  race::LshFamily Family(std::size_t dim) const {
    const auto kind = lsh == "srp" ? race::LshKind::kSrp : race::LshKind::kEuclideanPStable;
    return race::NewFamily(kind, static_cast<std::uint32_t>(dim), depth, bandwidth, range, seed);
  }
};

race::ScaleMode ParseScale(const std::string& s) {
  if (s == "sphere") return race::ScaleMode::kUnitSphere;
  if (s == "cube") return race::ScaleMode::kUnitCube;
  return race::ScaleMode::kNone;
}

const char* ScaleName(race::ScaleMode m) {
  switch (m) {
    case race::ScaleMode::kUnitSphere:
      return "sphere";
    case race::ScaleMode::kUnitCube:
      return "cube";
    default:
      return "none";
  }
}

const char* KindName(race::LshKind k) {
  switch (k) {
    case race::LshKind::kSrp:
      return "srp";
    case race::LshKind::kEuclideanPStable:
      return "euclidean";
    default:
      return "asymmetric_srp";
  }
}

json FamilyJson(const race::LshFamily& f) {
  return json{{"lsh", KindName(f.kind)}, {"dim", f.dim},     {"depth", f.depth},
              {"bandwidth", f.bandwidth}, {"range", f.range}, {"seed", f.seed}};
}

json ScalingJson(const race::ScaleParams& p) {
  return json{{"mode", ScaleName(p.mode)}, {"min", p.min}, {"max", p.max}};
}

race::ScaleParams ScalingFromJson(const json& j) {
  race::ScaleParams p;
  p.mode = ParseScale(j.at("mode").get<std::string>());
  p.min = j.at("min").get<std::vector<double>>();
  p.max = j.at("max").get<std::vector<double>>();
  return p;
}

json ReadJson(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw race::Error(race::ErrorCode::kIo, "cannot open " + path);
  return json::parse(in);
}

void WriteJson(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw race::Error(race::ErrorCode::kIo, "cannot write " + path);
  out << j.dump(2) << '\n';
}

// Scaling from a build manifest, a model file or a bare scaling record.
race::ScaleParams LoadScaling(const std::string& path) {
  if (path.empty()) return {};
  const json j = ReadJson(path);
  if (j.contains("results")) return ScalingFromJson(j.at("results").at("scaling"));
  return ScalingFromJson(j.contains("scaling") ? j.at("scaling") : j);
}

race::NoiseSeed MakeNoise(const std::optional<std::uint64_t>& seed) {
  if (!seed) return race::NoiseSeed::FromEntropy();
  std::cerr << "warning: fixed noise seed; the released sketch is NOT private\n";
  return race::NoiseSeed::Deterministic(*seed);
}

json NoiseJson(const std::optional<std::uint64_t>& seed) {
  if (!seed) return "entropy";
  return json{{"deterministic_seed", *seed}, {"private", false}};
}

// Results go to --output when given, stdout otherwise.
class Sink {
 public:
  explicit Sink(const std::string& path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw race::Error(race::ErrorCode::kIo, "cannot write " + path);
    }
  }
  std::ostream& get() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

// Numbers stay numbers in the manifest; everything else is a string.
json FlagValue(const std::string& text) {
  json v = json::parse(text, nullptr, false);
  return v.is_number() ? v : json(text);
}

// Echo of every resolved flag of the subcommand.
json FlagsJson(const CLI::App* cmd) {
  json flags = json::object();
  for (const CLI::Option* opt : cmd->get_options()) {
    const std::string name = opt->get_name();
    if (name == "--help" || name.empty()) continue;
    if (opt->get_expected_min() == 0) {
      flags[name] = opt->count() > 0;
    } else if (opt->get_expected_max() > 1) {
      json values = json::array();
      for (const auto& r : opt->results()) values.push_back(FlagValue(r));
      flags[name] = values;
    } else if (opt->count() > 0) {
      flags[name] = FlagValue(opt->results().back());
    } else if (!opt->get_default_str().empty()) {
      flags[name] = FlagValue(opt->get_default_str());
    } else {
      flags[name] = nullptr;
    }
  }
  return flags;
}

// The manifest lands next to the output file, or on stderr.
void EmitManifest(const CLI::App* cmd, json results, const std::string& output) {
  json m{{"tool", "race"}, {"version", kVersion}, {"command", cmd->get_name()},
         {"flags", FlagsJson(cmd)}, {"results", std::move(results)}};
  if (output.empty()) {
    std::cerr << m.dump(2) << '\n';
  } else {
    WriteJson(output + ".manifest.json", m);
  }
}

std::vector<double> ParseVector(const std::string& text) {
  std::vector<double> out;
  std::size_t column = 1;
  std::string field;
  std::istringstream in(text);
  while (std::getline(in, field, ',')) out.push_back(race::detail::ParseReal(field, 1, column++));
  return out;
}

std::string Stem(const std::string& path) {
  const std::filesystem::path p(path);
  return (p.parent_path() / p.stem()).string();
}

// ---------------------------------------------------------------------------
// Commands

struct BuildCmd {
  std::string input, output, scale = "none";
  FamilyFlags family;
  CsvFlags csv;
  std::optional<int> label_column;
  unsigned threads = 1;
  std::size_t chunk = 65536;

  void Register(CLI::App* cmd) {
    cmd->add_option("--input", input, "CSV of points")->required();
    cmd->add_option("--output", output, "Sketch file to write")->required();
    cmd->add_option("--scale", scale, "Input scaling")->check(CLI::IsMember({"none", "sphere", "cube"}));
    cmd->add_option("--label-column", label_column, "Column to skip (0-based, -1 = last)");
    cmd->add_option("--threads", threads, "Insertion threads");
    cmd->add_option("--chunk", chunk, "Rows read per batch")->check(CLI::PositiveNumber);
    family.Register(cmd);
    csv.Register(cmd);
  }

  int Run(const CLI::App* cmd) {
    const auto options = csv.Options(label_column);
    race::ScaleParams scaling;
    scaling.mode = ParseScale(scale);
    std::vector<double> row;
    if (scaling.mode == race::ScaleMode::kUnitCube) {
      // First pass fits the per-feature range.
      std::ifstream in(input);
      if (!in) throw race::Error(race::ErrorCode::kIo, "cannot open " + input);
      race::CsvReader reader(in, options);
      while (reader.Next(row)) {
        if (scaling.min.empty()) {
          scaling.min = row;
          scaling.max = row;
        }
        race::detail::RequireDim(row.size(), scaling.min.size());
        for (std::size_t j = 0; j < row.size(); ++j) {
          scaling.min[j] = std::min(scaling.min[j], row[j]);
          scaling.max[j] = std::max(scaling.max[j], row[j]);
        }
      }
    }
    std::ifstream in(input);
    if (!in) throw race::Error(race::ErrorCode::kIo, "cannot open " + input);
    race::CsvReader reader(in, options);
    std::unique_ptr<race::RaceSketch> sketch;
    race::Dataset batch;
    auto flush = [&] {
      if (!batch.empty()) race::AddAll(*sketch, batch, threads);
      batch = race::Dataset(batch.dim());
    };
    while (reader.Next(row)) {
      if (!sketch) {
        sketch = std::make_unique<race::RaceSketch>(family.Family(row.size()), family.rows);
        batch = race::Dataset(row.size());
      }
      race::detail::RequireDim(row.size(), batch.dim());
      batch.Append(race::ApplyTransform(scaling, row));
      if (batch.size() >= chunk) flush();
    }
    if (!sketch) throw race::Error(race::ErrorCode::kParse, "no data rows in " + input);
    flush();
    race::WriteSketchFile(output, *sketch);
    EmitManifest(cmd,
                 json{{"family", FamilyJson(sketch->family())},
                      {"rows", sketch->rows()},
                      {"inserted", *sketch->inserted()},
                      {"scaling", ScalingJson(scaling)}},
                 output);
    return kOk;
  }
};

struct PrivatizeCmd {
  std::string sketch, output, budget_path;
  double epsilon = 0.0;
  std::optional<std::uint64_t> seed;

  void Register(CLI::App* cmd) {
    cmd->add_option("--sketch", sketch, "Clean sketch file")->required();
    cmd->add_option("--epsilon", epsilon, "Privacy budget")->required();
    cmd->add_option("--output", output, "Released sketch file")->required();
    cmd->add_option("--budget", budget_path, "Budget record shared by releases of one dataset");
    cmd->add_option("--seed", seed, "Fixed noise seed (NOT private; tests only)");
  }

  int Run(const CLI::App* cmd) {
    auto clean = race::ReadSketchFile(sketch);
    std::optional<race::PrivacyBudget> budget;
    if (!budget_path.empty() && std::filesystem::exists(budget_path)) {
      const json record = ReadJson(budget_path);
      const double recorded = record.at("epsilon").get<double>();
      if (recorded != epsilon) {
        throw UsageError("budget file records epsilon " + std::to_string(recorded));
      }
      budget.emplace(recorded, record.at("consumed").get<bool>());
    } else {
      budget.emplace(epsilon);
    }
    const auto released = race::Privatize(std::move(clean), *budget, MakeNoise(seed));
    race::WriteSketchFile(output, released);
    if (!budget_path.empty()) {
      WriteJson(budget_path, json{{"epsilon", epsilon}, {"consumed", true}, {"release", output}});
    }
    EmitManifest(cmd,
                 json{{"family", FamilyJson(released.family())},
                      {"rows", released.rows()},
                      {"epsilon", epsilon},
                      {"laplace_scale", race::LaplaceScale(released.rows(), epsilon)},
                      {"noise", NoiseJson(seed)}},
                 output);
    return kOk;
  }
};

struct MergeCmd {
  std::vector<std::string> inputs;
  std::string output;

  void Register(CLI::App* cmd) {
    cmd->add_option("--inputs", inputs, "Clean sketch files")->required()->expected(1, -1);
    cmd->add_option("--output", output, "Merged sketch file")->required();
  }

  int Run(const CLI::App* cmd) {
    auto merged = race::ReadSketchFile(inputs.front());
    for (std::size_t i = 1; i < inputs.size(); ++i) {
      merged = race::Merge(merged, race::ReadSketchFile(inputs[i]));
    }
    if (merged.privatized()) {
      throw race::Error(race::ErrorCode::kFrozenSketch, "privatized sketches cannot be merged");
    }
    race::WriteSketchFile(output, merged);
    EmitManifest(cmd, json{{"inputs", inputs.size()}, {"inserted", *merged.inserted()}}, output);
    return kOk;
  }
};

struct QueryCmd {
  std::string sketch, queries, output, scaling, estimator = "mom";
  double delta = 0.1;
  CsvFlags csv;
  std::optional<int> label_column;

  void Register(CLI::App* cmd) {
    cmd->add_option("--sketch", sketch, "Sketch file")->required();
    cmd->add_option("--queries", queries, "CSV of query points")->required();
    cmd->add_option("--label-column", label_column, "Column to skip (0-based, -1 = last)");
    cmd->add_option("--delta", delta, "Failure probability for median-of-means");
    cmd->add_option("--estimator", estimator, "Estimator")->check(CLI::IsMember({"mean", "mom"}));
    cmd->add_option("--scaling", scaling, "Build manifest whose scaling is applied to queries");
    cmd->add_option("--output", output, "CSV output (default stdout)");
    csv.Register(cmd);
  }

  int Run(const CLI::App* cmd) {
    const auto s = race::ReadSketchFile(sketch);
    const auto params = LoadScaling(scaling);
    const auto mode = estimator == "mean" ? race::Estimator::kMean : race::Estimator::kMedianOfMeans;
    std::ifstream in(queries);
    if (!in) throw race::Error(race::ErrorCode::kIo, "cannot open " + queries);
    race::CsvReader reader(in, csv.Options(label_column));
    Sink sink(output);
    auto& out = sink.get();
    out << "query_id,f_hat,n_hat,kde\n";
    std::vector<double> q;
    std::size_t id = 0;
    while (reader.Next(q)) {
      const auto est = race::Query(s, race::ApplyTransform(params, q), mode, delta);
      out << id++ << ',' << race::FormatReal(est.f_hat) << ',' << race::FormatReal(est.n_hat)
          << ',' << race::FormatReal(est.kde) << '\n';
    }
    EmitManifest(cmd, json{{"queries", id}}, output);
    return kOk;
  }
};

struct InfoCmd {
  std::string sketch;

  void Register(CLI::App* cmd) {
    cmd->add_option("--sketch", sketch, "Sketch file")->required();
  }

  int Run(const CLI::App* cmd) {
    const auto s = race::ReadSketchFile(sketch);
    json j{{"family", FamilyJson(s.family())},
           {"rows", s.rows()},
           {"range", s.range()},
           {"privatized", s.privatized()}};
    if (s.privatized()) {
      j["epsilon"] = *s.epsilon();
    } else {
      j["inserted"] = *s.inserted();
    }
    j["n_hat"] = race::EstimateSize(s);
    j["counter_bytes"] = s.CounterBytes();
    j["file_bytes"] = std::filesystem::file_size(sketch);
    std::cout << j.dump(2) << '\n';
    EmitManifest(cmd, j, "");
    return kOk;
  }
};

struct ClassifyTrainCmd {
  std::string input, output, scale = "none";
  FamilyFlags family;
  CsvFlags csv;
  int label_column = -1;
  double epsilon = 0.0, delta = 0.1;
  std::optional<std::uint64_t> noise_seed;

  void Register(CLI::App* cmd) {
    cmd->add_option("--input", input, "CSV of points with a label column")->required();
    cmd->add_option("--output", output, "Model manifest (JSON)")->required();
    cmd->add_option("--label-column", label_column, "Label column (0-based, -1 = last)");
    cmd->add_option("--scale", scale, "Input scaling")->check(CLI::IsMember({"none", "sphere", "cube"}));
    cmd->add_option("--epsilon", epsilon, "Privacy budget per class sketch")->required();
    cmd->add_option("--delta", delta, "Failure probability for median-of-means");
    cmd->add_option("--noise-seed", noise_seed, "Fixed noise seed (NOT private; tests only)");
    family.Register(cmd);
    csv.Register(cmd);
  }

  int Run(const CLI::App* cmd) {
    const auto table = race::LoadCsv(input, csv.Options(label_column));
    const auto scaled = race::Scale(table.data, ParseScale(scale));
    std::map<std::string, std::size_t> index;
    std::vector<race::LabeledData> classes;
    for (std::size_t i = 0; i < scaled.size(); ++i) {
      const auto& label = table.labels[i];
      auto [it, fresh] = index.emplace(label, classes.size());
      if (fresh) classes.push_back({label, race::Dataset(scaled.dim())});
      classes[it->second].data.Append(scaled.row(i));
    }
    const auto fam = family.Family(scaled.dim());
    const auto clf = race::TrainClassifier(classes, fam, family.rows, epsilon,
                                           MakeNoise(noise_seed), delta);
    json files = json::array();
    json counts = json::array();
    for (std::size_t c = 0; c < classes.size(); ++c) {
      const std::string path = Stem(output) + ".class" + std::to_string(c) + ".race";
      race::WriteSketchFile(path, clf.sketches()[c]);
      files.push_back(std::filesystem::path(path).filename().string());
      counts.push_back(classes[c].data.size());
    }
    const json model{{"labels", clf.labels()},
                     {"sketches", files},
                     {"delta", delta},
                     {"epsilon", epsilon},
                     {"family", FamilyJson(fam)},
                     {"rows", family.rows},
                     {"scaling", ScalingJson(scaled.scaling())}};
    WriteJson(output, model);
    EmitManifest(cmd, json{{"classes", clf.labels()}, {"class_sizes", counts},
                           {"noise", NoiseJson(noise_seed)}},
                 output);
    return kOk;
  }
};

struct ClassifyPredictCmd {
  std::string model, queries, output, rule = "ml";
  CsvFlags csv;
  std::optional<int> label_column;

  void Register(CLI::App* cmd) {
    cmd->add_option("--label-column", label_column, "Column to skip (0-based, -1 = last)");
    cmd->add_option("--model", model, "Model manifest from classify-train")->required();
    cmd->add_option("--queries", queries, "CSV of query points")->required();
    cmd->add_option("--rule", rule, "Decision rule")->check(CLI::IsMember({"ml", "map"}));
    cmd->add_option("--output", output, "CSV output (default stdout)");
    csv.Register(cmd);
  }

  int Run(const CLI::App* cmd) {
    const json m = ReadJson(model);
    const auto dir = std::filesystem::path(model).parent_path();
    std::vector<race::RaceSketch> sketches;
    for (const auto& f : m.at("sketches")) {
      sketches.push_back(race::ReadSketchFile((dir / f.get<std::string>()).string()));
    }
    const auto labels = m.at("labels").get<std::vector<std::string>>();
    const race::Classifier clf(labels, std::move(sketches), m.at("delta").get<double>());
    const auto params = ScalingFromJson(m.at("scaling"));
    const auto decision =
        rule == "map" ? race::DecisionRule::kMaxPosterior : race::DecisionRule::kMaxLikelihood;
    std::ifstream in(queries);
    if (!in) throw race::Error(race::ErrorCode::kIo, "cannot open " + queries);
    race::CsvReader reader(in, csv.Options(label_column));
    Sink sink(output);
    auto& out = sink.get();
    out << "query_id,label";
    for (const auto& l : labels) out << ",kde_" << l;
    out << '\n';
    std::vector<double> q;
    std::size_t id = 0;
    while (reader.Next(q)) {
      const auto scores = clf.Scores(race::ApplyTransform(params, q));
      out << id++ << ',' << labels[race::Classifier::Decide(scores, decision)];
      for (const auto& s : scores) out << ',' << race::FormatReal(s.kde);
      out << '\n';
    }
    EmitManifest(cmd, json{{"queries", id}}, output);
    return kOk;
  }
};

struct RegressCmd {
  std::string input, output;
  CsvFlags csv;
  int target_column = -1;
  race::RegressionConfig config;
  std::optional<std::uint64_t> noise_seed;

  void Register(CLI::App* cmd) {
    config.rows = 40000;
    config.range = 16;
    cmd->add_option("--input", input, "CSV of features and target")->required();
    cmd->add_option("--output", output, "Model file (JSON)")->required();
    cmd->add_option("--target-column", target_column, "Target column (0-based, -1 = last)");
    cmd->add_option("--depth", config.depth, "SRP depth (p >= 2)");
    cmd->add_option("--rows", config.rows, "Sketch rows (R)");
    cmd->add_option("--range", config.range, "Buckets per row (W)");
    cmd->add_option("--epsilon", config.epsilon, "Privacy budget")->required();
    cmd->add_option("--seed", config.seed, "Hash seed");
    cmd->add_flag("--intercept", config.fit_intercept, "Fit an intercept term");
    cmd->add_option("--max-iters", config.optimizer.max_iters, "Iterations per simplex run");
    cmd->add_option("--restarts", config.optimizer.restarts, "Simplex restarts");
    cmd->add_option("--simplex-scale", config.optimizer.simplex_scale, "Initial simplex edge");
    cmd->add_option("--noise-seed", noise_seed, "Fixed noise seed (NOT private; tests only)");
    csv.Register(cmd);
  }

  int Run(const CLI::App* cmd) {
    const auto table = race::LoadCsv(input, csv.Options(target_column));
    const auto targets = race::ParseTargets(table.labels);
    const auto model = race::FitRegression(table.data, targets, config, MakeNoise(noise_seed));
    const std::string sketch_path = Stem(output) + ".race";
    race::WriteSketchFile(sketch_path, *model.sketch);
    const json record{
        {"theta", model.theta},
        {"intercept", model.intercept},
        {"scaled_theta", model.scaled_theta},
        {"scaled_intercept", model.scaled_intercept},
        {"feature_scaler", json{{"min", model.feature_scaler.min}, {"max", model.feature_scaler.max}}},
        {"target_scaler", json{{"min", model.target_scaler.min}, {"max", model.target_scaler.max}}},
        {"fit_intercept", config.fit_intercept},
        {"sketch", std::filesystem::path(sketch_path).filename().string()}};
    WriteJson(output, record);
    std::cout << json{{"theta", model.theta}, {"intercept", model.intercept}}.dump() << '\n';
    EmitManifest(cmd, json{{"surrogate_loss", model.trace.back()},
                           {"iterations", model.trace.size()},
                           {"noise", NoiseJson(noise_seed)}},
                 output);
    return kOk;
  }
};

struct ModeCmd {
  std::string sketch, init, scaling, output;
  double delta = 0.1;
  race::OptimizerConfig optimizer;

  void Register(CLI::App* cmd) {
    cmd->add_option("--sketch", sketch, "Sketch file")->required();
    cmd->add_option("--init", init, "Start point, comma separated")->required();
    cmd->add_option("--scaling", scaling, "Build manifest whose scaling is applied to --init");
    cmd->add_option("--delta", delta, "Failure probability for median-of-means");
    cmd->add_option("--max-iters", optimizer.max_iters, "Iterations per simplex run");
    cmd->add_option("--restarts", optimizer.restarts, "Simplex restarts");
    cmd->add_option("--simplex-scale", optimizer.simplex_scale, "Initial simplex edge");
    cmd->add_option("--output", output, "JSON output (default stdout)");
  }

  int Run(const CLI::App* cmd) {
    const auto s = race::ReadSketchFile(sketch);
    const auto params = LoadScaling(scaling);
    const auto start = race::ApplyTransform(params, ParseVector(init));
    const auto mode = race::FindMode(s, start, optimizer, delta);
    json result{{"point", mode.point}, {"kde", mode.kde}, {"initial_kde", mode.initial_kde}};
    if (params.mode == race::ScaleMode::kUnitCube) {
      std::vector<double> original(mode.point.size());
      for (std::size_t j = 0; j < original.size(); ++j) {
        original[j] = params.min[j] + mode.point[j] * (params.max[j] - params.min[j]);
      }
      result["point_original"] = original;
    }
    Sink sink(output);
    sink.get() << result.dump(2) << '\n';
    EmitManifest(cmd, result, output);
    return kOk;
  }
};

struct BenchCmd {
  std::vector<std::size_t> sizes{100000, 200000};
  std::size_t dim = 10, queries = 200;
  std::uint32_t depth = 4, rows = 500, range = 500;
  unsigned repeats = 3, threads = 1;
  std::uint64_t seed = 0;
  std::string output;

  void Register(CLI::App* cmd) {
    cmd->add_option("--sizes", sizes, "Dataset sizes N")->expected(1, -1);
    cmd->add_option("--dim", dim, "Dimension d");
    cmd->add_option("--depth", depth, "SRP depth");
    cmd->add_option("--rows", rows, "Sketch rows (R)");
    cmd->add_option("--range", range, "Buckets per row (W)");
    cmd->add_option("--queries", queries, "Timed queries per size");
    cmd->add_option("--repeats", repeats, "Builds per size; the fastest is reported")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--threads", threads, "Insertion threads");
    cmd->add_option("--seed", seed, "Data and hash seed");
    cmd->add_option("--output", output, "CSV output (default stdout)");
  }

  int Run(const CLI::App* cmd) {
    using Clock = std::chrono::steady_clock;
    const auto family = race::NewFamily(race::LshKind::kSrp, static_cast<std::uint32_t>(dim),
                                        depth, 1.0, range, seed);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    const std::size_t largest = *std::max_element(sizes.begin(), sizes.end());
    race::Dataset all(dim);
    std::vector<double> point(dim);
    for (std::size_t i = 0; i < largest; ++i) {
      for (double& v : point) v = gauss(rng);
      all.Append(point);
    }
    std::vector<std::vector<double>> qs(queries, std::vector<double>(dim));
    for (auto& q : qs) {
      for (double& v : q) v = gauss(rng);
    }
    Sink sink(output);
    auto& out = sink.get();
    out << "n,dim,rows,range,build_seconds,ns_per_insert,query_seconds,counter_bytes,"
           "serialized_bytes,ratio_to_previous\n";
    json table = json::array();
    double previous = 0.0;
    for (std::size_t n : sizes) {
      race::Dataset data(dim, std::vector<double>(all.values().begin(),
                                                  all.values().begin() + n * dim));
      double best = 1e300;
      std::optional<race::RaceSketch> sketch;
      for (unsigned rep = 0; rep < repeats; ++rep) {
        const auto t0 = Clock::now();
        sketch.emplace(race::Build(data, family, rows, threads));
        best = std::min(best, std::chrono::duration<double>(Clock::now() - t0).count());
      }
      double query_seconds = 0.0;
      if (!qs.empty() && rows >= race::GroupCount(0.1)) {
        const auto t0 = Clock::now();
        for (const auto& q : qs) race::QueryMedianOfMeans(*sketch, q, 0.1);
        query_seconds = std::chrono::duration<double>(Clock::now() - t0).count() / qs.size();
      }
      const double ratio = previous > 0.0 ? best / previous : 0.0;
      const auto bytes = race::Serialize(*sketch).size();
      out << n << ',' << dim << ',' << rows << ',' << range << ',' << race::FormatReal(best)
          << ',' << race::FormatReal(best / static_cast<double>(n) * 1e9) << ','
          << race::FormatReal(query_seconds) << ',' << sketch->CounterBytes() << ',' << bytes
          << ',' << race::FormatReal(ratio) << '\n';
      table.push_back(json{{"n", n}, {"build_seconds", best}, {"ratio_to_previous", ratio}});
      previous = best;
    }
    EmitManifest(cmd, table, output);
    return kOk;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RACE sketches: private kernel density estimation and learning"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  BuildCmd build;
  PrivatizeCmd privatize;
  MergeCmd merge;
  QueryCmd query;
  InfoCmd info;
  ClassifyTrainCmd classify_train;
  ClassifyPredictCmd classify_predict;
  RegressCmd regress;
  ModeCmd mode;
  BenchCmd bench;

  std::vector<std::pair<CLI::App*, std::function<int(const CLI::App*)>>> commands;
  auto add = [&](const char* name, const char* help, auto& command) {
    CLI::App* sub = app.add_subcommand(name, help);
    command.Register(sub);
    commands.emplace_back(sub, [&command](const CLI::App* c) { return command.Run(c); });
  };
  add("build", "Build a clean sketch from a CSV file", build);
  add("privatize", "Release a sketch with Laplace noise", privatize);
  add("merge", "Sum clean sketches with identical hashing", merge);
  add("query", "Estimate kernel sums and densities", query);
  add("info", "Describe a sketch file", info);
  add("classify-train", "Train one private sketch per class", classify_train);
  add("classify-predict", "Classify points with a trained model", classify_predict);
  add("regress", "Fit a linear model through the surrogate loss", regress);
  add("mode", "Search for a local density mode", mode);
  add("bench", "Time builds and queries over dataset sizes", bench);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  for (auto& [sub, run] : commands) {
    if (!sub->parsed()) continue;
    try {
      return run(sub);
    } catch (const race::Error& e) {
      std::cerr << "error: " << e.what() << '\n';
      return ExitFor(e.code());
    } catch (const UsageError& e) {
      std::cerr << "usage error: " << e.what() << '\n';
      return kUsage;
    } catch (const json::exception& e) {
      std::cerr << "error (json): " << e.what() << '\n';
      return kData;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return 1;
    }
  }
  return kUsage;
}
