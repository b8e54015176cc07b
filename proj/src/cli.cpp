#include "clml/cli.hpp"

#include "clml/data.hpp"
#include "clml/model.hpp"
#include "clml/pareto.hpp"
#include "clml/report.hpp"
#include "clml/seed.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <tuple>

namespace clml {

using nlohmann::json;
namespace fs = std::filesystem;

int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Parse:
    case ErrorKind::Io:
    case ErrorKind::Lookup:
      return kExitInput;
    case ErrorKind::Config:
    case ErrorKind::IncompleteGrid:
    case ErrorKind::Arity:
    case ErrorKind::Dimension:
    case ErrorKind::UndefinedMetric:
      return kExitPrecondition;
    case ErrorKind::Numeric:
      return kExitNumeric;
  }
  return kExitNumeric;
}

namespace {

// --- config ----------------------------------------------------------------

std::string fitness_name(FitnessMode m) {
  switch (m) {
    case FitnessMode::Auto: return "auto";
    case FitnessMode::Exact: return "exact";
    case FitnessMode::MonteCarlo: return "monte_carlo";
  }
  return "auto";
}

FitnessMode parse_fitness(const std::string& s) {
  if (s == "auto") return FitnessMode::Auto;
  if (s == "exact") return FitnessMode::Exact;
  if (s == "monte_carlo") return FitnessMode::MonteCarlo;
  fail(ErrorKind::Parse, "fitness must be 'auto', 'exact' or 'monte_carlo', got '" + s + "'");
}

std::string reference_name(FitnessReference r) {
  return r == FitnessReference::ReferenceSet ? "reference_set" : "unit";
}

FitnessReference parse_reference(const std::string& s) {
  if (s == "reference_set") return FitnessReference::ReferenceSet;
  if (s == "unit") return FitnessReference::Unit;
  fail(ErrorKind::Parse, "fitness_reference must be 'reference_set' or 'unit', got '" + s + "'");
}

fs::path absolute_path(const fs::path& p) { return p.empty() ? p : fs::absolute(p).lexically_normal(); }

const std::vector<std::string> kConfigKeys = {
    "manifest", "out", "seed", "workers", "epochs", "embedding", "mc_samples", "threshold",
    "fitness", "fitness_reference", "archive_cap", "checkpoint_every", "resume", "cma",
    "embeddings", "results", "alpha", "front", "ref", "mc", "checkpoint", "split"};
const std::vector<std::string> kCmaKeys = {"population", "parents", "sigma", "c_cov",
                                           "literal_updates", "step_size_rule"};

void apply_json(RunConfig& c, const json& j, const fs::path& base) {
  if (!j.is_object()) fail(ErrorKind::Parse, "config must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (std::find(kConfigKeys.begin(), kConfigKeys.end(), key) == kConfigKeys.end()) {
      fail(ErrorKind::Parse, "unknown config key '" + key + "'");
    }
  }
  auto path = [&](const char* key, fs::path& dst) {
    if (!j.contains(key)) return;
    fs::path p(expand_env(j.at(key).get<std::string>()));
    dst = p.is_relative() ? (base / p).lexically_normal() : p;
  };
  path("manifest", c.manifest);
  path("out", c.out);
  path("results", c.results);
  path("front", c.front);
  path("checkpoint", c.checkpoint);
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("workers")) c.train.workers = j.at("workers").get<std::size_t>();
  if (j.contains("epochs")) c.train.epochs = j.at("epochs").get<std::size_t>();
  if (j.contains("embedding")) c.train.embedding = j.at("embedding").get<std::size_t>();
  if (j.contains("mc_samples")) c.train.mc_samples = j.at("mc_samples").get<std::uint64_t>();
  if (j.contains("threshold")) c.train.threshold = j.at("threshold").get<double>();
  if (j.contains("fitness")) c.train.fitness = parse_fitness(j.at("fitness").get<std::string>());
  if (j.contains("fitness_reference")) c.train.fitness_reference = parse_reference(j.at("fitness_reference").get<std::string>());
  if (j.contains("archive_cap")) c.train.archive_cap = j.at("archive_cap").get<std::size_t>();
  if (j.contains("checkpoint_every")) c.checkpoint_every = j.at("checkpoint_every").get<std::size_t>();
  if (j.contains("resume")) c.resume = j.at("resume").get<bool>();
  if (j.contains("embeddings")) c.embeddings = j.at("embeddings").get<std::vector<std::size_t>>();
  if (j.contains("alpha")) c.alpha = j.at("alpha").get<double>();
  if (j.contains("mc")) c.mc = j.at("mc").get<bool>();
  if (j.contains("split")) c.split = j.at("split").get<std::string>();
  if (j.contains("ref")) {
    const auto r = j.at("ref").get<std::vector<double>>();
    if (r.size() != 3) fail(ErrorKind::Parse, "ref must hold three numbers");
    c.ref = {r[0], r[1], r[2]};
  }
  if (j.contains("cma")) {
    const json& m = j.at("cma");
    if (!m.is_object()) fail(ErrorKind::Parse, "cma must be a JSON object");
    for (const auto& [key, value] : m.items()) {
      if (std::find(kCmaKeys.begin(), kCmaKeys.end(), key) == kCmaKeys.end()) {
        fail(ErrorKind::Parse, "unknown cma key '" + key + "'");
      }
      if (value.is_null()) continue;
      if (key == "population") c.train.cma.population = value.get<std::size_t>();
      if (key == "parents") c.train.cma.parents = value.get<std::size_t>();
      if (key == "sigma") c.train.cma.sigma = value.get<double>();
      if (key == "c_cov") c.train.cma.c_cov = value.get<double>();
      if (key == "literal_updates") c.train.cma.literal_updates = value.get<bool>();
      if (key == "step_size_rule") c.train.cma.step_size_rule = value.get<bool>();
    }
  }
}

json loss_json(const LossVector& v) { return {{"l1", v.l1}, {"l2", v.l2}, {"l3", v.l3}}; }

json eval_json(const Evaluation& e) {
  json j = loss_json(e.loss);
  j["l4"] = e.l4;
  j["geometric_mean"] = geometric_mean(e.loss);
  return j;
}

void write_json(const json& j, const fs::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, "cannot open '" + path.string() + "' for writing");
  out << j.dump(2) << '\n';
  if (!out) fail(ErrorKind::Io, "failed writing '" + path.string() + "'");
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, "cannot open '" + path.string() + "' for writing");
  out.precision(17);
  return out;
}

std::uint64_t require_seed(RunConfig& c) {
  if (!c.seed) {
    std::random_device rd;
    c.seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  }
  c.train.seed = *c.seed;
  return *c.seed;
}

void prepare_output(const RunConfig& c) {
  std::error_code ec;
  fs::create_directories(c.out, ec);
  if (ec) fail(ErrorKind::Io, "cannot create output directory '" + c.out.string() + "': " + ec.message());
  write_json(to_json(c), c.out / "resolved_config.json");
}

void require_file(const fs::path& p, const char* what) {
  if (p.empty()) fail(ErrorKind::Config, std::string("no ") + what + " given");
  if (!fs::exists(p)) fail(ErrorKind::Io, std::string(what) + " '" + p.string() + "' does not exist");
}

struct LoadedData {
  Dataset dataset;
  SplitIndices split;
  PreparedData prepared;
};

LoadedData load_prepared(const RunConfig& c) {
  require_file(c.manifest, "manifest");
  LoadedData d;
  d.dataset = load_dataset(read_manifest(c.manifest));
  d.split = stratified_split(d.dataset, *c.seed);
  d.prepared = prepare(d.dataset, d.split);
  return d;
}

// --- commands --------------------------------------------------------------

json train_summary(const TrainState& s, const LoadedData& d, const TrainConfig& tc) {
  json j;
  j["dataset"] = d.dataset.name;
  j["seed"] = tc.seed;
  j["epochs"] = s.epoch;
  j["shape"] = {{"d", s.shape.d}, {"c", s.shape.c}, {"k", s.shape.k}, {"parameters", s.shape.parameter_count()}};
  j["optimizer"] = {{"lambda", s.cma.lambda}, {"mu", s.cma.mu}, {"sigma", s.cma.sigma}, {"c_cov", s.cma.c_cov}};
  j["splits"] = {{"train", d.split.train.size()}, {"validation", d.split.validation.size()}, {"test", d.split.test.size()}};
  j["imputed_values"] = d.dataset.imputed_values;
  j["final"] = {{"fitness", s.incumbent_fitness},
                {"validation", eval_json(evaluate(s.incumbent, d.prepared.validation, tc.threshold))},
                {"test", eval_json(evaluate(s.incumbent, d.prepared.test, tc.threshold))}};
  for (std::size_t l = 0; l < 3; ++l) {
    const auto& b = s.best[l];
    j["incumbents"]["l" + std::to_string(l + 1)] = {
        {"epoch", b.epoch},
        {"candidate", b.candidate},
        {"validation", eval_json(b.validation)},
        {"test", eval_json(evaluate(b.params, d.prepared.test, tc.threshold))}};
  }
  j["archive"] = {{"size", s.archive.size()}, {"hypervolume", s.hv_history.empty() ? 0.0 : s.hv_history.back()}};
  j["reference_set_size"] = s.ref_set.size();
  return j;
}

void write_history(const TrainState& s, const fs::path& path) {
  auto out = open_output(path);
  out << "epoch,best_l1,best_l2,best_l3,archive_hypervolume\n";
  for (std::size_t t = 0; t < s.best_history.size(); ++t) {
    const auto& b = s.best_history[t];
    out << t << ',' << b.l1 << ',' << b.l2 << ',' << b.l3 << ',' << s.hv_history[t] << '\n';
  }
}

void save_checkpoint(const TrainState& s, const RunConfig& c) {
  save_state(s, c.out / "checkpoint.state");
  json side = to_json(c);
  side["epoch"] = s.epoch;
  write_json(side, c.out / "checkpoint.json");
}

int cmd_train(RunConfig c, std::ostream& out) {
  require_seed(c);
  c.train.validate();
  const LoadedData d = load_prepared(c);
  prepare_output(c);

  TrainState state;
  const fs::path ckpt = c.out / "checkpoint.state";
  if (c.resume && fs::exists(ckpt)) {
    state = load_state(ckpt);
    const ModelShape expected{d.dataset.d(), c.train.embedding, d.dataset.k()};
    if (!(state.shape == expected)) fail(ErrorKind::Config, "checkpoint shape does not match the dataset and embedding");
    if (state.epoch > c.train.epochs) fail(ErrorKind::Config, "checkpoint is past the requested epoch count");
  } else {
    state = initial_state(d.prepared, c.train);
  }
  train(state, d.prepared, c.train, [&](const TrainState& s) {
    if (c.checkpoint_every > 0 && s.epoch % c.checkpoint_every == 0) save_checkpoint(s, c);
  });
  save_checkpoint(state, c);
  save_model(state.incumbent, c.out / "model.bin");
  for (std::size_t l = 0; l < 3; ++l) {
    save_model(state.best[l].params, c.out / ("best_l" + std::to_string(l + 1) + ".bin"));
  }
  emit_curves(state, c.out / "curves.csv");
  write_history(state, c.out / "history.csv");
  const json summary = train_summary(state, d, c.train);
  write_json(summary, c.out / "summary.json");
  out << summary.dump(2) << '\n';
  return kExitOk;
}

int cmd_eval(RunConfig c, std::ostream& out) {
  if (!c.seed) fail(ErrorKind::Config, "eval needs the seed the model was trained with (pass --seed or the run's resolved_config.json)");
  require_seed(c);
  require_file(c.checkpoint, "checkpoint");
  const LoadedData d = load_prepared(c);
  const ModelParams params = load_model(c.checkpoint);
  const SplitData* split = nullptr;
  if (c.split == "train") split = &d.prepared.train;
  else if (c.split == "validation") split = &d.prepared.validation;
  else if (c.split == "test") split = &d.prepared.test;
  else fail(ErrorKind::Config, "split must be train, validation or test, got '" + c.split + "'");
  prepare_output(c);

  const ScoreMatrix scores = forward(params, split->x);
  const Evaluation e{loss_vector(scores, split->y, c.train.threshold), bce(scores, split->y)};
  const CalibrationData cal = calibration_export(scores, split->y, kDistributionBins, kCalibrationBins, c.train.threshold);
  write_distribution_csv(cal, c.out / "distribution.csv");
  write_calibration_csv(cal, c.out / "calibration.csv");
  json j = {{"dataset", d.dataset.name}, {"split", c.split}, {"samples", split->n()}, {"losses", eval_json(e)}};
  write_json(j, c.out / "eval.json");
  out << j.dump(2) << '\n';
  return kExitOk;
}

std::vector<TaggedPoint> read_front(const fs::path& path) {
  require_file(path, "front file");
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open '" + path.string() + "'");
  std::vector<TaggedPoint> points;
  std::string line;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) {
      const auto a = cell.find_first_not_of(" \t\r");
      const auto b = cell.find_last_not_of(" \t\r");
      f.push_back(a == std::string::npos ? "" : cell.substr(a, b - a + 1));
    }
    const std::string where = path.string() + ":" + std::to_string(line_no) + ": ";
    // Either l1,l2,l3 or tag,l1,l2,l3.
    if (f.size() != 3 && f.size() != 4) fail(ErrorKind::Parse, where + "expected 3 or 4 fields, found " + std::to_string(f.size()));
    const std::size_t off = f.size() - 3;
    LossVector v;
    bool numeric = true;
    for (std::size_t j = 0; j < 3 && numeric; ++j) {
      std::size_t used = 0;
      try {
        v[j] = std::stod(f[off + j], &used);
      } catch (const std::exception&) {
        used = 0;
      }
      numeric = used > 0 && used == f[off + j].size() && std::isfinite(v[j]);
    }
    if (!numeric) {
      if (first) {
        first = false;
        continue;  // header
      }
      fail(ErrorKind::Parse, where + "loss values must be finite numbers");
    }
    first = false;
    points.push_back({v, off ? f[0] : "row" + std::to_string(points.size())});
  }
  if (points.empty()) fail(ErrorKind::Parse, path.string() + ": no loss triples");
  return points;
}

int cmd_hv(RunConfig c, std::ostream& out) {
  const auto points = read_front(c.front);
  if (c.mc) require_seed(c);
  prepare_output(c);
  std::vector<LossVector> losses;
  for (const auto& p : points) losses.push_back(p.loss);
  const LossVector refs[] = {c.ref};
  json j;
  j["total"] = exact_hypervolume(std::span<const LossVector>(losses), std::span<const LossVector>(refs));
  j["ref"] = loss_json(c.ref);
  auto csv = open_output(c.out / "hv.csv");
  csv << "tag,l1,l2,l3,contribution" << (c.mc ? ",mc_contribution" : "") << '\n';
  for (std::size_t i = 0; i < points.size(); ++i) {
    json row = loss_json(points[i].loss);
    row["tag"] = points[i].tag;
    row["contribution"] = exact_contribution_at(losses, i, refs);
    csv << points[i].tag << ',' << points[i].loss.l1 << ',' << points[i].loss.l2 << ',' << points[i].loss.l3 << ','
        << row["contribution"].get<double>();
    if (c.mc) {
      row["mc_contribution"] = mc_contribution_at(losses, i, refs, c.train.mc_samples, derive_seed(*c.seed, i));
      csv << ',' << row["mc_contribution"].get<double>();
    }
    csv << '\n';
    j["points"].push_back(row);
  }
  if (c.mc) j["mc_samples"] = c.train.mc_samples;
  write_json(j, c.out / "hv.json");
  out << j.dump(2) << '\n';
  return kExitOk;
}

int cmd_stats(RunConfig c, std::ostream& out) {
  require_file(c.manifest, "manifest");
  const Dataset d = load_dataset(read_manifest(c.manifest));
  prepare_output(c);
  const DatasetStats s = compute_stats(d);
  const json j = {{"dataset", d.name},      {"n", s.n},
                  {"d", s.d},               {"k", s.k},
                  {"dk", s.dk},             {"cardinality", s.cardinality},
                  {"dispersion", s.dispersion}, {"interaction", s.interaction},
                  {"imputed_values", d.imputed_values}};
  write_json(j, c.out / "stats.json");
  out << j.dump(2) << '\n';
  return kExitOk;
}

json friedman_json(const FriedmanResult& f) {
  return {{"statistic", f.statistic},
          {"treatments", f.treatments},
          {"blocks", f.blocks},
          {"df", f.treatments - 1},
          {"critical_value", f.critical_value},
          {"reject_null", f.statistic > f.critical_value}};
}

int cmd_report(RunConfig c, std::ostream& out) {
  require_file(c.results, "results file");
  const ResultsTable loaded = load_results(c.results);
  // Sorted rows make every output independent of the input row order.
  std::vector<ResultRow> rows = loaded.rows();
  std::sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
    return std::tie(a.dataset, a.method) < std::tie(b.dataset, b.method);
  });
  const ResultsTable table(std::move(rows));
  const GeometricTable g = geometric_table(table);
  std::vector<RankSummary> ranks;
  for (Criterion cr : {Criterion::L1, Criterion::L2, Criterion::L3, Criterion::GeometricMean}) {
    ranks.push_back(rank_summary(table, cr, c.alpha));
  }
  const auto contributions = contribution_table(table, c.ref);
  prepare_output(c);

  auto geo = open_output(c.out / "geometric.csv");
  geo << "dataset,method,l1,l2,l3,geometric_mean\n";
  for (std::size_t i = 0; i < g.datasets.size(); ++i) {
    for (std::size_t j = 0; j < g.methods.size(); ++j) {
      const LossVector& v = *table.find(g.datasets[i], g.methods[j]);
      geo << g.datasets[i] << ',' << g.methods[j] << ',' << v.l1 << ',' << v.l2 << ',' << v.l3 << ','
          << g.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) << '\n';
    }
  }
  auto med = open_output(c.out / "medians.csv");
  med << "method,median_geometric_mean\n";
  json medians;
  for (std::size_t j = 0; j < g.methods.size(); ++j) {
    med << g.methods[j] << ',' << g.medians(static_cast<Eigen::Index>(j)) << '\n';
    medians[g.methods[j]] = g.medians(static_cast<Eigen::Index>(j));
  }
  auto con = open_output(c.out / "contributions.csv");
  con << "dataset,method,contribution,normalized_contribution\n";
  for (const auto& r : contributions) con << r.dataset << ',' << r.method << ',' << r.contribution << ',' << r.normalized << '\n';

  auto rk = open_output(c.out / "ranks.csv");
  rk << "criterion,method,mean_rank\n";
  json mean_ranks;
  json friedman;
  for (const auto& s : ranks) {
    const std::string name = criterion_name(s.criterion);
    for (std::size_t j = 0; j < s.methods.size(); ++j) {
      rk << name << ',' << s.methods[j] << ',' << s.mean_ranks(static_cast<Eigen::Index>(j)) << '\n';
      mean_ranks[name][s.methods[j]] = s.mean_ranks(static_cast<Eigen::Index>(j));
    }
    friedman[name] = {{"methods_as_treatments", friedman_json(s.by_method)},
                      {"datasets_as_treatments", friedman_json(s.by_dataset)}};
  }
  json j = {{"medians", medians},
            {"mean_ranks", mean_ranks},
            {"friedman", friedman},
            {"cd", ranks.front().cd},
            {"alpha", c.alpha},
            {"methods", g.methods.size()},
            {"datasets", g.datasets.size()},
            {"note",
             "Friedman statistics are reported with methods as treatments (df = methods - 1) and with "
             "datasets as treatments (df = datasets - 1); the two orientations answer different questions."}};
  write_json(j, c.out / "summary.json");
  out << j.dump(2) << '\n';
  return kExitOk;
}

int cmd_sweep(RunConfig c, std::ostream& out) {
  if (c.embeddings.empty()) fail(ErrorKind::Config, "sweep needs a non-empty embedding list");
  require_seed(c);
  c.train.validate();
  const LoadedData d = load_prepared(c);
  prepare_output(c);
  auto table = open_output(c.out / "sweep.csv");
  table << "embedding,parameters,l1,l2,l3,l4,archive_hypervolume\n";
  auto traj = open_output(c.out / "hv_trajectory.csv");
  traj << "embedding,epoch,archive_hypervolume\n";
  json rows = json::array();
  for (std::size_t emb : c.embeddings) {
    TrainConfig tc = c.train;
    tc.embedding = emb;
    const TrainState s = train(d.prepared, tc);
    double l4 = evaluate(ModelParams::zeros(s.shape), d.prepared.validation, tc.threshold).l4;
    for (const auto& r : s.curves) {
      if (r.split == Split::Validation) l4 = std::min(l4, r.eval.l4);
    }
    const LossVector best{s.best[0].validation.loss.l1, s.best[1].validation.loss.l2, s.best[2].validation.loss.l3};
    table << emb << ',' << s.shape.parameter_count() << ',' << best.l1 << ',' << best.l2 << ',' << best.l3 << ','
          << l4 << ',' << s.hv_history.back() << '\n';
    for (std::size_t t = 0; t < s.hv_history.size(); ++t) traj << emb << ',' << t << ',' << s.hv_history[t] << '\n';
    json row = loss_json(best);
    row["embedding"] = emb;
    row["parameters"] = s.shape.parameter_count();
    row["l4"] = l4;
    row["archive_hypervolume"] = s.hv_history.back();
    rows.push_back(row);
  }
  const json j = {{"dataset", d.dataset.name}, {"seed", *c.seed}, {"epochs", c.train.epochs}, {"rows", rows}};
  write_json(j, c.out / "sweep.json");
  out << j.dump(2) << '\n';
  return kExitOk;
}

void report_error(std::ostream& err, const std::string& kind, const std::string& message, int code) {
  const json j = {{"error", {{"kind", kind}, {"message", message}, {"exit_code", code}}}};
  err << j.dump() << '\n';
}

}  // namespace

RunConfig read_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open config '" + path.string() + "'");
  RunConfig c;
  try {
    json j;
    in >> j;
    apply_json(c, j, absolute_path(path).parent_path());
  } catch (const json::exception& e) {
    fail(ErrorKind::Parse, path.string() + ": " + e.what());
  }
  return c;
}

json to_json(const RunConfig& c) {
  json cma = json::object();
  cma["population"] = c.train.cma.population ? json(*c.train.cma.population) : json(nullptr);
  cma["parents"] = c.train.cma.parents ? json(*c.train.cma.parents) : json(nullptr);
  cma["sigma"] = c.train.cma.sigma ? json(*c.train.cma.sigma) : json(nullptr);
  cma["c_cov"] = c.train.cma.c_cov ? json(*c.train.cma.c_cov) : json(nullptr);
  cma["literal_updates"] = c.train.cma.literal_updates;
  cma["step_size_rule"] = c.train.cma.step_size_rule;
  json j = {{"out", absolute_path(c.out).string()},
            {"workers", c.train.workers},
            {"epochs", c.train.epochs},
            {"embedding", c.train.embedding},
            {"mc_samples", c.train.mc_samples},
            {"threshold", c.train.threshold},
            {"fitness", fitness_name(c.train.fitness)},
            {"fitness_reference", reference_name(c.train.fitness_reference)},
            {"archive_cap", c.train.archive_cap},
            {"checkpoint_every", c.checkpoint_every},
            {"resume", c.resume},
            {"cma", cma},
            {"embeddings", c.embeddings},
            {"alpha", c.alpha},
            {"ref", {c.ref.l1, c.ref.l2, c.ref.l3}},
            {"mc", c.mc},
            {"split", c.split}};
  if (c.seed) j["seed"] = *c.seed;
  if (!c.manifest.empty()) j["manifest"] = absolute_path(c.manifest).string();
  if (!c.results.empty()) j["results"] = absolute_path(c.results).string();
  if (!c.front.empty()) j["front"] = absolute_path(c.front).string();
  if (!c.checkpoint.empty()) j["checkpoint"] = absolute_path(c.checkpoint).string();
  return j;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Hypervolume-driven multi-label learning: train, evaluate, and report.", "clml"};
  app.require_subcommand(1);

  struct Flags {
    std::string config, out, manifest, results, front, checkpoint, split, ref;
    std::uint64_t seed = 0, mc_samples = 0;
    std::size_t workers = 0, epochs = 0, embedding = 0, checkpoint_every = 0;
    double threshold = 0.0, alpha = 0.0;
    bool exact = false, literal = false, resume = false;
    std::vector<std::size_t> embeddings;
  } f;

  struct Bound {
    CLI::App* cmd;
    std::map<std::string, CLI::Option*> opt;
  };
  std::vector<Bound> commands;
  auto add = [&](const char* name, const char* help) -> Bound& {
    Bound b{app.add_subcommand(name, help), {}};
    b.opt["config"] = b.cmd->add_option("--config", f.config, "JSON run config; flags override its values");
    b.opt["seed"] = b.cmd->add_option("--seed", f.seed, "root seed (generated and recorded when absent)");
    b.opt["out"] = b.cmd->add_option("--out", f.out, "output directory");
    b.opt["workers"] = b.cmd->add_option("--workers", f.workers, "parallel workers for candidate evaluation")->check(CLI::PositiveNumber);
    b.opt["exact"] = b.cmd->add_flag("--exact-fitness", f.exact, "always compute exact contributions");
    b.opt["mc"] = b.cmd->add_option("--mc-samples", f.mc_samples, "Monte Carlo samples per contribution estimate")->check(CLI::PositiveNumber);
    b.opt["threshold"] = b.cmd->add_option("--threshold", f.threshold, "binarization threshold in (0, 1)");
    b.opt["literal"] = b.cmd->add_flag("--literal-cma", f.literal, "use the uncentred (as printed) mean and covariance updates");
    commands.push_back(std::move(b));
    return commands.back();
  };
  commands.reserve(6);

  {
    auto& b = add("train", "train a model on a dataset manifest");
    b.opt["manifest"] = b.cmd->add_option("--manifest", f.manifest, "dataset manifest JSON");
    b.opt["epochs"] = b.cmd->add_option("--epochs", f.epochs, "number of epochs T");
    b.opt["embedding"] = b.cmd->add_option("--embedding", f.embedding, "embedding width c")->check(CLI::PositiveNumber);
    b.opt["resume"] = b.cmd->add_flag("--resume", f.resume, "continue from <out>/checkpoint.state if present");
    b.opt["checkpoint_every"] = b.cmd->add_option("--checkpoint-every", f.checkpoint_every, "epochs between checkpoints (0: only at the end)");
  }
  {
    auto& b = add("eval", "evaluate a saved model on one split");
    b.opt["checkpoint"] = b.cmd->add_option("--checkpoint", f.checkpoint, "model file written by train");
    b.opt["manifest"] = b.cmd->add_option("--manifest", f.manifest, "dataset manifest JSON");
    b.opt["split"] = b.cmd->add_option("--split", f.split, "train, validation or test");
  }
  {
    auto& b = add("hv", "hypervolume and contributions of a CSV of loss triples");
    b.opt["front"] = b.cmd->add_option("front,--front", f.front, "CSV of l1,l2,l3 or tag,l1,l2,l3 rows");
    b.opt["ref"] = b.cmd->add_option("--ref", f.ref, "reference vector a,b,c");
  }
  {
    auto& b = add("stats", "dataset statistics");
    b.opt["manifest"] = b.cmd->add_option("manifest,--manifest", f.manifest, "dataset manifest JSON");
  }
  {
    auto& b = add("report", "geometric means, rank statistics and contributions of a results table");
    b.opt["results"] = b.cmd->add_option("results,--results", f.results, "CSV with dataset,method,l1,l2,l3");
    b.opt["alpha"] = b.cmd->add_option("--alpha", f.alpha, "significance level");
  }
  {
    auto& b = add("sweep", "train once per embedding width");
    b.opt["manifest"] = b.cmd->add_option("--manifest", f.manifest, "dataset manifest JSON");
    b.opt["epochs"] = b.cmd->add_option("--epochs", f.epochs, "number of epochs T");
    b.opt["embeddings"] = b.cmd->add_option("--embeddings", f.embeddings, "comma-separated embedding widths")->delimiter(',');
  }

  try {
    try {
      app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
      out << app.help("", CLI::AppFormatMode::All);
      return kExitOk;
    } catch (const CLI::ParseError& e) {
      report_error(err, "usage", e.what(), kExitInput);
      return kExitInput;
    }

    const Bound* active = nullptr;
    for (const auto& b : commands) {
      if (b.cmd->parsed()) active = &b;
    }
    auto given = [&](const char* key) {
      const auto it = active->opt.find(key);
      return it != active->opt.end() && it->second->count() > 0;
    };

    RunConfig c;
    if (given("config")) c = read_run_config(f.config);
    if (given("seed")) c.seed = f.seed;
    if (given("out")) c.out = f.out;
    if (given("workers")) c.train.workers = f.workers;
    if (given("exact")) c.train.fitness = FitnessMode::Exact;
    if (given("mc")) {
      c.train.mc_samples = f.mc_samples;
      c.mc = true;
    }
    if (given("threshold")) c.train.threshold = f.threshold;
    if (given("literal")) c.train.cma.literal_updates = true;
    if (given("manifest")) c.manifest = f.manifest;
    if (given("epochs")) c.train.epochs = f.epochs;
    if (given("embedding")) c.train.embedding = f.embedding;
    if (given("resume")) c.resume = true;
    if (given("checkpoint_every")) c.checkpoint_every = f.checkpoint_every;
    if (given("checkpoint")) c.checkpoint = f.checkpoint;
    if (given("split")) c.split = f.split;
    if (given("front")) c.front = f.front;
    if (given("results")) c.results = f.results;
    if (given("alpha")) c.alpha = f.alpha;
    if (given("embeddings")) c.embeddings = f.embeddings;
    if (given("ref")) {
      std::vector<double> r;
      std::stringstream ss(f.ref);
      for (std::string cell; std::getline(ss, cell, ',');) {
        try {
          r.push_back(std::stod(cell));
        } catch (const std::exception&) {
          fail(ErrorKind::Parse, "--ref must be three comma-separated numbers");
        }
      }
      if (r.size() != 3) fail(ErrorKind::Parse, "--ref must be three comma-separated numbers");
      c.ref = {r[0], r[1], r[2]};
    }

    const std::string name = active->cmd->get_name();
    if (name == "train") return cmd_train(c, out);
    if (name == "eval") return cmd_eval(c, out);
    if (name == "hv") return cmd_hv(c, out);
    if (name == "stats") return cmd_stats(c, out);
    if (name == "report") return cmd_report(c, out);
    return cmd_sweep(c, out);
  } catch (const Error& e) {
    const int code = exit_code(e.kind());
    report_error(err, std::string(to_string(e.kind())), e.what(), code);
    return code;
  } catch (const json::exception& e) {
    report_error(err, "parse", e.what(), kExitInput);
    return kExitInput;
  } catch (const fs::filesystem_error& e) {
    report_error(err, "io", e.what(), kExitInput);
    return kExitInput;
  } catch (const std::exception& e) {
    report_error(err, "internal", e.what(), kExitNumeric);
    return kExitNumeric;
  }
}

}  // namespace clml
