#include "clml/trainer.hpp"

#include "clml/binary_io.hpp"
#include "clml/error.hpp"
#include "clml/parallel.hpp"
#include "clml/seed.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <fstream>
#include <sstream>

namespace clml {

namespace {

std::string candidate_tag(std::size_t epoch, std::size_t candidate) {
  return "e" + std::to_string(epoch) + "c" + std::to_string(candidate);
}

void update_bests(TrainState& state, const ModelParams& params, const Evaluation& val,
                  std::size_t epoch, std::size_t candidate) {
  for (std::size_t j = 0; j < 3; ++j) {
    if (val.loss[j] < state.best[j].validation.loss[j]) {
      state.best[j] = {params, val, epoch, candidate};
    }
  }
}

void record_history(TrainState& state) {
  state.best_history.push_back(
      {state.best[0].validation.loss.l1, state.best[1].validation.loss.l2, state.best[2].validation.loss.l3});
  std::vector<LossVector> losses;
  losses.reserve(state.archive.size());
  for (const auto& p : state.archive) losses.push_back(p.loss);
  state.hv_history.push_back(exact_hypervolume(std::span<const LossVector>(losses), kUnitReference));
}

}  // namespace

void TrainConfig::validate() const {
  if (mc_samples < 1) fail(ErrorKind::Config, "mc_samples must be >= 1");
  if (embedding < 1) fail(ErrorKind::Config, "embedding must be >= 1");
  if (!(threshold > 0.0 && threshold < 1.0)) fail(ErrorKind::Config, "threshold must lie in (0, 1)");
  if (workers < 1) fail(ErrorKind::Config, "workers must be >= 1");
  if (archive_cap < 1) fail(ErrorKind::Config, "archive_cap must be >= 1");
}

Evaluation evaluate(const ModelParams& params, const SplitData& split, double threshold) {
  if (split.n() == 0) fail(ErrorKind::Config, "cannot evaluate on an empty split");
  const ScoreMatrix scores = forward(params, split.x);
  return {loss_vector(scores, split.y, threshold), bce(scores, split.y)};
}

std::string split_name(Split split) { return split == Split::Train ? "train" : "validation"; }

bool archive_insert(std::vector<TaggedPoint>& archive, TaggedPoint point, std::size_t cap) {
  for (const auto& p : archive) {
    if (weakly_dominates(p.loss, point.loss)) return false;
  }
  std::erase_if(archive, [&](const TaggedPoint& p) { return dominates(point.loss, p.loss); });
  archive.push_back(std::move(point));
  bool kept = true;
  while (archive.size() > cap) {
    std::vector<LossVector> losses;
    losses.reserve(archive.size());
    for (const auto& p : archive) losses.push_back(p.loss);
    const LossVector refs[] = {kUnitReference};
    std::size_t worst = 0;
    double worst_value = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < losses.size(); ++i) {
      const double c = exact_contribution_at(losses, i, refs);
      if (c < worst_value) {
        worst_value = c;
        worst = i;
      }
    }
    if (worst + 1 == archive.size()) kept = false;
    archive.erase(archive.begin() + static_cast<std::ptrdiff_t>(worst));
  }
  return kept;
}

TrainState initial_state(const PreparedData& data, const TrainConfig& config) {
  config.validate();
  if (data.train.n() == 0) fail(ErrorKind::Config, "training split is empty");
  if (data.validation.n() == 0) fail(ErrorKind::Config, "validation split is empty");

  TrainState state;
  state.shape = {static_cast<std::size_t>(data.train.x.cols()), config.embedding,
                 static_cast<std::size_t>(data.train.y.cols())};
  state.incumbent = ModelParams::zeros(state.shape);
  state.cma = CmaState::create(state.incumbent.flat, config.cma);
  const TaggedPoint unit[] = {{kUnitReference, "unit"}};
  state.ref_set = nondominated_filter(unit);

  const Evaluation val = evaluate(state.incumbent, data.validation, config.threshold);
  for (auto& b : state.best) b = {state.incumbent, val, 0, 0};
  archive_insert(state.archive, {val.loss, candidate_tag(0, 0)}, config.archive_cap);
  record_history(state);
  return state;
}

std::vector<double> population_fitness(std::span<const LossVector> population, const Front& ref_set,
                                       const TrainConfig& config, std::uint64_t epoch_seed) {
  const std::vector<LossVector> refs =
      config.fitness_reference == FitnessReference::ReferenceSet ? ref_set.losses()
                                                                 : std::vector<LossVector>{kUnitReference};
  const bool exact = config.fitness == FitnessMode::Exact ||
                     (config.fitness == FitnessMode::Auto &&
                      population.size() + refs.size() <= kInclusionExclusionLimit);
  std::vector<double> fitness(population.size());
  parallel_for(population.size(), config.workers, [&](std::size_t i) {
    fitness[i] = exact ? exact_contribution_at(population, i, refs)
                       : mc_contribution_at(population, i, refs, config.mc_samples,
                                            derive_seed(derive_seed(epoch_seed, i), kMonteCarloStream));
  });
  return fitness;
}

void run_epoch(TrainState& state, const PreparedData& data, const TrainConfig& config) {
  const std::size_t t = state.epoch + 1;
  const std::uint64_t epoch_seed = derive_seed(config.seed, t);
  const std::size_t lambda = state.cma.lambda;

  std::vector<Vector> population(lambda);
  std::vector<Evaluation> train_eval(lambda);
  std::vector<Evaluation> val_eval(lambda);
  parallel_for(lambda, config.workers, [&](std::size_t i) {
    population[i] = sample_candidate(state.cma, epoch_seed, i);
    const ModelParams params{state.shape, population[i]};
    train_eval[i] = evaluate(params, data.train, config.threshold);
    val_eval[i] = evaluate(params, data.validation, config.threshold);
  });

  std::vector<LossVector> train_losses(lambda);
  for (std::size_t i = 0; i < lambda; ++i) train_losses[i] = train_eval[i].loss;
  const std::vector<double> fitness = population_fitness(train_losses, state.ref_set, config, epoch_seed);

  // Archive validation losses in candidate order.
  for (std::size_t i = 0; i < lambda; ++i) {
    const ModelParams params{state.shape, population[i]};
    update_bests(state, params, val_eval[i], t, i);
    archive_insert(state.archive, {val_eval[i].loss, candidate_tag(t, i)}, config.archive_cap);
    state.curves.push_back({t, i, Split::Train, train_eval[i], fitness[i]});
    state.curves.push_back({t, i, Split::Validation, val_eval[i], fitness[i]});
  }

  const std::vector<std::size_t> order = rank_by_fitness(fitness);
  std::vector<Vector> ranked(lambda);
  for (std::size_t r = 0; r < lambda; ++r) ranked[r] = population[order[r]];
  std::size_t successes = 0;
  for (double f : fitness) successes += f > 0.0 ? 1 : 0;

  advance_generation(state.cma, ranked);
  if (state.cma.step_size_rule) {
    adapt_step_size(state.cma, static_cast<double>(successes) / static_cast<double>(lambda));
  }

  std::vector<TaggedPoint> tagged(lambda);
  for (std::size_t i = 0; i < lambda; ++i) tagged[i] = {train_losses[i], candidate_tag(t, i)};
  state.ref_set = update_reference_set(state.ref_set, tagged);

  state.incumbent = ModelParams{state.shape, population[order[0]]};
  state.incumbent_fitness = fitness[order[0]];
  state.epoch = t;
  record_history(state);
}

void train(TrainState& state, const PreparedData& data, const TrainConfig& config,
           const EpochCallback& on_epoch) {
  config.validate();
  while (state.epoch < config.epochs) {
    run_epoch(state, data, config);
    if (on_epoch) on_epoch(state);
  }
}

TrainState train(const PreparedData& data, const TrainConfig& config, const EpochCallback& on_epoch) {
  TrainState state = initial_state(data, config);
  train(state, data, config, on_epoch);
  return state;
}

// --- curves ---------------------------------------------------------------

void emit_curves(const TrainState& state, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, "cannot open '" + path.string() + "' for writing");
  out << "epoch,candidate,split,l1,l2,l3,l4,fitness\n";
  out.precision(17);
  for (const auto& r : state.curves) {
    out << r.epoch << ',' << r.candidate << ',' << split_name(r.split) << ',' << r.eval.loss.l1 << ','
        << r.eval.loss.l2 << ',' << r.eval.loss.l3 << ',' << r.eval.l4 << ',' << r.fitness << '\n';
  }
  if (!out) fail(ErrorKind::Io, "failed writing '" + path.string() + "'");
}

std::vector<CurveRecord> read_curves(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open '" + path.string() + "'");
  std::vector<CurveRecord> out;
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) fail(ErrorKind::Parse, path.string() + ": missing header");
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() != 8) fail(ErrorKind::Parse, path.string() + ":" + std::to_string(line_no) + ": expected 8 fields");
    CurveRecord r;
    try {
      r.epoch = std::stoull(f[0]);
      r.candidate = std::stoull(f[1]);
      if (f[2] != "train" && f[2] != "validation") throw std::invalid_argument("split");
      r.split = f[2] == "train" ? Split::Train : Split::Validation;
      r.eval.loss = {std::stod(f[3]), std::stod(f[4]), std::stod(f[5])};
      r.eval.l4 = std::stod(f[6]);
      r.fitness = std::stod(f[7]);
    } catch (const std::exception&) {
      fail(ErrorKind::Parse, path.string() + ":" + std::to_string(line_no) + ": malformed curve row");
    }
    out.push_back(r);
  }
  return out;
}

// --- checkpoint -----------------------------------------------------------

namespace {

constexpr std::string_view kStateMagic = "CLMS";
constexpr std::uint8_t kStateVersion = 1;

void write_loss(BinaryWriter& w, const LossVector& v) {
  w.f64(v.l1);
  w.f64(v.l2);
  w.f64(v.l3);
}

LossVector read_loss(BinaryReader& r) {
  LossVector v;
  v.l1 = r.f64();
  v.l2 = r.f64();
  v.l3 = r.f64();
  return v;
}

void write_vector(BinaryWriter& w, const Vector& v) { w.matrix(v); }

Vector read_vector(BinaryReader& r) {
  const Matrix m = r.matrix();
  if (m.cols() != 1 && m.size() != 0) fail(ErrorKind::Parse, "checkpoint: expected a column vector");
  return m;
}

void write_points(BinaryWriter& w, std::span<const TaggedPoint> points) {
  w.u64(points.size());
  for (const auto& p : points) {
    write_loss(w, p.loss);
    w.str(p.tag);
  }
}

std::vector<TaggedPoint> read_points(BinaryReader& r) {
  const auto n = r.u64();
  if (n > (1ULL << 32)) fail(ErrorKind::Parse, "checkpoint: implausible point count");
  std::vector<TaggedPoint> out(n);
  for (auto& p : out) {
    p.loss = read_loss(r);
    p.tag = r.str();
  }
  return out;
}

void write_eval(BinaryWriter& w, const Evaluation& e) {
  write_loss(w, e.loss);
  w.f64(e.l4);
}

Evaluation read_eval(BinaryReader& r) {
  Evaluation e;
  e.loss = read_loss(r);
  e.l4 = r.f64();
  return e;
}

}  // namespace

void save_state(const TrainState& s, const std::filesystem::path& path) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) fail(ErrorKind::Io, "cannot open '" + tmp.string() + "' for writing");
    BinaryWriter w(out);
    w.bytes(kStateMagic);
    w.u8(kStateVersion);
    w.u64(s.shape.d);
    w.u64(s.shape.c);
    w.u64(s.shape.k);
    w.u64(s.epoch);

    const CmaState& c = s.cma;
    write_vector(w, c.mean);
    w.matrix(c.cov);
    w.f64(c.sigma);
    w.u64(c.lambda);
    w.u64(c.mu);
    write_vector(w, c.weights);
    w.f64(c.c_cov);
    w.u8(c.literal_updates);
    w.u8(c.step_size_rule);
    w.matrix(c.factor);
    w.u8(c.factor_triangular);

    write_points(w, s.ref_set.points());
    write_vector(w, s.incumbent.flat);
    w.f64(s.incumbent_fitness);
    for (const auto& b : s.best) {
      write_vector(w, b.params.flat);
      write_eval(w, b.validation);
      w.u64(b.epoch);
      w.u64(b.candidate);
    }
    write_points(w, s.archive);
    w.u64(s.best_history.size());
    for (const auto& v : s.best_history) write_loss(w, v);
    w.u64(s.hv_history.size());
    w.f64s(s.hv_history);
    w.u64(s.curves.size());
    for (const auto& r : s.curves) {
      w.u64(r.epoch);
      w.u64(r.candidate);
      w.u8(r.split == Split::Train ? 0 : 1);
      write_eval(w, r.eval);
      w.f64(r.fitness);
    }
    if (!out) fail(ErrorKind::Io, "failed writing '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

TrainState load_state(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open checkpoint '" + path.string() + "'");
  BinaryReader r(in, path.string());
  r.expect_magic(kStateMagic);
  if (const auto v = r.u8(); v != kStateVersion) {
    fail(ErrorKind::Parse, path.string() + ": unsupported checkpoint version " + std::to_string(v));
  }
  TrainState s;
  s.shape.d = r.u64();
  s.shape.c = r.u64();
  s.shape.k = r.u64();
  s.shape.validate();
  s.epoch = r.u64();

  CmaState& c = s.cma;
  c.mean = read_vector(r);
  c.cov = r.matrix();
  c.sigma = r.f64();
  c.lambda = r.u64();
  c.mu = r.u64();
  c.weights = read_vector(r);
  c.c_cov = r.f64();
  c.literal_updates = r.u8() != 0;
  c.step_size_rule = r.u8() != 0;
  c.factor = r.matrix();
  c.factor_triangular = r.u8() != 0;

  const auto L = static_cast<Eigen::Index>(s.shape.parameter_count());
  if (c.mean.size() != L || c.cov.rows() != L || c.cov.cols() != L || c.factor.rows() != L ||
      c.factor.cols() != L || c.weights.size() != static_cast<Eigen::Index>(c.mu) || c.mu >= c.lambda) {
    fail(ErrorKind::Parse, path.string() + ": optimizer state does not match the model shape");
  }

  const auto ref_points = read_points(r);
  s.ref_set = nondominated_filter(ref_points);
  if (s.ref_set.size() != ref_points.size()) fail(ErrorKind::Parse, path.string() + ": reference set is not mutually non-dominating");

  auto read_params = [&] {
    ModelParams p{s.shape, read_vector(r)};
    if (p.flat.size() != L) fail(ErrorKind::Parse, path.string() + ": parameter vector length mismatch");
    return p;
  };
  s.incumbent = read_params();
  s.incumbent_fitness = r.f64();
  for (auto& b : s.best) {
    b.params = read_params();
    b.validation = read_eval(r);
    b.epoch = r.u64();
    b.candidate = r.u64();
  }
  s.archive = read_points(r);
  const auto nb = r.u64();
  if (nb > (1ULL << 32)) fail(ErrorKind::Parse, path.string() + ": implausible history length");
  s.best_history.resize(nb);
  for (auto& v : s.best_history) v = read_loss(r);
  const auto nh = r.u64();
  if (nh > (1ULL << 32)) fail(ErrorKind::Parse, path.string() + ": implausible history length");
  s.hv_history.resize(nh);
  r.f64s(s.hv_history);
  const auto nc = r.u64();
  if (nc > (1ULL << 40)) fail(ErrorKind::Parse, path.string() + ": implausible curve count");
  s.curves.resize(nc);
  for (auto& rec : s.curves) {
    rec.epoch = r.u64();
    rec.candidate = r.u64();
    rec.split = r.u8() == 0 ? Split::Train : Split::Validation;
    rec.eval = read_eval(r);
    rec.fitness = r.f64();
  }
  return s;
}

}  // namespace clml
