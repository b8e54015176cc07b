#pragma once

#include "clml/cmaes.hpp"
#include "clml/data.hpp"
#include "clml/losses.hpp"
#include "clml/model.hpp"
#include "clml/pareto.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace clml {

inline constexpr std::size_t kDefaultEpochs = 750;
inline constexpr std::uint64_t kDefaultMcSamples = 10000;
inline constexpr std::size_t kDefaultArchiveCap = 512;

/// How candidate fitness (the Lebesgue contribution) is computed.
///   Auto: exact while |population| + |reference set| <= kInclusionExclusionLimit,
///         Monte Carlo otherwise.
///   Exact: always exact.
///   MonteCarlo: always Monte Carlo with mc_samples draws.
enum class FitnessMode { Auto, Exact, MonteCarlo };

/// Upper bound of the region a candidate's contribution is measured in.
///   ReferenceSet: R^t, the non-dominated training losses of all earlier
///                 generations; a candidate scores only where it improves on them.
///   Unit: {1}^3 for every generation; candidates compete only with their own
///         population. R^t is still maintained and checkpointed.
enum class FitnessReference { ReferenceSet, Unit };

struct TrainConfig {
  std::size_t epochs = kDefaultEpochs;
  std::size_t embedding = kRecommendedEmbedding;
  std::uint64_t mc_samples = kDefaultMcSamples;
  std::uint64_t seed = 0;
  CmaConfig cma;
  double threshold = kDefaultThreshold;
  FitnessMode fitness = FitnessMode::Auto;
  FitnessReference fitness_reference = FitnessReference::ReferenceSet;
  std::size_t workers = 1;
  std::size_t archive_cap = kDefaultArchiveCap;

  void validate() const;
};

/// Losses of one model on one split; l4 is the cross-entropy, tracked only.
struct Evaluation {
  LossVector loss;
  double l4 = 0.0;
};

Evaluation evaluate(const ModelParams& params, const SplitData& split,
                    double threshold = kDefaultThreshold);

enum class Split { Train, Validation };

struct CurveRecord {
  std::size_t epoch = 0;  // 1-based; epoch t holds the candidates sampled from m^{t-1}
  std::size_t candidate = 0;
  Split split = Split::Train;
  Evaluation eval;
  double fitness = 0.0;
};

/// A model kept by the archive together with its validation losses.
struct ArchiveEntry {
  ModelParams params;
  Evaluation validation;
  std::size_t epoch = 0;
  std::size_t candidate = 0;
};

struct TrainState {
  CmaState cma;
  ModelShape shape;
  Front ref_set;              // R^t over training losses
  std::size_t epoch = 0;      // completed epochs
  ModelParams incumbent;      // f^t
  double incumbent_fitness = 0.0;
  std::array<ArchiveEntry, 3> best;        // lowest validation l1, l2, l3 so far
  std::vector<TaggedPoint> archive;        // non-dominated validation losses
  std::vector<LossVector> best_history;    // per-loss bests after each epoch (index 0: initial model)
  std::vector<double> hv_history;          // archive hypervolume w.r.t. (1,1,1), same indexing
  std::vector<CurveRecord> curves;
};

/// Epoch-0 state: zero mean, identity covariance, R^0 = {(1,1,1)}, and the
/// zero model evaluated and archived.
TrainState initial_state(const PreparedData& data, const TrainConfig& config);

/// Lebesgue contribution of every population member: points are the
/// candidates' training losses, bounded per config.fitness_reference.
std::vector<double> population_fitness(std::span<const LossVector> population,
                                       const Front& ref_set, const TrainConfig& config,
                                       std::uint64_t epoch_seed);

/// One pass of the loop: sample, evaluate, score, archive, update. The state
/// only depends on the seed, never on the worker count.
void run_epoch(TrainState& state, const PreparedData& data, const TrainConfig& config);

using EpochCallback = std::function<void(const TrainState&)>;

/// Runs epochs until state.epoch == config.epochs. The callback fires after every epoch.
void train(TrainState& state, const PreparedData& data, const TrainConfig& config,
           const EpochCallback& on_epoch = {});

TrainState train(const PreparedData& data, const TrainConfig& config,
                 const EpochCallback& on_epoch = {});

/// Inserts a validation loss into the non-dominated archive and prunes it back
/// to `cap` points by repeatedly dropping the smallest exact contribution.
/// Returns true if the point was kept.
bool archive_insert(std::vector<TaggedPoint>& archive, TaggedPoint point, std::size_t cap);

std::string split_name(Split split);

/// CSV: epoch,candidate,split,l1,l2,l3,l4,fitness.
void emit_curves(const TrainState& state, const std::filesystem::path& path);
std::vector<CurveRecord> read_curves(const std::filesystem::path& path);

/// Binary checkpoint of the complete state (optimizer, reference set,
/// archive, histories, curves). Resuming from it continues bit-identically.
void save_state(const TrainState& state, const std::filesystem::path& path);
TrainState load_state(const std::filesystem::path& path);

}  // namespace clml
