#pragma once

#include "clml/losses.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace clml {

struct TaggedPoint {
  LossVector loss;
  std::string tag;
};

/// The default reference vector {1}^3: worst value of every loss.
inline constexpr LossVector kUnitReference{1.0, 1.0, 1.0};

/// Fronts at or below this many points (points + reference vectors) take the
/// inclusion-exclusion path; larger ones take the dimension sweep.
inline constexpr std::size_t kInclusionExclusionLimit = 20;

/// a <= b component-wise with at least one strict inequality.
bool dominates(const LossVector& a, const LossVector& b) noexcept;

/// a <= b component-wise.
bool weakly_dominates(const LossVector& a, const LossVector& b) noexcept;

/// A set of mutually non-dominating loss vectors. Only nondominated_filter
/// (and its callers) can build one, so the invariant always holds.
class Front {
 public:
  Front() = default;

  std::span<const TaggedPoint> points() const noexcept { return points_; }
  std::vector<LossVector> losses() const;
  std::size_t size() const noexcept { return points_.size(); }
  bool empty() const noexcept { return points_.empty(); }
  const TaggedPoint& operator[](std::size_t i) const { return points_[i]; }

  friend Front nondominated_filter(std::span<const TaggedPoint> points);

 private:
  std::vector<TaggedPoint> points_;
};

/// Points not dominated by any other; of several identical vectors only the
/// first occurrence survives.
Front nondominated_filter(std::span<const TaggedPoint> points);

/// R^{t+1} = non-dominated(R^t u new_points).
Front update_reference_set(const Front& ref_set, std::span<const TaggedPoint> new_points);

// --- Lebesgue measure -------------------------------------------------------
//
// The measured region is {z : exists p in points, exists r in refs, p <= z <= r}.
// Points need not be mutually non-dominating; points that reach or exceed
// every reference vector in some component add nothing.

double hypervolume_inclusion_exclusion(std::span<const LossVector> points,
                                       std::span<const LossVector> refs);
double hypervolume_sweep(std::span<const LossVector> points, std::span<const LossVector> refs);

/// Dispatches on size: inclusion-exclusion up to kInclusionExclusionLimit
/// elements, sweep beyond.
double exact_hypervolume(std::span<const LossVector> points, std::span<const LossVector> refs);
double exact_hypervolume(std::span<const LossVector> points, const LossVector& ref = kUnitReference);
double exact_hypervolume(std::span<const TaggedPoint> points, const LossVector& ref = kUnitReference);
double exact_hypervolume(const Front& front, const LossVector& ref = kUnitReference);

/// Volume attributable to points[index] alone: lambda(H({p},R) \ H(others,R)).
/// Exactly 0 when another point weakly dominates it.
double exact_contribution_at(std::span<const LossVector> points, std::size_t index,
                             std::span<const LossVector> refs);

/// Contribution of the first point carrying `tag`. Unknown tag -> Lookup error.
double exact_contribution(std::span<const TaggedPoint> points, const std::string& tag,
                          std::span<const LossVector> refs);
double exact_contribution(std::span<const TaggedPoint> points, const std::string& tag,
                          const LossVector& ref = kUnitReference);
double exact_contribution(const Front& front, const std::string& tag,
                          const LossVector& ref = kUnitReference);

/// Monte Carlo estimate of exact_contribution_at: g uniform samples over
/// [0,1]^3, returns hits / g. Deterministic for a given seed.
double mc_contribution_at(std::span<const LossVector> points, std::size_t index,
                          std::span<const LossVector> refs, std::uint64_t samples,
                          std::uint64_t seed);
double mc_contribution(std::span<const TaggedPoint> points, const std::string& tag,
                       const LossVector& ref, std::uint64_t samples, std::uint64_t seed);
double mc_contribution(const Front& front, const std::string& tag, const LossVector& ref,
                       std::uint64_t samples, std::uint64_t seed);

/// Total volume plus a disjoint partition of it: each point is credited with
/// the part of the region it dominates that no earlier point dominates, so the
/// per-point volumes sum to the total. On a front whose dominated boxes do not
/// overlap, the credits coincide with exact contributions.
struct HvResult {
  double total = 0.0;
  std::vector<std::string> tags;
  std::vector<double> contributions;
};

HvResult partition_hypervolume(std::span<const TaggedPoint> points,
                               std::span<const LossVector> refs);
HvResult partition_hypervolume(std::span<const TaggedPoint> points,
                               const LossVector& ref = kUnitReference);

}  // namespace clml
