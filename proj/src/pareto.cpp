#include "clml/pareto.hpp"

#include "clml/error.hpp"

#include <algorithm>
#include <array>
#include <iterator>
#include <limits>
#include <map>
#include <random>

namespace clml {

bool dominates(const LossVector& a, const LossVector& b) noexcept {
  bool strict = false;
  for (std::size_t i = 0; i < LossVector::size(); ++i) {
    if (a[i] > b[i]) return false;
    if (a[i] < b[i]) strict = true;
  }
  return strict;
}

bool weakly_dominates(const LossVector& a, const LossVector& b) noexcept {
  return a.l1 <= b.l1 && a.l2 <= b.l2 && a.l3 <= b.l3;
}

std::vector<LossVector> Front::losses() const {
  std::vector<LossVector> out;
  out.reserve(points_.size());
  for (const auto& p : points_) out.push_back(p.loss);
  return out;
}

Front nondominated_filter(std::span<const TaggedPoint> points) {
  Front front;
  for (std::size_t i = 0; i < points.size(); ++i) {
    bool keep = true;
    for (std::size_t j = 0; j < points.size() && keep; ++j) {
      if (j == i) continue;
      if (dominates(points[j].loss, points[i].loss)) keep = false;
      if (j < i && points[j].loss == points[i].loss) keep = false;
    }
    if (keep) front.points_.push_back(points[i]);
  }
  return front;
}

Front update_reference_set(const Front& ref_set, std::span<const TaggedPoint> new_points) {
  std::vector<TaggedPoint> merged(ref_set.points().begin(), ref_set.points().end());
  merged.insert(merged.end(), new_points.begin(), new_points.end());
  return nondominated_filter(merged);
}

namespace {

LossVector component_max(const LossVector& a, const LossVector& b) noexcept {
  return {std::max(a.l1, b.l1), std::max(a.l2, b.l2), std::max(a.l3, b.l3)};
}

LossVector component_min(const LossVector& a, const LossVector& b) noexcept {
  return {std::min(a.l1, b.l1), std::min(a.l2, b.l2), std::min(a.l3, b.l3)};
}

double box_volume(const LossVector& lo, const LossVector& hi) noexcept {
  const double a = hi.l1 - lo.l1;
  const double b = hi.l2 - lo.l2;
  const double c = hi.l3 - lo.l3;
  if (a <= 0.0 || b <= 0.0 || c <= 0.0) return 0.0;
  return a * b * c;
}

bool inside_some_ref(const LossVector& p, std::span<const LossVector> refs) noexcept {
  return std::any_of(refs.begin(), refs.end(), [&](const LossVector& r) {
    return p.l1 < r.l1 && p.l2 < r.l2 && p.l3 < r.l3;
  });
}

// lambda({z : lower <= z, exists r: z <= r}) by inclusion-exclusion over refs.
// Subsets whose box is already empty are pruned: shrinking the upper corner
// further cannot reopen it.
double ie_over_refs(const LossVector& lower, std::span<const LossVector> refs, std::size_t start,
                    const LossVector& upper, int depth) {
  double sum = 0.0;
  for (std::size_t i = start; i < refs.size(); ++i) {
    const LossVector u = depth == 0 ? refs[i] : component_min(upper, refs[i]);
    const double vol = box_volume(lower, u);
    if (vol == 0.0) continue;
    sum += (depth % 2 == 0 ? vol : -vol);
    sum += ie_over_refs(lower, refs, i + 1, u, depth + 1);
  }
  return sum;
}

double ie_over_points(std::span<const LossVector> points, std::span<const LossVector> refs,
                      std::size_t start, const LossVector& lower, int depth) {
  double sum = 0.0;
  for (std::size_t i = start; i < points.size(); ++i) {
    const LossVector q = depth == 0 ? points[i] : component_max(lower, points[i]);
    const double vol = refs.size() == 1 ? box_volume(q, refs[0])
                                        : ie_over_refs(q, refs, 0, q, 0);
    if (vol == 0.0) continue;
    sum += (depth % 2 == 0 ? vol : -vol);
    sum += ie_over_points(points, refs, i + 1, q, depth + 1);
  }
  return sum;
}

// Classic 3-D sweep for a single reference: points ascending in l3, a 2-D
// staircase in (l1, l2) carrying its dominated area incrementally.
double sweep_single_ref(std::span<const LossVector> points, const LossVector& ref) {
  std::vector<LossVector> pts;
  pts.reserve(points.size());
  for (const auto& p : points) {
    if (p.l1 < ref.l1 && p.l2 < ref.l2 && p.l3 < ref.l3) pts.push_back(p);
  }
  if (pts.empty()) return 0.0;
  std::sort(pts.begin(), pts.end(),
            [](const LossVector& a, const LossVector& b) { return a.l3 < b.l3; });

  std::map<double, double> stairs;  // l1 ascending -> l2 strictly descending
  double area = 0.0;
  double volume = 0.0;

  for (std::size_t k = 0; k < pts.size(); ++k) {
    const double x = pts[k].l1;
    const double y = pts[k].l2;

    auto next = stairs.upper_bound(x);
    double height = ref.l2;  // uncovered ceiling at abscissa x
    if (next != stairs.begin()) height = std::prev(next)->second;
    if (height > y) {
      // Area newly covered: integral over [x, ref.l1) of max(0, h(a) - y).
      double a = x;
      for (auto it = next; it != stairs.end(); ++it) {
        area += (it->first - a) * (height - y);
        a = it->first;
        height = it->second;
        if (height <= y) break;
      }
      if (height > y) area += (ref.l1 - a) * (height - y);

      auto first = stairs.lower_bound(x);
      auto last = first;
      while (last != stairs.end() && last->second >= y) ++last;
      stairs.erase(first, last);
      stairs.emplace(x, y);
    }

    const double z_next = k + 1 < pts.size() ? pts[k + 1].l3 : ref.l3;
    volume += area * (z_next - pts[k].l3);
  }
  return volume;
}

// Area of {(x,y) : exists p <= (x,y), exists r >= (x,y)} in the (l1, l2) plane.
double area_between(std::vector<std::array<double, 2>> lows,
                    std::vector<std::array<double, 2>> highs) {
  if (lows.empty() || highs.empty()) return 0.0;
  std::vector<double> xs;
  xs.reserve(lows.size() + highs.size());
  for (const auto& p : lows) xs.push_back(p[0]);
  for (const auto& r : highs) xs.push_back(r[0]);
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());

  std::sort(lows.begin(), lows.end());
  std::sort(highs.begin(), highs.end());

  // Suffix maxima of ref heights by abscissa.
  std::vector<double> suffix_max(highs.size());
  double running = -std::numeric_limits<double>::infinity();
  for (std::size_t i = highs.size(); i-- > 0;) {
    running = std::max(running, highs[i][1]);
    suffix_max[i] = running;
  }

  double area = 0.0;
  double floor = std::numeric_limits<double>::infinity();
  std::size_t li = 0;
  std::size_t hi = 0;
  for (std::size_t s = 0; s + 1 < xs.size(); ++s) {
    const double xa = xs[s];
    const double xb = xs[s + 1];
    while (li < lows.size() && lows[li][0] <= xa) floor = std::min(floor, lows[li++][1]);
    while (hi < highs.size() && highs[hi][0] < xb) ++hi;
    if (hi == highs.size()) break;
    const double ceiling = suffix_max[hi];
    if (ceiling > floor) area += (xb - xa) * (ceiling - floor);
  }
  return area;
}

// Slab sweep along l3 for an arbitrary reference set.
double sweep_multi_ref(std::span<const LossVector> points, std::span<const LossVector> refs) {
  std::vector<double> zs;
  zs.reserve(points.size() + refs.size());
  for (const auto& p : points) zs.push_back(p.l3);
  for (const auto& r : refs) zs.push_back(r.l3);
  std::sort(zs.begin(), zs.end());
  zs.erase(std::unique(zs.begin(), zs.end()), zs.end());

  double volume = 0.0;
  std::vector<std::array<double, 2>> lows;
  std::vector<std::array<double, 2>> highs;
  for (std::size_t s = 0; s + 1 < zs.size(); ++s) {
    const double za = zs[s];
    const double zb = zs[s + 1];
    lows.clear();
    highs.clear();
    for (const auto& p : points) {
      if (p.l3 <= za) lows.push_back({p.l1, p.l2});
    }
    for (const auto& r : refs) {
      if (r.l3 >= zb) highs.push_back({r.l1, r.l2});
    }
    volume += area_between(lows, highs) * (zb - za);
  }
  return volume;
}

double hypervolume_dispatch(std::span<const LossVector> points, std::span<const LossVector> refs) {
  if (points.size() + refs.size() <= kInclusionExclusionLimit) {
    return hypervolume_inclusion_exclusion(points, refs);
  }
  return hypervolume_sweep(points, refs);
}

std::size_t find_tag(std::span<const TaggedPoint> points, const std::string& tag) {
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].tag == tag) return i;
  }
  fail(ErrorKind::Lookup, "unknown tag '" + tag + "'");
}

std::vector<LossVector> losses_of(std::span<const TaggedPoint> points) {
  std::vector<LossVector> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(p.loss);
  return out;
}

}  // namespace

double hypervolume_inclusion_exclusion(std::span<const LossVector> points,
                                       std::span<const LossVector> refs) {
  if (points.empty() || refs.empty()) return 0.0;
  return std::max(0.0, ie_over_points(points, refs, 0, points[0], 0));
}

double hypervolume_sweep(std::span<const LossVector> points, std::span<const LossVector> refs) {
  if (points.empty() || refs.empty()) return 0.0;
  if (refs.size() == 1) return sweep_single_ref(points, refs[0]);
  return sweep_multi_ref(points, refs);
}

double exact_hypervolume(std::span<const LossVector> points, std::span<const LossVector> refs) {
  return hypervolume_dispatch(points, refs);
}

double exact_hypervolume(std::span<const LossVector> points, const LossVector& ref) {
  return hypervolume_dispatch(points, std::span<const LossVector>(&ref, 1));
}

double exact_hypervolume(std::span<const TaggedPoint> points, const LossVector& ref) {
  const auto losses = losses_of(points);
  return exact_hypervolume(std::span<const LossVector>(losses), ref);
}

double exact_hypervolume(const Front& front, const LossVector& ref) {
  return exact_hypervolume(front.points(), ref);
}

double exact_contribution_at(std::span<const LossVector> points, std::size_t index,
                             std::span<const LossVector> refs) {
  const LossVector& p = points[index];
  if (!inside_some_ref(p, refs)) return 0.0;
  std::vector<LossVector> clipped;
  clipped.reserve(points.size());
  for (std::size_t j = 0; j < points.size(); ++j) {
    if (j == index) continue;
    if (weakly_dominates(points[j], p)) return 0.0;
    const LossVector q = component_max(p, points[j]);
    if (inside_some_ref(q, refs)) clipped.push_back(q);
  }
  const double own = hypervolume_dispatch(std::span<const LossVector>(&p, 1), refs);
  const double shared = hypervolume_dispatch(clipped, refs);
  return std::max(0.0, own - shared);
}

double exact_contribution(std::span<const TaggedPoint> points, const std::string& tag,
                          std::span<const LossVector> refs) {
  const std::size_t index = find_tag(points, tag);
  const auto losses = losses_of(points);
  return exact_contribution_at(losses, index, refs);
}

double exact_contribution(std::span<const TaggedPoint> points, const std::string& tag,
                          const LossVector& ref) {
  return exact_contribution(points, tag, std::span<const LossVector>(&ref, 1));
}

double exact_contribution(const Front& front, const std::string& tag, const LossVector& ref) {
  return exact_contribution(front.points(), tag, ref);
}

double mc_contribution_at(std::span<const LossVector> points, std::size_t index,
                          std::span<const LossVector> refs, std::uint64_t samples,
                          std::uint64_t seed) {
  if (samples == 0) fail(ErrorKind::Config, "mc_contribution: sample count must be >= 1");
  const LossVector& p = points[index];
  std::vector<LossVector> rivals;
  rivals.reserve(points.size());
  for (std::size_t j = 0; j < points.size(); ++j) {
    if (j == index) continue;
    if (weakly_dominates(points[j], p)) return 0.0;
    rivals.push_back(points[j]);
  }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uint64_t hits = 0;
  for (std::uint64_t s = 0; s < samples; ++s) {
    const double a = unit(rng);
    const double b = unit(rng);
    const double c = unit(rng);
    const LossVector z{a, b, c};
    if (!weakly_dominates(p, z)) continue;
    const bool bounded = std::any_of(refs.begin(), refs.end(),
                                     [&](const LossVector& r) { return weakly_dominates(z, r); });
    if (!bounded) continue;
    const bool shared = std::any_of(rivals.begin(), rivals.end(),
                                    [&](const LossVector& q) { return weakly_dominates(q, z); });
    if (!shared) ++hits;
  }
  // The sampling box [0,1]^3 has unit volume.
  return static_cast<double>(hits) / static_cast<double>(samples);
}

double mc_contribution(std::span<const TaggedPoint> points, const std::string& tag,
                       const LossVector& ref, std::uint64_t samples, std::uint64_t seed) {
  const std::size_t index = find_tag(points, tag);
  const auto losses = losses_of(points);
  return mc_contribution_at(losses, index, std::span<const LossVector>(&ref, 1), samples, seed);
}

double mc_contribution(const Front& front, const std::string& tag, const LossVector& ref,
                       std::uint64_t samples, std::uint64_t seed) {
  return mc_contribution(front.points(), tag, ref, samples, seed);
}

HvResult partition_hypervolume(std::span<const TaggedPoint> points,
                               std::span<const LossVector> refs) {
  HvResult result;
  const auto losses = losses_of(points);
  result.total = hypervolume_dispatch(losses, refs);
  std::vector<LossVector> clipped;
  for (std::size_t i = 0; i < losses.size(); ++i) {
    result.tags.push_back(points[i].tag);
    const LossVector& p = losses[i];
    double cell = 0.0;
    if (inside_some_ref(p, refs)) {
      clipped.clear();
      bool covered = false;
      for (std::size_t j = 0; j < i && !covered; ++j) {
        covered = weakly_dominates(losses[j], p);
        const LossVector q = component_max(p, losses[j]);
        if (inside_some_ref(q, refs)) clipped.push_back(q);
      }
      if (!covered) {
        const double own = hypervolume_dispatch(std::span<const LossVector>(&p, 1), refs);
        cell = std::max(0.0, own - hypervolume_dispatch(clipped, refs));
      }
    }
    result.contributions.push_back(cell);
  }
  return result;
}

HvResult partition_hypervolume(std::span<const TaggedPoint> points, const LossVector& ref) {
  return partition_hypervolume(points, std::span<const LossVector>(&ref, 1));
}

}  // namespace clml
