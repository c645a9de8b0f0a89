#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "simstc/corpus.hpp"
#include "simstc/tensor.hpp"

namespace simstc {

// Unordered view pairs, in the column order of the ablation grid.
enum class ViewPair : std::uint8_t { kWordTag, kTagEntity, kWordEntity };
inline constexpr std::array<ViewPair, 3> kAllPairs{ViewPair::kWordTag, ViewPair::kTagEntity,
                                                   ViewPair::kWordEntity};

std::pair<View, View> pair_views(ViewPair pair);
// "wp", "pe", "we"
std::string_view pair_name(ViewPair pair);

class PairSet {
 public:
  constexpr PairSet() = default;
  static constexpr PairSet all() { return PairSet(0b111); }
  static constexpr PairSet none() { return PairSet(0); }
  static constexpr PairSet from_mask(std::uint8_t mask) { return PairSet(mask & 0b111); }
  // Comma-separated pair names in any order and either view order ("wp" or
  // "pw"); "" means none and "all" means all three.
  static PairSet parse(std::string_view text);

  bool contains(ViewPair p) const { return (mask_ >> static_cast<int>(p)) & 1u; }
  PairSet with(ViewPair p) const { return PairSet(mask_ | (1u << static_cast<int>(p))); }
  bool empty() const { return mask_ == 0; }
  std::size_t size() const;
  std::uint8_t mask() const { return mask_; }
  std::string to_string() const;

  friend bool operator==(PairSet, PairSet) = default;

 private:
  constexpr explicit PairSet(std::uint8_t mask) : mask_(mask) {}
  std::uint8_t mask_ = 0b111;
};

struct ContrastiveConfig {
  double tau = 0.5;
  PairSet pairs = PairSet::all();
  // Sum the six ordered pairs instead of the three unordered ones; every
  // pair loss is direction-symmetric so this doubles the contrastive term.
  bool count_ordered_pairs = false;
};

// Symmetric cross-view InfoNCE between two row-aligned projections. For an
// anchor row i of `a` the positive is row i of `b`; the denominator holds the
// other rows of `a` and every row of `b`. The loss averages both anchor
// directions over 2N anchors. Computed row by row with max-subtracted
// log-sum-exp; memory is O(N d).
Tensor pair_contrastive_loss(const Tensor& a, const Tensor& b, double tau);

// Sum of pair losses over the configured pairs; a constant 0 for no pairs.
// `per_pair` (optional) receives each pair's value, 0 for excluded pairs.
Tensor multiview_contrastive_loss(const std::array<Tensor, 3>& projections,
                                  const ContrastiveConfig& config,
                                  std::array<double, 3>* per_pair = nullptr);

enum class Reduction { kMean, kSum };
std::string_view reduction_name(Reduction r);
std::optional<Reduction> parse_reduction(std::string_view name);

// -sum over `rows` of log_probs(row, labels[row]), divided by rows.size()
// under kMean.
Tensor cross_entropy(const Tensor& log_probs, std::span<const std::uint32_t> labels,
                     std::span<const std::uint32_t> rows, Reduction reduction = Reduction::kMean);

Tensor total_loss(const Tensor& ce, const Tensor& cl);

// 3 ln N - l_cl: the lower bound on summed pairwise mutual information.
double mi_lower_bound(double l_cl, std::size_t n);

struct LossReport {
  double l_ce = 0.0;
  double l_cl = 0.0;
  double l_total = 0.0;
  std::array<double, 3> per_pair{};  // indexed by ViewPair
  double mi_lower_bound = 0.0;
  std::size_t zero_row_count = 0;
};

}  // namespace simstc
