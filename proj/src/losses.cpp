#include "simstc/losses.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include "simstc/error.hpp"
#include "simstc/kernels.hpp"

namespace simstc {
namespace {

// Similarities of anchor row `x` against every row of a matrix given in
// transposed (d x N) layout, scaled by 1/tau. Row updates over N keep the
// result independent of the active kernel variant.
void similarity_row(std::span<const double> x, const Matrix& transposed, double inv_tau,
                    std::vector<double>& out) {
  out.assign(transposed.cols, 0.0);
  const auto& k = kernels::active();
  for (std::size_t d = 0; d < x.size(); ++d) {
    if (x[d] != 0.0) k.axpy(x[d], transposed.row(d).data(), out.data(), out.size());
  }
  k.scale(inv_tau, out.data(), out.data(), out.size());
}

// log of the denominator for anchor i: intra-view terms skip k == i.
double anchor_log_denominator(const std::vector<double>& intra, const std::vector<double>& cross,
                              std::size_t i) {
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < intra.size(); ++k) {
    if (k != i) mx = std::max(mx, intra[k]);
  }
  for (double v : cross) mx = std::max(mx, v);
  double s = 0.0;
  for (std::size_t k = 0; k < intra.size(); ++k) {
    if (k != i) s += std::exp(intra[k] - mx);
  }
  for (double v : cross) s += std::exp(v - mx);
  return mx + std::log(s);
}

struct DirectionResult {
  double loss_sum = 0.0;
  std::vector<double> log_denominators;
};

// Anchors are rows of x; positives and cross-view negatives are rows of y.
DirectionResult direction_forward(const Matrix& x, const Matrix& xt, const Matrix& yt,
                                  double inv_tau) {
  DirectionResult r;
  r.log_denominators.resize(x.rows);
  std::vector<double> intra, cross;
  for (std::size_t i = 0; i < x.rows; ++i) {
    similarity_row(x.row(i), xt, inv_tau, intra);
    similarity_row(x.row(i), yt, inv_tau, cross);
    const double lse = anchor_log_denominator(intra, cross, i);
    r.log_denominators[i] = lse;
    r.loss_sum += lse - cross[i];
  }
  return r;
}

// Accumulates coef * d(sum_i loss_i)/dx and /dy, recomputing the similarity
// rows instead of storing N x N weights.
void direction_backward(const Matrix& x, const Matrix& xt, const Matrix& y, const Matrix& yt,
                        double inv_tau, const std::vector<double>& log_denominators, double coef,
                        Matrix* gx, Matrix* gy) {
  const auto& k = kernels::active();
  const std::size_t n = x.rows;
  const std::size_t d = x.cols;
  std::vector<double> intra, cross;
  std::vector<double> anchor_grad(d);
  const double c = coef * inv_tau;
  for (std::size_t i = 0; i < n; ++i) {
    similarity_row(x.row(i), xt, inv_tau, intra);
    similarity_row(x.row(i), yt, inv_tau, cross);
    const double lse = log_denominators[i];
    std::fill(anchor_grad.begin(), anchor_grad.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      const double beta = std::exp(cross[j] - lse) - (j == i ? 1.0 : 0.0);
      k.axpy(c * beta, y.row(j).data(), anchor_grad.data(), d);
      if (gy != nullptr) k.axpy(c * beta, x.row(i).data(), gy->row(j).data(), d);
      if (j == i) continue;
      const double alpha = std::exp(intra[j] - lse);
      k.axpy(c * alpha, x.row(j).data(), anchor_grad.data(), d);
      if (gx != nullptr) k.axpy(c * alpha, x.row(i).data(), gx->row(j).data(), d);
    }
    if (gx != nullptr) k.add(anchor_grad.data(), gx->row(i).data(), d);
  }
}

}  // namespace

std::pair<View, View> pair_views(ViewPair pair) {
  switch (pair) {
    case ViewPair::kWordTag:
      return {View::kWord, View::kTag};
    case ViewPair::kTagEntity:
      return {View::kTag, View::kEntity};
    case ViewPair::kWordEntity:
      return {View::kWord, View::kEntity};
  }
  return {View::kWord, View::kTag};
}

std::string_view pair_name(ViewPair pair) {
  switch (pair) {
    case ViewPair::kWordTag:
      return "wp";
    case ViewPair::kTagEntity:
      return "pe";
    case ViewPair::kWordEntity:
      return "we";
  }
  return "?";
}

PairSet PairSet::parse(std::string_view text) {
  if (text == "all") return all();
  if (text == "none") return none();
  PairSet out = none();
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = std::min(text.find(',', start), text.size());
    const std::string_view item = text.substr(start, end - start);
    start = end + 1;
    if (item.empty()) continue;
    bool matched = false;
    for (ViewPair p : kAllPairs) {
      const auto name = pair_name(p);
      const std::string reversed{name[1], name[0]};
      if (item == name || item == reversed) {
        out = out.with(p);
        matched = true;
      }
    }
    if (!matched) {
      throw Error("config.pair_set", "unknown view pair '" + std::string(item) +
                                         "' (expected wp, pe, we, all or empty)");
    }
  }
  return out;
}

std::size_t PairSet::size() const { return static_cast<std::size_t>(std::popcount(mask_)); }

std::string PairSet::to_string() const {
  std::string s;
  for (ViewPair p : kAllPairs) {
    if (!contains(p)) continue;
    if (!s.empty()) s += ",";
    s += pair_name(p);
  }
  return s;
}

Tensor pair_contrastive_loss(const Tensor& a, const Tensor& b, double tau) {
  if (!(tau > 0.0)) throw Error("losses.tau", "temperature must be positive");
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (!av.same_shape(bv)) {
    throw Error("tensor.shape", "pair_contrastive_loss: projections differ in shape");
  }
  const std::size_t n = av.rows;
  if (n == 0) throw Error("losses.empty", "pair_contrastive_loss needs at least one row");
  const double inv_tau = 1.0 / tau;
  Matrix at = transpose(av);
  Matrix bt = transpose(bv);
  DirectionResult from_a = direction_forward(av, at, bt, inv_tau);
  DirectionResult from_b = direction_forward(bv, bt, at, inv_tau);
  const double value = (from_a.loss_sum + from_b.loss_sum) / (2.0 * static_cast<double>(n));
  return Tensor::make_op(
      Matrix(1, 1, value), {a, b},
      [a, b, at = std::move(at), bt = std::move(bt), lse_a = std::move(from_a.log_denominators),
       lse_b = std::move(from_b.log_denominators),
       inv_tau](const Matrix&, const Matrix& g, std::span<Matrix* const> pg) {
        const double coef = g.data[0] / (2.0 * static_cast<double>(a.rows()));
        direction_backward(a.value(), at, b.value(), bt, inv_tau, lse_a, coef, pg[0], pg[1]);
        direction_backward(b.value(), bt, a.value(), at, inv_tau, lse_b, coef, pg[1], pg[0]);
      });
}

Tensor multiview_contrastive_loss(const std::array<Tensor, 3>& projections,
                                  const ContrastiveConfig& config,
                                  std::array<double, 3>* per_pair) {
  if (per_pair != nullptr) per_pair->fill(0.0);
  Tensor total;
  for (ViewPair p : kAllPairs) {
    if (!config.pairs.contains(p)) continue;
    const auto [u, v] = pair_views(p);
    Tensor term = pair_contrastive_loss(projections[static_cast<std::size_t>(u)],
                                        projections[static_cast<std::size_t>(v)], config.tau);
    if (per_pair != nullptr) (*per_pair)[static_cast<std::size_t>(p)] = term.item();
    total = total.defined() ? add(total, term) : term;
  }
  if (!total.defined()) return Tensor::constant(Matrix(1, 1, 0.0));
  return config.count_ordered_pairs ? scale(total, 2.0) : total;
}

std::string_view reduction_name(Reduction r) { return r == Reduction::kSum ? "sum" : "mean"; }

std::optional<Reduction> parse_reduction(std::string_view name) {
  if (name == "mean") return Reduction::kMean;
  if (name == "sum") return Reduction::kSum;
  return std::nullopt;
}

Tensor cross_entropy(const Tensor& log_probs, std::span<const std::uint32_t> labels,
                     std::span<const std::uint32_t> rows, Reduction reduction) {
  if (rows.empty()) throw Error("losses.empty_mask", "cross-entropy over an empty document set");
  std::vector<Position> positions;
  positions.reserve(rows.size());
  for (std::uint32_t r : rows) {
    if (r >= labels.size() || labels[r] >= log_probs.cols()) {
      throw Error("losses.label", "label out of range for row " + std::to_string(r));
    }
    positions.push_back({r, labels[r]});
  }
  const double factor = reduction == Reduction::kMean ? -1.0 / static_cast<double>(rows.size()) : -1.0;
  return scale(select_sum(log_probs, std::move(positions)), factor);
}

Tensor total_loss(const Tensor& ce, const Tensor& cl) {
  if (!std::isfinite(ce.item()) || !std::isfinite(cl.item())) {
    throw Error("losses.non_finite", "non-finite loss component");
  }
  return add(ce, cl);
}

double mi_lower_bound(double l_cl, std::size_t n) {
  return 3.0 * std::log(static_cast<double>(n)) - l_cl;
}

}  // namespace simstc
