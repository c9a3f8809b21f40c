#include "cofidec/types.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <stdexcept>

namespace cofidec {

namespace {
constexpr double kSumTol = 1e-9;
}

Distribution Distribution::make(std::vector<int> ids, std::vector<double> probs) {
  if (ids.empty()) throw std::invalid_argument("Distribution: empty support");
  if (ids.size() != probs.size())
    throw std::invalid_argument("Distribution: ids/probs length mismatch");
  if (ids.front() < 0) throw std::invalid_argument("Distribution: negative token id");
  double sum = 0.0;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (!(probs[i] >= 0.0))
      throw std::invalid_argument("Distribution: negative or NaN probability");
    if (i > 0 && ids[i] <= ids[i - 1])
      throw std::invalid_argument("Distribution: support ids not strictly increasing");
    sum += probs[i];
  }
  if (std::abs(sum - 1.0) > kSumTol)
    throw std::invalid_argument("Distribution: probabilities sum to " + std::to_string(sum));
  Distribution d;
  d.support_ids = std::move(ids);
  d.probs = std::move(probs);
  return d;
}

Distribution Distribution::normalized(std::vector<int> ids, std::vector<double> weights) {
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw std::invalid_argument("Distribution: negative weight");
    sum += w;
  }
  if (sum <= 0.0) throw std::invalid_argument("Distribution: weights sum to zero");
  for (double& w : weights) w /= sum;
  return make(std::move(ids), std::move(weights));
}

Distribution Distribution::dirac(std::vector<int> ids, int at_id) {
  std::vector<double> p(ids.size(), 0.0);
  auto it = std::find(ids.begin(), ids.end(), at_id);
  if (it == ids.end()) throw std::invalid_argument("Distribution::dirac: id not in support");
  p[static_cast<std::size_t>(it - ids.begin())] = 1.0;
  return make(std::move(ids), std::move(p));
}

Distribution Distribution::uniform(std::vector<int> ids) {
  std::vector<double> p(ids.size(), 1.0 / static_cast<double>(ids.size()));
  return make(std::move(ids), std::move(p));
}

double Distribution::prob_of(int id) const {
  auto it = std::lower_bound(support_ids.begin(), support_ids.end(), id);
  if (it == support_ids.end() || *it != id) return 0.0;
  return probs[static_cast<std::size_t>(it - support_ids.begin())];
}

int Distribution::argmax_id() const {
  int best = support_ids[0];
  double best_p = probs[0];
  for (std::size_t i = 1; i < probs.size(); ++i) {
    if (probs[i] > best_p + 1e-12) {
      best_p = probs[i];
      best = support_ids[i];
    }
  }
  return best;
}

double total_variation(const Distribution& a, const Distribution& b) {
  double l1 = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.support_ids.size() || j < b.support_ids.size()) {
    if (j >= b.support_ids.size() ||
        (i < a.support_ids.size() && a.support_ids[i] < b.support_ids[j])) {
      l1 += std::abs(a.probs[i]);
      ++i;
    } else if (i >= a.support_ids.size() || b.support_ids[j] < a.support_ids[i]) {
      l1 += std::abs(b.probs[j]);
      ++j;
    } else {
      l1 += std::abs(a.probs[i] - b.probs[j]);
      ++i;
      ++j;
    }
  }
  return 0.5 * l1;
}

double GroundMetric::max_cost() const {
  double m = 0.0;
  for (double c : costs) m = std::max(m, c);
  return m;
}

GroundMetric GroundMetric::make(int size, std::vector<double> costs) {
  if (size <= 0) throw std::invalid_argument("GroundMetric: nonpositive size");
  if (costs.size() != static_cast<std::size_t>(size) * size)
    throw std::invalid_argument("GroundMetric: costs size mismatch");
  GroundMetric g;
  g.size = size;
  g.costs = std::move(costs);
  for (int i = 0; i < size; ++i) {
    if (g.at(i, i) != 0.0) throw std::invalid_argument("GroundMetric: nonzero diagonal");
    for (int j = 0; j < size; ++j) {
      if (!(g.at(i, j) >= 0.0)) throw std::invalid_argument("GroundMetric: negative cost");
      if (std::abs(g.at(i, j) - g.at(j, i)) > 1e-12)
        throw std::invalid_argument("GroundMetric: not symmetric");
    }
  }
  return g;
}

MetricKind metric_kind_from_string(const std::string& s) {
  if (s == "squared_euclidean") return MetricKind::SquaredEuclidean;
  if (s == "euclidean") return MetricKind::Euclidean;
  if (s == "zero_one") return MetricKind::ZeroOne;
  throw std::invalid_argument("unknown metric kind: " + s);
}

std::string to_string(MetricKind kind) {
  switch (kind) {
    case MetricKind::SquaredEuclidean: return "squared_euclidean";
    case MetricKind::Euclidean: return "euclidean";
    case MetricKind::ZeroOne: return "zero_one";
  }
  return "?";
}

GroundMetric build_ground_metric(const std::vector<std::vector<double>>& embeddings,
                                 MetricKind kind) {
  const int n = static_cast<int>(embeddings.size());
  if (n < 2) throw std::invalid_argument("build_ground_metric: need at least 2 embeddings");
  const std::size_t dim = embeddings[0].size();
  for (const auto& e : embeddings)
    if (e.size() != dim)
      throw std::invalid_argument("build_ground_metric: mismatched embedding dimensions");

  std::vector<double> costs(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      double c;
      if (kind == MetricKind::ZeroOne) {
        c = 1.0;
      } else {
        double d2 = 0.0;
        for (std::size_t k = 0; k < dim; ++k) {
          const double d = embeddings[i][k] - embeddings[j][k];
          d2 += d * d;
        }
        c = (kind == MetricKind::SquaredEuclidean) ? d2 : std::sqrt(d2);
      }
      costs[static_cast<std::size_t>(i) * n + j] = c;
      costs[static_cast<std::size_t>(j) * n + i] = c;
    }
  }
  return GroundMetric::make(n, std::move(costs));
}

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::IterationLimit: return "truncated";
    case SolveStatus::Underflow: return "underflow";
  }
  return "?";
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  if (ec != std::errc())
    throw std::runtime_error("format_double: conversion failed");
  return std::string(buf, ptr);
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last)
    throw std::invalid_argument("parse_double: malformed number '" + s + "'");
  return v;
}

}  // namespace cofidec
