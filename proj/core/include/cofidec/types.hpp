#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace cofidec {

/// Probability vector over a token vocabulary, stored sparsely as
/// (support id, probability) pairs with strictly increasing ids.
/// Entries are nonnegative and sum to 1 within 1e-9.
struct Distribution {
  std::vector<int> support_ids;
  std::vector<double> probs;

  int size() const { return static_cast<int>(support_ids.size()); }

  /// Validating constructor; throws std::invalid_argument on violation.
  static Distribution make(std::vector<int> ids, std::vector<double> probs);

  /// Normalizes nonnegative weights (sum > 0) into a valid Distribution.
  static Distribution normalized(std::vector<int> ids, std::vector<double> weights);

  static Distribution dirac(std::vector<int> ids, int at_id);
  static Distribution uniform(std::vector<int> ids);

  /// Probability of a token id, 0 if outside the support.
  double prob_of(int id) const;

  /// Argmax token id; ties within 1e-12 resolve to the lowest id.
  int argmax_id() const;
};

/// Total variation distance, 0.5 * L1 over the union of supports.
double total_variation(const Distribution& a, const Distribution& b);

/// Nonnegative symmetric cost matrix over token ids 0..size-1 with a
/// zero diagonal; the transport geometry of the token space.
struct GroundMetric {
  int size = 0;
  std::vector<double> costs;  // row-major size*size

  double at(int i, int j) const { return costs[static_cast<std::size_t>(i) * size + j]; }
  double max_cost() const;

  static GroundMetric make(int size, std::vector<double> costs);
};

enum class MetricKind { SquaredEuclidean, Euclidean, ZeroOne };

MetricKind metric_kind_from_string(const std::string& s);
std::string to_string(MetricKind kind);

/// Builds a GroundMetric from per-token embedding vectors. ZeroOne ignores
/// the embedding values and yields 1 off the diagonal.
GroundMetric build_ground_metric(const std::vector<std::vector<double>>& embeddings,
                                 MetricKind kind);

/// Coupling between two distributions on a shared support. Marginal errors
/// are total-variation distances between achieved and requested marginals.
struct TransportPlan {
  int size = 0;
  std::vector<double> mass;  // row-major size*size
  double row_marginal_err = 0.0;
  double col_marginal_err = 0.0;

  double at(int i, int j) const { return mass[static_cast<std::size_t>(i) * size + j]; }
};

struct SinkhornConfig {
  double epsilon = 0.01;  // entropic regularization
  int max_iter = 10000;
  double tol = 1e-8;      // max marginal violation, total-variation units
  double min_prob = 0.0;  // floor applied before solving; 0 = auto (1e-8 / support)
};

enum class SolveStatus {
  Converged,
  IterationLimit,  // partial result attached
  Underflow,
};

std::string to_string(SolveStatus s);

/// Decimal float with 17 significant digits, locale-independent; parsing the
/// result recovers the exact double.
std::string format_double(double v);

/// Locale-independent strtod counterpart; throws on malformed input.
double parse_double(const std::string& s);

}  // namespace cofidec
