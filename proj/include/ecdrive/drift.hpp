#pragma once

// Two-sample drift tests and the drift/confidence monitor built on them.

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "ecdrive/codec.hpp"

namespace ecdrive::drift {

// Row-major sample matrix; every row must have the same length.
using Matrix = std::vector<std::vector<double>>;

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Two-sided two-sample Kolmogorov-Smirnov test.
///
/// The statistic is the supremum of |F_a - F_b| over the merged sample. The
/// p-value uses the asymptotic Kolmogorov distribution evaluated at
/// sqrt(n_a * n_b / (n_a + n_b)) * D. Throws std::invalid_argument on empty
/// input.
KsResult ks_two_sample(std::span<const double> a, std::span<const double> b);

/// Survival function of the Kolmogorov distribution, P(K > lambda).
double kolmogorov_survival(double lambda);

struct MmdResult {
  double mmd2 = 0.0;
  double p_value = 1.0;
};

/// Unbiased MMD^2 with kernel exp(-|u - v|^2 / (2 bandwidth^2)).
double mmd2_unbiased(const Matrix& x, const Matrix& y, double bandwidth);

/// Permutation test on the unbiased MMD^2. p = (1 + #{perm >= observed}) /
/// (1 + n_perm). Requires non-empty inputs with equal column counts and
/// n_perm >= 20; throws std::invalid_argument otherwise.
MmdResult mmd_permutation(const Matrix& x, const Matrix& y, double bandwidth,
                          int n_perm, std::uint64_t seed);

/// Median pairwise Euclidean distance between rows; 1.0 when that median is 0
/// or fewer than two rows are given.
double median_bandwidth(const Matrix& rows);

/// Escalate when the decision confidence is strictly below tau.
bool confidence_gate(double decision_confidence, double tau);

enum class Method { kKS, kMMD };

std::string_view to_string(Method method);
std::optional<Method> method_from_string(std::string_view name);

struct DetectorSettings {
  Method method = Method::kKS;
  double alpha = 0.05;
  int window = 40;
  int n_ref = 200;
  int n_perm = 100;

  bool operator==(const DetectorSettings&) const = default;
};

struct DriftReport {
  bool is_drift = false;
  // Per-feature (KS) or a single entry (MMD).
  std::vector<double> p_values;
  // Per-feature D (KS) or a single MMD^2 estimate.
  std::vector<double> statistics;
  // alpha / d for KS (Bonferroni), alpha for MMD.
  double threshold_used = 0.0;

  bool operator==(const DriftReport&) const = default;
};

class DetectorError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Drift detector fitted on reference feature vectors. Immutable after fit;
/// predict is const and takes its permutation seed explicitly, so one
/// detector can be shared across threads.
class DriftDetector {
 public:
  /// Throws DetectorError when the reference has fewer than 30 rows, the
  /// settings are out of range, or rows have inconsistent dimensions.
  static DriftDetector fit(std::span<const codec::FeatureVector> reference,
                           const DetectorSettings& settings,
                           std::uint64_t seed = 0);
  static DriftDetector fit(const Matrix& reference,
                           const DetectorSettings& settings,
                           std::uint64_t seed = 0);

  /// Tests one window against the reference. Throws DetectorError when the
  /// window length differs from settings().window or the dimensions differ.
  DriftReport predict(const Matrix& window, std::uint64_t seed) const;
  DriftReport predict(std::span<const codec::FeatureVector> window,
                      std::uint64_t seed) const;
  DriftReport predict(const Matrix& window) const {
    return predict(window, seed_);
  }

  const DetectorSettings& settings() const { return settings_; }
  const Matrix& reference() const { return reference_; }
  std::size_t n_ref() const { return reference_.size(); }
  std::size_t dim() const { return dim_; }
  double bandwidth() const { return bandwidth_; }

 private:
  DriftDetector() = default;

  DetectorSettings settings_;
  Matrix reference_;
  // Column-major sorted copy of the reference, for KS.
  std::vector<std::vector<double>> sorted_columns_;
  std::size_t dim_ = 0;
  double bandwidth_ = 1.0;
  std::uint64_t seed_ = 0;
};

}  // namespace ecdrive::drift
