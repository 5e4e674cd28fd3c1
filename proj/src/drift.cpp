#include "ecdrive/drift.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "ecdrive/rng.hpp"

namespace ecdrive::drift {

namespace {

// Walks two sorted samples and returns sup |F_a - F_b|. Both empirical CDFs
// are evaluated right-continuously at every distinct merged value.
double sorted_ks_statistic(std::span<const double> a,
                           std::span<const double> b) {
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < a.size() || j < b.size()) {
    double t;
    if (j >= b.size() || (i < a.size() && a[i] <= b[j])) {
      t = a[i];
    } else {
      t = b[j];
    }
    while (i < a.size() && a[i] <= t) ++i;
    while (j < b.size() && b[j] <= t) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na -
                             static_cast<double>(j) / nb));
  }
  return d;
}

KsResult ks_from_sorted(std::span<const double> a, std::span<const double> b) {
  const double d = sorted_ks_statistic(a, b);
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double n_eff = na * nb / (na + nb);
  return KsResult{d, kolmogorov_survival(std::sqrt(n_eff) * d)};
}

}  // namespace

double kolmogorov_survival(double lambda) {
  if (!(lambda > 0)) return 1.0;
  double q;
  if (lambda < 1.18) {
    // Jacobi theta form; converges fast for small lambda.
    const double pi2 = std::numbers::pi * std::numbers::pi;
    const double scale = -pi2 / (8.0 * lambda * lambda);
    double sum = 0.0;
    for (int j = 1; j <= 64; ++j) {
      const double k = 2.0 * j - 1.0;
      const double term = std::exp(scale * k * k);
      sum += term;
      if (term < 1e-18 * sum) break;
    }
    q = 1.0 - std::sqrt(2.0 * std::numbers::pi) / lambda * sum;
  } else {
    double sum = 0.0;
    double sign = 1.0;
    for (int j = 1; j <= 128; ++j) {
      const double term = std::exp(-2.0 * j * j * lambda * lambda);
      sum += sign * term;
      if (term < 1e-18) break;
      sign = -sign;
    }
    q = 2.0 * sum;
  }
  return std::clamp(q, 0.0, 1.0);
}

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) {
    throw std::invalid_argument("ks_two_sample: samples must be non-empty");
  }
  std::vector<double> sa(a.begin(), a.end());
  std::vector<double> sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  return ks_from_sorted(sa, sb);
}

namespace {

void check_matrix(const Matrix& m, const char* name) {
  if (m.empty()) {
    throw std::invalid_argument(std::string(name) + ": matrix is empty");
  }
  for (const auto& row : m) {
    if (row.size() != m.front().size()) {
      throw std::invalid_argument(std::string(name) +
                                  ": rows have inconsistent lengths");
    }
  }
}

double squared_distance(const std::vector<double>& u,
                        const std::vector<double>& v) {
  double s = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    const double d = u[k] - v[k];
    s += d * d;
  }
  return s;
}

// Kernel matrix of the pooled rows [x; y].
std::vector<double> pooled_kernel(const Matrix& x, const Matrix& y,
                                  double bandwidth) {
  const std::size_t n = x.size() + y.size();
  auto row = [&](std::size_t i) -> const std::vector<double>& {
    return i < x.size() ? x[i] : y[i - x.size()];
  };
  const double inv = -1.0 / (2.0 * bandwidth * bandwidth);
  std::vector<double> k(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    k[i * n + i] = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = std::exp(inv * squared_distance(row(i), row(j)));
      k[i * n + j] = v;
      k[j * n + i] = v;
    }
  }
  return k;
}

// Unbiased MMD^2 where idx[0, m) is the first sample and idx[m, n) the second.
double mmd2_from_kernel(const std::vector<double>& k, std::size_t n,
                        const std::vector<std::size_t>& idx, std::size_t m) {
  double sxx = 0.0;
  double syy = 0.0;
  double sxy = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    const double* krow = &k[idx[a] * n];
    for (std::size_t b = a + 1; b < n; ++b) {
      const double v = krow[idx[b]];
      if (b < m) {
        sxx += v;
      } else if (a >= m) {
        syy += v;
      } else {
        sxy += v;
      }
    }
  }
  const double mx = static_cast<double>(m);
  const double my = static_cast<double>(n - m);
  return 2.0 * sxx / (mx * (mx - 1.0)) + 2.0 * syy / (my * (my - 1.0)) -
         2.0 * sxy / (mx * my);
}

void check_mmd_inputs(const Matrix& x, const Matrix& y, double bandwidth) {
  check_matrix(x, "mmd x");
  check_matrix(y, "mmd y");
  if (x.front().size() != y.front().size()) {
    throw std::invalid_argument("mmd: dimension mismatch between x and y");
  }
  if (x.size() < 2 || y.size() < 2) {
    throw std::invalid_argument("mmd: each sample needs at least two rows");
  }
  if (!(bandwidth > 0)) {
    throw std::invalid_argument("mmd: bandwidth must be > 0");
  }
}

}  // namespace

double mmd2_unbiased(const Matrix& x, const Matrix& y, double bandwidth) {
  check_mmd_inputs(x, y, bandwidth);
  const std::size_t n = x.size() + y.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  return mmd2_from_kernel(pooled_kernel(x, y, bandwidth), n, idx, x.size());
}

MmdResult mmd_permutation(const Matrix& x, const Matrix& y, double bandwidth,
                          int n_perm, std::uint64_t seed) {
  check_mmd_inputs(x, y, bandwidth);
  if (n_perm < 20) {
    throw std::invalid_argument("mmd_permutation: n_perm must be >= 20");
  }
  const std::size_t n = x.size() + y.size();
  const auto k = pooled_kernel(x, y, bandwidth);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  const double observed = mmd2_from_kernel(k, n, idx, x.size());

  Rng rng(seed);
  int at_least = 0;
  for (int p = 0; p < n_perm; ++p) {
    std::shuffle(idx.begin(), idx.end(), rng);
    if (mmd2_from_kernel(k, n, idx, x.size()) >= observed) ++at_least;
  }
  return MmdResult{observed, (1.0 + at_least) / (1.0 + n_perm)};
}

double median_bandwidth(const Matrix& rows) {
  if (rows.size() < 2) return 1.0;
  std::vector<double> d;
  d.reserve(rows.size() * (rows.size() - 1) / 2);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = i + 1; j < rows.size(); ++j) {
      d.push_back(std::sqrt(squared_distance(rows[i], rows[j])));
    }
  }
  const std::size_t mid = d.size() / 2;
  std::nth_element(d.begin(), d.begin() + mid, d.end());
  double median = d[mid];
  if (d.size() % 2 == 0) {
    median = 0.5 * (median + *std::max_element(d.begin(), d.begin() + mid));
  }
  return median > 0 ? median : 1.0;
}

bool confidence_gate(double decision_confidence, double tau) {
  return decision_confidence < tau;
}

std::string_view to_string(Method method) {
  return method == Method::kKS ? "KS" : "MMD";
}

std::optional<Method> method_from_string(std::string_view name) {
  if (name == "KS") return Method::kKS;
  if (name == "MMD") return Method::kMMD;
  return std::nullopt;
}

// ---------------------------------------------------------------------------

DriftDetector DriftDetector::fit(std::span<const codec::FeatureVector> ref,
                                 const DetectorSettings& settings,
                                 std::uint64_t seed) {
  Matrix m;
  m.reserve(ref.size());
  for (const auto& f : ref) m.emplace_back(f.begin(), f.end());
  return fit(m, settings, seed);
}

DriftDetector DriftDetector::fit(const Matrix& reference,
                                 const DetectorSettings& settings,
                                 std::uint64_t seed) {
  if (!(settings.alpha > 0 && settings.alpha < 1)) {
    throw DetectorError("detector.alpha: must be in (0, 1)");
  }
  if (settings.window < 10) {
    throw DetectorError("detector.window: must be >= 10");
  }
  if (settings.n_ref < 30) {
    throw DetectorError("detector.n_ref: must be >= 30");
  }
  if (settings.n_perm < 20) {
    throw DetectorError("detector.n_perm: must be >= 20");
  }
  if (reference.size() < 30) {
    throw DetectorError("detector reference: need at least 30 samples, got " +
                        std::to_string(reference.size()));
  }
  const std::size_t dim = reference.front().size();
  if (dim == 0) throw DetectorError("detector reference: zero-width rows");
  for (const auto& row : reference) {
    if (row.size() != dim) {
      throw DetectorError("detector reference: inconsistent dimensions");
    }
  }

  DriftDetector det;
  det.settings_ = settings;
  det.reference_ = reference;
  det.dim_ = dim;
  det.seed_ = seed;
  det.sorted_columns_.assign(dim, std::vector<double>(reference.size()));
  for (std::size_t r = 0; r < reference.size(); ++r) {
    for (std::size_t c = 0; c < dim; ++c) {
      det.sorted_columns_[c][r] = reference[r][c];
    }
  }
  for (auto& col : det.sorted_columns_) std::sort(col.begin(), col.end());
  if (settings.method == Method::kMMD) {
    det.bandwidth_ = median_bandwidth(reference);
  }
  return det;
}

DriftReport DriftDetector::predict(std::span<const codec::FeatureVector> window,
                                   std::uint64_t seed) const {
  Matrix m;
  m.reserve(window.size());
  for (const auto& f : window) m.emplace_back(f.begin(), f.end());
  return predict(m, seed);
}

DriftReport DriftDetector::predict(const Matrix& window,
                                   std::uint64_t seed) const {
  if (window.size() != static_cast<std::size_t>(settings_.window)) {
    throw DetectorError("predict: window has " + std::to_string(window.size()) +
                        " samples, detector expects " +
                        std::to_string(settings_.window));
  }
  for (const auto& row : window) {
    if (row.size() != dim_) {
      throw DetectorError("predict: window dimension does not match reference");
    }
  }

  DriftReport report;
  if (settings_.method == Method::kKS) {
    report.threshold_used = settings_.alpha / static_cast<double>(dim_);
    std::vector<double> column(window.size());
    double min_p = 1.0;
    for (std::size_t c = 0; c < dim_; ++c) {
      for (std::size_t r = 0; r < window.size(); ++r) column[r] = window[r][c];
      std::sort(column.begin(), column.end());
      const KsResult ks = ks_from_sorted(sorted_columns_[c], column);
      report.statistics.push_back(ks.statistic);
      report.p_values.push_back(ks.p_value);
      min_p = std::min(min_p, ks.p_value);
    }
    report.is_drift = min_p < report.threshold_used;
  } else {
    report.threshold_used = settings_.alpha;
    const MmdResult r = mmd_permutation(reference_, window, bandwidth_,
                                        settings_.n_perm, seed);
    report.statistics.push_back(r.mmd2);
    report.p_values.push_back(r.p_value);
    report.is_drift = r.p_value < settings_.alpha;
  }
  return report;
}

}  // namespace ecdrive::drift
