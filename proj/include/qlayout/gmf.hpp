#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "qlayout/geometry.hpp"

namespace qlayout {

struct RefineConfig {
  int k_s = 100;           // quantile samples for the size estimate
  double tau_min = 0.1;    // quantile levels are drawn from [tau_min, 1]
  int em_max_iters = 100;
  double em_tol = 1e-6;    // stop when the log-likelihood gain drops below this
  double pdf_clamp = 1e-4; // normalised metrics are clamped into [clamp, 1 - clamp]

  void validate() const;
};

inline constexpr double kShapeMin = 1e-2;
inline constexpr double kShapeMax = 1e3;
inline constexpr std::size_t kMinMixtureSamples = 20;

/// Density on [0,1]: Gamma(a+b)/(Gamma(a)Gamma(b)) x^(a-1) (1-x)^(b-1).
struct BetaComponent {
  double a = 1.0;
  double b = 1.0;

  double mean() const { return a / (a + b); }
  double log_norm() const;
  double log_pdf(double x) const;
  double pdf(double x) const;
};

/// Two-component mixture over affinely normalised metrics. Component 0 is the
/// lower-mean component, i.e. the points that support the quad.
struct MixtureModel {
  double w0 = 1.0;
  double w1 = 0.0;
  BetaComponent belong;
  BetaComponent other;
  double offset = 0.0;  // normalised = (raw - offset) / scale
  double scale = 1.0;
  double pdf_clamp = 1e-4;
  bool degenerate = true;
  int iterations = 0;
  double log_likelihood = 0.0;

  double normalize(double raw) const;
  /// Posterior probability that a raw metric belongs to component 0.
  double posterior_belong(double raw) const;
  /// w0 P(x|belong) >= w1 P(x|other).
  bool keeps(double raw) const;
  double pdf(double normalized) const;

  static MixtureModel degenerate_fallback(double offset, double scale, double pdf_clamp);
};

/// Optional diagnostics from the EM loop: log-likelihood after each E-step.
struct FitTrace {
  std::vector<double> log_likelihood;
};

enum class InitialSplit {
  kLowerHalfFirst,  // samples below the median start in component 0
  kUpperHalfFirst,
};

/// Hybrid metric of every point against `q`, in point order.
std::vector<double> collect_metrics(const Quad& q, const PointCloud& cloud);

/// Normalises the metrics into (0,1) and fits the two-component mixture with EM.
/// Fewer than 20 samples or a spread below 1e-9 yields the degenerate keep-all model.
MixtureModel fit_mixture(std::span<const double> metrics, const RefineConfig& config,
                         FitTrace* trace = nullptr,
                         InitialSplit split = InitialSplit::kLowerHalfFirst);

/// Indices of points kept by the mixture rule, ascending.
std::vector<std::size_t> filter_metrics(std::span<const double> metrics, const MixtureModel& model);
std::vector<std::size_t> filter_points(const Quad& q, const PointCloud& cloud,
                                       const MixtureModel& model);

/// Fixed-threshold baseline: points whose perpendicular distance to the quad
/// plane is below `max_distance`.
std::vector<std::size_t> filter_by_perpendicular(const Quad& q, const PointCloud& cloud,
                                                 double max_distance);

/// Re-estimates a quad from supporting points: mean position, mean
/// (sign-aligned) normal, and a quantile-based half-size estimate.
Quad refine_quad(const Quad& q, const PointCloud& cloud, std::span<const std::size_t> kept,
                 const RefineConfig& config, std::uint64_t seed);

/// Highest-quadness quad, lowest index on ties.
std::size_t select_refine_target(std::span<const Quad> teacher);

struct GmfResult {
  Quad refined;
  std::vector<std::size_t> kept;
  MixtureModel model;
};

GmfResult gmf_refine(const Quad& q, const PointCloud& cloud, const RefineConfig& config,
                     std::uint64_t seed);

/// Linear-interpolation quantile of an ascending-sorted sample.
double sorted_quantile(std::span<const double> sorted, double tau);

}  // namespace qlayout
