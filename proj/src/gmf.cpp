#include "qlayout/gmf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

#include "qlayout/rng.hpp"

namespace qlayout {

namespace {

constexpr double kMinWeight = 1e-12;
constexpr double kMinSpread = 1e-9;
constexpr double kInitialSplitFractions[] = {0.5, 0.25, 0.1, 0.05};
constexpr int kShortRunIters = 10;

double clamp_shape(double v) { return std::clamp(v, kShapeMin, kShapeMax); }

double log_add(double a, double b) {
  const double m = std::max(a, b);
  if (m == -std::numeric_limits<double>::infinity()) return m;
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

// Weighted sufficient statistics of one component.
struct Stats {
  double weight = 0.0;    // sum r
  double sum_x = 0.0;     // sum r x
  double sum_xx = 0.0;    // sum r x^2
  double sum_log = 0.0;   // sum r log x
  double sum_log1m = 0.0; // sum r log(1-x)
};

// Expected complete-data log-likelihood of one component (up to terms that do
// not depend on its shape).
double objective(const BetaComponent& c, const Stats& s) {
  return s.weight * c.log_norm() + (c.a - 1.0) * s.sum_log + (c.b - 1.0) * s.sum_log1m;
}

bool moment_match(const Stats& s, BetaComponent& out) {
  if (s.weight <= 0.0) return false;
  const double m = s.sum_x / s.weight;
  const double v = s.sum_xx / s.weight - m * m;
  if (!(v > 0.0) || !(m > 0.0 && m < 1.0)) return false;
  const double common = m * (1.0 - m) / v - 1.0;
  if (!(common > 0.0)) return false;
  out = {clamp_shape(m * common), clamp_shape((1.0 - m) * common)};
  return true;
}

// Damped Newton ascent on the (concave) weighted beta log-likelihood inside
// the shape box. Only improving steps are taken.
BetaComponent maximize_shape(BetaComponent cur, const Stats& s) {
  if (s.weight <= 0.0) return cur;
  double best = objective(cur, s);
  for (int iter = 0; iter < 50; ++iter) {
    const double psi_ab = boost::math::digamma(cur.a + cur.b);
    const double tri_ab = boost::math::trigamma(cur.a + cur.b);
    const double ga = s.weight * (psi_ab - boost::math::digamma(cur.a)) + s.sum_log;
    const double gb = s.weight * (psi_ab - boost::math::digamma(cur.b)) + s.sum_log1m;
    const double haa = s.weight * (tri_ab - boost::math::trigamma(cur.a));
    const double hbb = s.weight * (tri_ab - boost::math::trigamma(cur.b));
    const double hab = s.weight * tri_ab;
    const double det = haa * hbb - hab * hab;
    if (!(det > 0.0) || !(haa < 0.0)) break;
    const double da = -(hbb * ga - hab * gb) / det;
    const double db = -(haa * gb - hab * ga) / det;

    bool improved = false;
    double t = 1.0;
    for (int half = 0; half < 40; ++half, t *= 0.5) {
      const BetaComponent cand{clamp_shape(cur.a + t * da), clamp_shape(cur.b + t * db)};
      const double val = objective(cand, s);
      if (val > best) {
        const double moved = std::abs(cand.a - cur.a) + std::abs(cand.b - cur.b);
        cur = cand;
        best = val;
        improved = moved > 1e-12 * (cur.a + cur.b);
        break;
      }
    }
    if (!improved) break;
  }
  return cur;
}

BetaComponent m_step_shape(const BetaComponent* current, const Stats& s) {
  BetaComponent start = current ? *current : BetaComponent{1.0, 1.0};
  BetaComponent mom;
  if (moment_match(s, mom) && (!current || objective(mom, s) > objective(start, s))) start = mom;
  return maximize_shape(start, s);
}

struct Sample {
  double x;
  double log_x;
  double log_1mx;
};

}  // namespace

void RefineConfig::validate() const {
  if (k_s < 1) throw Error("refine: k_s must be positive");
  if (!(tau_min > 0.0 && tau_min < 1.0)) throw Error("refine: tau_min must lie in (0,1)");
  if (em_max_iters < 1) throw Error("refine: em_max_iters must be positive");
  if (!(em_tol > 0.0)) throw Error("refine: em_tol must be positive");
  if (!(pdf_clamp > 0.0 && pdf_clamp < 0.5)) throw Error("refine: pdf_clamp must lie in (0,0.5)");
}

double BetaComponent::log_norm() const {
  return boost::math::lgamma(a + b) - boost::math::lgamma(a) - boost::math::lgamma(b);
}

double BetaComponent::log_pdf(double x) const {
  return log_norm() + (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x);
}

double BetaComponent::pdf(double x) const { return std::exp(log_pdf(x)); }

double MixtureModel::normalize(double raw) const {
  return std::clamp((raw - offset) / scale, pdf_clamp, 1.0 - pdf_clamp);
}

double MixtureModel::posterior_belong(double raw) const {
  if (degenerate || w1 <= 0.0) return 1.0;
  if (w0 <= 0.0) return 0.0;
  const double x = normalize(raw);
  const double l0 = std::log(w0) + belong.log_pdf(x);
  const double l1 = std::log(w1) + other.log_pdf(x);
  return std::exp(l0 - log_add(l0, l1));
}

bool MixtureModel::keeps(double raw) const {
  if (degenerate || w1 <= 0.0) return true;
  if (w0 <= 0.0) return false;
  const double x = normalize(raw);
  return std::log(w0) + belong.log_pdf(x) >= std::log(w1) + other.log_pdf(x);
}

double MixtureModel::pdf(double x) const {
  if (degenerate) return belong.pdf(x);
  return w0 * belong.pdf(x) + w1 * other.pdf(x);
}

MixtureModel MixtureModel::degenerate_fallback(double offset, double scale, double pdf_clamp) {
  MixtureModel m;
  m.offset = offset;
  m.scale = scale;
  m.pdf_clamp = pdf_clamp;
  m.degenerate = true;
  return m;
}

std::vector<double> collect_metrics(const Quad& q, const PointCloud& cloud) {
  if (!cloud.has_normals()) throw Error("normals required");
  std::vector<double> out(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i)
    out[i] = point_quad_metrics(cloud.oriented(i), q).total;
  return out;
}

namespace {

struct EmRun {
  double w0 = 0.5, w1 = 0.5;
  BetaComponent c0, c1;
  double ll = -std::numeric_limits<double>::infinity();
  int iterations = 0;
  std::vector<double> trace;
};

void accumulate(Stats& s, const Sample& smp, double r) {
  s.weight += r;
  s.sum_x += r * smp.x;
  s.sum_xx += r * smp.x * smp.x;
  s.sum_log += r * smp.log_x;
  s.sum_log1m += r * smp.log_1mx;
}

// EM from a hard split: the `lower` smallest samples start in one component,
// the rest in the other.
EmRun start_em(const std::vector<Sample>& xs, const std::vector<std::size_t>& order,
               std::size_t lower, InitialSplit split) {
  const std::size_t n = xs.size();
  Stats s0, s1;
  for (std::size_t rank = 0; rank < n; ++rank) {
    const bool low = rank < lower;
    const bool first = split == InitialSplit::kLowerHalfFirst ? low : !low;
    accumulate(first ? s0 : s1, xs[order[rank]], 1.0);
  }
  EmRun run;
  run.w0 = s0.weight / static_cast<double>(n);
  run.w1 = 1.0 - run.w0;
  run.c0 = m_step_shape(nullptr, s0);
  run.c1 = m_step_shape(nullptr, s1);
  return run;
}

// Continues `run` for at most `max_iters` further E-steps. Returns true once
// the log-likelihood gain falls below the tolerance.
bool continue_em(EmRun& run, const std::vector<Sample>& xs, int max_iters,
                 const RefineConfig& config) {
  const std::size_t n = xs.size();
  Stats s0, s1;
  for (int k = 0; k < max_iters && run.iterations < config.em_max_iters; ++k) {
    const int iter = run.iterations;
    // E-step
    const double lw0 = std::log(run.w0) + run.c0.log_norm();
    const double lw1 = std::log(run.w1) + run.c1.log_norm();
    s0 = Stats{};
    s1 = Stats{};
    double ll = 0.0;
    for (const auto& smp : xs) {
      const double l0 = lw0 + (run.c0.a - 1.0) * smp.log_x + (run.c0.b - 1.0) * smp.log_1mx;
      const double l1 = lw1 + (run.c1.a - 1.0) * smp.log_x + (run.c1.b - 1.0) * smp.log_1mx;
      // log(e^l0 + e^l1) and the responsibility share one exponential.
      const double e = std::exp(-std::abs(l0 - l1));
      ll += std::max(l0, l1) + std::log1p(e);
      const double r0 = l0 >= l1 ? 1.0 / (1.0 + e) : e / (1.0 + e);
      accumulate(s0, smp, r0);
      accumulate(s1, smp, 1.0 - r0);
    }
    const double prev_ll = run.ll;
    run.ll = ll;
    run.trace.push_back(ll);
    run.iterations = iter + 1;
    if (iter > 0 && ll - prev_ll < config.em_tol) return true;

    // M-step
    run.w0 = std::clamp(s0.weight / static_cast<double>(n), kMinWeight, 1.0 - kMinWeight);
    run.w1 = 1.0 - run.w0;
    run.c0 = m_step_shape(&run.c0, s0);
    run.c1 = m_step_shape(&run.c1, s1);
  }
  return run.iterations >= config.em_max_iters;
}

}  // namespace

MixtureModel fit_mixture(std::span<const double> metrics, const RefineConfig& config,
                         FitTrace* trace, InitialSplit split) {
  config.validate();
  if (metrics.empty()) return MixtureModel::degenerate_fallback(0.0, 1.0, config.pdf_clamp);
  const auto [lo_it, hi_it] = std::minmax_element(metrics.begin(), metrics.end());
  const double lo = *lo_it, spread = *hi_it - *lo_it;
  if (metrics.size() < kMinMixtureSamples || !(spread >= kMinSpread))
    return MixtureModel::degenerate_fallback(lo, spread >= kMinSpread ? spread : 1.0,
                                             config.pdf_clamp);

  MixtureModel model;
  model.offset = lo;
  model.scale = spread;
  model.pdf_clamp = config.pdf_clamp;
  model.degenerate = false;

  const std::size_t n = metrics.size();
  std::vector<Sample> xs(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = model.normalize(metrics[i]);
    xs[i] = {x, std::log(x), std::log1p(-x)};
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return xs[i].x < xs[j].x; });

  // EM only finds a local optimum. Short runs start from the median split and
  // from splits isolating a small low-metric group; the one with the highest
  // log-likelihood (first on ties) is then run to convergence.
  std::optional<EmRun> best;
  for (double fraction : kInitialSplitFractions) {
    const auto lower = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n))));
    EmRun run = start_em(xs, order, std::min(lower, n - 1), split);
    continue_em(run, xs, kShortRunIters, config);
    if (!best || run.ll > best->ll) best = std::move(run);
  }
  continue_em(*best, xs, config.em_max_iters, config);
  if (trace) trace->log_likelihood = best->trace;

  EmRun& fit = *best;
  if (fit.c0.mean() > fit.c1.mean()) {
    std::swap(fit.c0, fit.c1);
    std::swap(fit.w0, fit.w1);
  }
  model.w0 = fit.w0;
  model.w1 = fit.w1;
  model.belong = fit.c0;
  model.other = fit.c1;
  model.iterations = fit.iterations;
  model.log_likelihood = fit.ll;
  return model;
}

std::vector<std::size_t> filter_metrics(std::span<const double> metrics,
                                        const MixtureModel& model) {
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < metrics.size(); ++i)
    if (model.keeps(metrics[i])) kept.push_back(i);
  return kept;
}

std::vector<std::size_t> filter_points(const Quad& q, const PointCloud& cloud,
                                       const MixtureModel& model) {
  if (model.degenerate) {
    std::vector<std::size_t> all(cloud.size());
    std::iota(all.begin(), all.end(), 0);
    return all;
  }
  return filter_metrics(collect_metrics(q, cloud), model);
}

std::vector<std::size_t> filter_by_perpendicular(const Quad& q, const PointCloud& cloud,
                                                 double max_distance) {
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < cloud.size(); ++i)
    if (std::abs((cloud.points[i] - q.center).dot(q.normal)) < max_distance) kept.push_back(i);
  return kept;
}

double sorted_quantile(std::span<const double> sorted, double tau) {
  if (sorted.empty()) throw Error("quantile of empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * std::clamp(tau, 0.0, 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

Quad refine_quad(const Quad& q, const PointCloud& cloud, std::span<const std::size_t> kept,
                 const RefineConfig& config, std::uint64_t seed) {
  config.validate();
  if (kept.size() < 4) throw Error("insufficient support");
  if (!cloud.has_normals()) throw Error("normals required");

  Vec3 center = Vec3::Zero();
  Vec3 normal_sum = Vec3::Zero();
  for (std::size_t i : kept) {
    center += cloud.points.at(i);
    const Vec3& n = cloud.normals[i];
    normal_sum += n.dot(q.normal) < 0.0 ? Vec3(-n) : n;
  }
  center /= static_cast<double>(kept.size());
  if (normal_sum.norm() < 1e-6) throw Error("degenerate normals");

  Quad refined{center, normal_sum.normalized(), Vec2::Zero(), 1.0};
  const auto [x_axis, z_axis] = quad_axes(refined);

  std::vector<double> wx, hz;
  wx.reserve(kept.size());
  hz.reserve(kept.size());
  for (std::size_t i : kept) {
    const Vec3 d = cloud.points[i] - center;
    wx.push_back(std::abs(d.dot(x_axis)));
    hz.push_back(std::abs(d.dot(z_axis)));
  }
  std::sort(wx.begin(), wx.end());
  std::sort(hz.begin(), hz.end());

  Rng rng(seed);
  Vec2 size = Vec2::Zero();
  for (int i = 0; i < config.k_s; ++i) {
    const double tau = uniform(rng, config.tau_min, 1.0);
    size.x() += sorted_quantile(wx, tau) / tau;
    size.y() += sorted_quantile(hz, tau) / tau;
  }
  refined.half_size = size / static_cast<double>(config.k_s);
  return refined;
}

std::size_t select_refine_target(std::span<const Quad> teacher) {
  if (teacher.empty()) throw Error("no quads");
  std::size_t best = 0;
  for (std::size_t i = 1; i < teacher.size(); ++i)
    if (teacher[i].quadness > teacher[best].quadness) best = i;
  return best;
}

GmfResult gmf_refine(const Quad& q, const PointCloud& cloud, const RefineConfig& config,
                     std::uint64_t seed) {
  if (cloud.size() < kMinMixtureSamples) throw Error("gmf_refine: cloud needs at least 20 points");
  const auto metrics = collect_metrics(q, cloud);
  GmfResult r;
  r.model = fit_mixture(metrics, config);
  r.kept = r.model.degenerate ? filter_points(q, cloud, r.model) : filter_metrics(metrics, r.model);
  r.refined = refine_quad(q, cloud, r.kept, config, seed);
  return r;
}

}  // namespace qlayout
