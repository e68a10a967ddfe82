#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "qlayout/gmf.hpp"
#include "qlayout/rng.hpp"

using namespace qlayout;

namespace {

std::vector<double> beta_mixture(std::uint64_t seed, int n, double a0, double b0, double a1, double b1,
                                 double w0) {
  Rng rng(seed);
  std::gamma_distribution<double> ga0(a0, 1), gb0(b0, 1), ga1(a1, 1), gb1(b1, 1);
  std::bernoulli_distribution first(w0);
  std::vector<double> x;
  for (int i = 0; i < n; ++i) {
    if (first(rng)) {
      const double a = ga0(rng), b = gb0(rng);
      x.push_back(a / (a + b));
    } else {
      const double a = ga1(rng), b = gb1(rng);
      x.push_back(a / (a + b));
    }
  }
  return x;
}

// Regular grid on a quad with exact normals.
PointCloud grid_on(const Quad& q, int nu, int nv) {
  const auto ax = quad_axes(q);
  PointCloud c;
  for (int i = 0; i < nu; ++i)
    for (int j = 0; j < nv; ++j) {
      const double u = -1.0 + (2.0 * i + 1.0) / nu, v = -1.0 + (2.0 * j + 1.0) / nv;
      c.points.push_back(q.center + u * q.half_size.x() * ax.x_axis + v * q.half_size.y() * ax.z_axis);
      c.normals.push_back(q.normal);
    }
  return c;
}

std::vector<std::size_t> iota_n(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

}  // namespace

TEST(BetaComponent, DensityIntegratesToOne) {
  for (auto [a, b] : {std::pair{2.0, 8.0}, {8.0, 2.0}, {1.0, 1.0}, {3.5, 3.5}, {20.0, 40.0}}) {
    const BetaComponent c{a, b};
    // Composite Simpson on [0,1]; all chosen shapes are bounded densities.
    const int n = 20000;
    double s = c.pdf(1e-12) + c.pdf(1 - 1e-12);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * c.pdf(static_cast<double>(i) / n);
    EXPECT_NEAR(s / (3.0 * n), 1.0, 1e-3) << a << "," << b;
    EXPECT_NEAR(c.mean(), a / (a + b), 1e-15);
  }
}

TEST(BetaComponent, MatchesClosedFormPdf) {
  const BetaComponent c{2, 3};  // 12 x (1-x)^2
  for (double x : {0.1, 0.5, 0.9}) EXPECT_NEAR(c.pdf(x), 12 * x * (1 - x) * (1 - x), 1e-12);
}

TEST(FitMixture, RecoversTwoBetas) {
  const auto x = beta_mixture(41, 2000, 2, 8, 8, 2, 0.5);
  FitTrace trace;
  const MixtureModel m = fit_mixture(x, RefineConfig{}, &trace);
  ASSERT_FALSE(m.degenerate);
  EXPECT_NEAR(m.w0, 0.5, 0.10);
  EXPECT_NEAR(m.offset + m.scale * m.belong.mean(), 0.2, 0.05);
  EXPECT_NEAR(m.offset + m.scale * m.other.mean(), 0.8, 0.05);
  EXPECT_EQ(m.w0 + m.w1, 1.0);
}

TEST(FitMixture, LogLikelihoodNondecreasing) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto x = beta_mixture(50 + s, 500 + 100 * static_cast<int>(s), 1.5, 6, 5, 1.2, 0.3);
    FitTrace trace;
    fit_mixture(x, RefineConfig{}, &trace);
    ASSERT_FALSE(trace.log_likelihood.empty());
    for (std::size_t i = 1; i < trace.log_likelihood.size(); ++i)
      EXPECT_GE(trace.log_likelihood[i], trace.log_likelihood[i - 1] - 1e-9);
  }
}

TEST(FitMixture, DegenerateInputs) {
  const std::vector<double> same(100, 0.3);
  MixtureModel m = fit_mixture(same, RefineConfig{});
  EXPECT_TRUE(m.degenerate);
  EXPECT_EQ(m.w0, 1.0);
  EXPECT_EQ(filter_metrics(same, m).size(), same.size());

  const std::vector<double> few = {0.1, 0.5, 0.9};
  m = fit_mixture(few, RefineConfig{});
  EXPECT_TRUE(m.degenerate);
  EXPECT_EQ(filter_metrics(few, m).size(), 3u);
}

TEST(FitMixture, LabelSwapGivesSameCanonicalModel) {
  const auto x = beta_mixture(42, 1500, 2, 9, 6, 2, 0.4);
  const MixtureModel a = fit_mixture(x, RefineConfig{}, nullptr, InitialSplit::kLowerHalfFirst);
  const MixtureModel b = fit_mixture(x, RefineConfig{}, nullptr, InitialSplit::kUpperHalfFirst);
  EXPECT_NEAR(a.w0, b.w0, 1e-4);
  EXPECT_NEAR(a.belong.mean(), b.belong.mean(), 1e-4);
  EXPECT_NEAR(a.other.mean(), b.other.mean(), 1e-4);
  EXPECT_LT(a.belong.mean(), a.other.mean());
  EXPECT_EQ(filter_metrics(x, a), filter_metrics(x, b));
}

TEST(FitMixture, KeptSetIsScaleInvariant) {
  const auto x = beta_mixture(43, 800, 1.2, 10, 4, 3, 0.35);
  const auto kept = filter_metrics(x, fit_mixture(x, RefineConfig{}));
  for (double k : {0.5, 3.0, 1000.0}) {
    std::vector<double> y(x);
    for (auto& v : y) v *= k;
    EXPECT_EQ(filter_metrics(y, fit_mixture(y, RefineConfig{})), kept) << k;
  }
}

TEST(FilterMetrics, HandModel) {
  MixtureModel m;
  m.degenerate = false;
  m.w0 = m.w1 = 0.5;
  m.belong = {1, 9};  // mean 0.1
  m.other = {7, 3};   // mean 0.7
  EXPECT_TRUE(m.keeps(0.05));
  EXPECT_FALSE(m.keeps(0.9));
}

TEST(FilterMetrics, EqualsBrutePosteriorRule) {
  const auto x = beta_mixture(44, 1000, 2, 8, 8, 2, 0.6);
  const MixtureModel m = fit_mixture(x, RefineConfig{});
  std::vector<std::size_t> brute;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double z = std::clamp((x[i] - m.offset) / m.scale, m.pdf_clamp, 1 - m.pdf_clamp);
    const double p0 = m.w0 * m.belong.pdf(z), p1 = m.w1 * m.other.pdf(z);
    if (p0 / (p0 + p1) >= 0.5) brute.push_back(i);
  }
  EXPECT_EQ(filter_metrics(x, m), brute);
}

TEST(FilterMetrics, IntersectionActsAsThreshold) {
  const auto x = beta_mixture(45, 1500, 2, 12, 10, 3, 0.5);
  const MixtureModel m = fit_mixture(x, RefineConfig{});
  // Bisect the posterior crossing between the two component means.
  double lo = m.offset + m.scale * m.belong.mean(), hi = m.offset + m.scale * m.other.mean();
  ASSERT_TRUE(m.keeps(lo));
  ASSERT_FALSE(m.keeps(hi));
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (m.keeps(mid) ? lo : hi) = mid;
  }
  std::vector<std::size_t> thresh;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] <= lo) thresh.push_back(i);
  EXPECT_EQ(filter_metrics(x, m), thresh);
}

TEST(CollectMetrics, MatchesPointwiseAndNeedsNormals) {
  const Quad q = Quad::ground_truth(Vec3(0, 0, 1), Vec3::UnitX(), Vec2(2, 1));
  PointCloud c = grid_on(q, 5, 4);
  c.points.push_back(Vec3(1, 3, 0));
  c.normals.push_back(Vec3::UnitY());
  const auto m = collect_metrics(q, c);
  ASSERT_EQ(m.size(), c.size());
  for (std::size_t i = 0; i + 1 < c.size(); ++i) EXPECT_EQ(m[i], 0.0);
  EXPECT_EQ(m.back(), point_quad_metrics(c.oriented(c.size() - 1), q).total);
  c.normals.clear();
  EXPECT_THROW(collect_metrics(q, c), Error);
}

TEST(SortedQuantile, LinearInterpolation) {
  const std::vector<double> v = {0, 1, 2, 3, 4};
  EXPECT_EQ(sorted_quantile(v, 0.0), 0.0);
  EXPECT_EQ(sorted_quantile(v, 1.0), 4.0);
  EXPECT_DOUBLE_EQ(sorted_quantile(v, 0.3), 1.2);
  EXPECT_THROW(sorted_quantile({}, 0.5), Error);
}

TEST(RefineQuad, SymmetricGridIsExact) {
  const Quad q = Quad::ground_truth(Vec3(1, 2, 1.25), Vec3(0.6, 0.8, 0), Vec2(2, 1.25));
  const PointCloud c = grid_on(q, 40, 25);
  const Quad r = refine_quad(q, c, iota_n(c.size()), RefineConfig{}, 1);
  EXPECT_NEAR((r.center - q.center).norm(), 0.0, 1e-9);
  EXPECT_NEAR((r.normal - q.normal).norm(), 0.0, 1e-9);
  EXPECT_EQ(r.quadness, 1.0);
  EXPECT_NEAR(r.half_size.x(), 2.0, 0.1);
  EXPECT_NEAR(r.half_size.y(), 1.25, 0.1);
}

TEST(RefineQuad, NormalSignsAreAlignedBeforeAveraging) {
  const Quad q = Quad::ground_truth(Vec3(0, 0, 1), Vec3::UnitY(), Vec2(1, 1));
  PointCloud c = grid_on(q, 6, 6);
  for (std::size_t i = 0; i < c.size(); i += 2) c.normals[i] = -c.normals[i];
  const Quad r = refine_quad(q, c, iota_n(c.size()), RefineConfig{}, 1);
  EXPECT_NEAR((r.normal - q.normal).norm(), 0.0, 1e-12);
}

TEST(RefineQuad, TranslationEquivariant) {
  Rng rng(46);
  const Quad q = Quad::ground_truth(Vec3(0, 0, 1), Vec3(0.8, -0.6, 0), Vec2(1.5, 1));
  PointCloud c;
  for (int i = 0; i < 300; ++i) {
    c.points.emplace_back(uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, 0, 2));
    c.normals.push_back(q.normal);
  }
  const Vec3 v(10.5, -3.25, 2.0);
  PointCloud moved = c;
  for (auto& p : moved.points) p += v;
  Quad qm = q;
  qm.center += v;
  const auto kept = iota_n(c.size());
  const Quad a = refine_quad(q, c, kept, RefineConfig{}, 5);
  const Quad b = refine_quad(qm, moved, kept, RefineConfig{}, 5);
  EXPECT_NEAR((b.center - (a.center + v)).norm(), 0.0, 1e-12);
  EXPECT_NEAR((b.half_size - a.half_size).norm(), 0.0, 1e-9);
}

TEST(RefineQuad, SizeEstimatorIsUnbiased) {
  const Quad q = Quad::ground_truth(Vec3(0, 0, 1), Vec3::UnitX(), Vec2(2, 1));
  const auto ax = quad_axes(q);
  Vec2 sum = Vec2::Zero();
  const int reps = 40;
  for (int r = 0; r < reps; ++r) {
    Rng rng(mix_seed(47, static_cast<std::uint64_t>(r)));
    PointCloud c;
    for (int i = 0; i < 5000; ++i) {
      c.points.push_back(q.center + uniform(rng, -2, 2) * ax.x_axis + uniform(rng, -1, 1) * ax.z_axis);
      c.normals.push_back(q.normal);
    }
    sum += refine_quad(q, c, iota_n(c.size()), RefineConfig{}, static_cast<std::uint64_t>(r)).half_size;
  }
  EXPECT_NEAR(sum.x() / reps / 2.0, 1.0, 0.02);
  EXPECT_NEAR(sum.y() / reps / 1.0, 1.0, 0.02);
}

TEST(RefineQuad, Errors) {
  const Quad q = Quad::ground_truth(Vec3::Zero(), Vec3::UnitX(), Vec2(1, 1));
  PointCloud c = grid_on(q, 2, 2);
  EXPECT_THROW(refine_quad(q, c, std::vector<std::size_t>{}, RefineConfig{}, 0), Error);
  EXPECT_THROW(refine_quad(q, c, std::vector<std::size_t>{0, 1, 2}, RefineConfig{}, 0), Error);
  c.normals = {Vec3::UnitY(), -Vec3::UnitY(), Vec3::UnitZ(), -Vec3::UnitZ()};
  EXPECT_THROW(refine_quad(q, c, iota_n(4), RefineConfig{}, 0), Error);
}

TEST(SelectRefineTarget, Argmax) {
  auto make = [](std::vector<double> ps) {
    std::vector<Quad> v;
    for (double p : ps) v.push_back(Quad{Vec3::Zero(), Vec3::UnitX(), Vec2(1, 1), p});
    return v;
  };
  EXPECT_EQ(select_refine_target(make({0.2, 0.9, 0.5})), 1u);
  EXPECT_EQ(select_refine_target(make({0.4, 0.4, 0.4})), 0u);
  EXPECT_EQ(select_refine_target(make({0.1})), 0u);
  EXPECT_THROW(select_refine_target(std::vector<Quad>{}), Error);
}

TEST(GmfRefine, ExactQuadIsAFixedPoint) {
  const Quad q = Quad::ground_truth(Vec3(2, 0, 1.25), Vec3(-1, 0, 0), Vec2(2.5, 1.25));
  const PointCloud c = grid_on(q, 50, 25);
  const GmfResult r = gmf_refine(q, c, RefineConfig{}, 3);
  EXPECT_LE((r.refined.center - q.center).norm(), 1e-3);
  EXPECT_LE(angle_between_deg(r.refined.normal, q.normal), 0.5);
  EXPECT_EQ(r.kept.size(), c.size());
}

TEST(GmfRefine, SeparatesWallFromOutliers) {
  const Quad q = Quad::ground_truth(Vec3(0, 0, 1.25), Vec3::UnitY(), Vec2(2, 1.25));
  PointCloud c = grid_on(q, 60, 30);
  const std::size_t wall = c.size();
  Rng rng(48);
  for (int i = 0; i < 400; ++i) {
    c.points.emplace_back(uniform(rng, -3, 3), uniform(rng, 0.5, 4), uniform(rng, 0, 2.5));
    c.normals.push_back(Vec3(uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1)).normalized());
  }
  Quad noisy = q;
  noisy.center += 0.08 * q.normal;
  const GmfResult r = gmf_refine(noisy, c, RefineConfig{}, 4);
  std::size_t on_wall = 0;
  for (auto k : r.kept) on_wall += k < wall;
  EXPECT_EQ(on_wall, wall);
  EXPECT_LT(r.kept.size(), wall + 40);
  EXPECT_LE((r.refined.center - q.center).norm(), 0.05);
}

TEST(GmfRefine, UniformNoiseDoesNotCrash) {
  Rng rng(49);
  PointCloud c;
  for (int i = 0; i < 500; ++i) {
    c.points.emplace_back(uniform(rng, -2, 2), uniform(rng, -2, 2), uniform(rng, 0, 2));
    c.normals.push_back(Vec3(uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1)).normalized());
  }
  const Quad q = Quad::ground_truth(Vec3(0, 0, 1), Vec3::UnitX(), Vec2(1, 1));
  const GmfResult r = gmf_refine(q, c, RefineConfig{}, 1);
  EXPECT_TRUE(is_valid(r.refined));
}

TEST(GmfRefine, DeterministicAndNeedsEnoughPoints) {
  const Quad q = Quad::ground_truth(Vec3(0, 0, 1), Vec3::UnitX(), Vec2(1, 1));
  const PointCloud c = grid_on(q, 10, 10);
  const GmfResult a = gmf_refine(q, c, RefineConfig{}, 9), b = gmf_refine(q, c, RefineConfig{}, 9);
  EXPECT_EQ(a.refined.center, b.refined.center);
  EXPECT_EQ(a.refined.half_size, b.refined.half_size);
  EXPECT_THROW(gmf_refine(q, grid_on(q, 4, 4), RefineConfig{}, 9), Error);
}

TEST(RefineConfig, Validation) {
  RefineConfig c;
  c.tau_min = 1.0;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.k_s = 0;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.pdf_clamp = 0.6;
  EXPECT_THROW(c.validate(), Error);
}
