#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "feddig/digest/digest.hpp"
#include "feddig/digest/store.hpp"
#include "feddig/error.hpp"
#include "properties/digest_suite.hpp"

namespace feddig {
namespace {

using namespace digest;
using nn::Real;

FeatureSet random_features(int s, int ell, int k, std::mt19937_64& rng) {
  return testing::random_feature_set(s, ell, k, rng);
}

int row_of(const FeatureSet& fs, int source) {
  const auto it = std::find(fs.source_indices.begin(), fs.source_indices.end(), source);
  return static_cast<int>(it - fs.source_indices.begin());
}

TEST(DigestProperties, RandomizedInvariantSuite) {
  const auto rep = testing::run_digest_suite(1000, 2024);
  EXPECT_EQ(rep.cases, 1000);
  EXPECT_GT(rep.digests, 5000u);
  for (const auto& v : rep.violations) ADD_FAILURE() << v;
}

TEST(DigestExamples, SpdOneIsTheFeatureItself) {
  std::mt19937_64 rng(1);
  const auto fs = random_features(9, 5, 3, rng);
  MixOptions opts;
  opts.samples_per_digest = 1;
  for (const auto& d : build_digests(fs, opts)) {
    const int row = row_of(fs, d.members[0]);
    for (int i = 0; i < 5; ++i) EXPECT_EQ(d.mixed_feature[static_cast<std::size_t>(i)], fs.values[static_cast<std::size_t>(row * 5 + i)]);
    EXPECT_EQ(d.mixed_label[static_cast<std::size_t>(fs.labels[static_cast<std::size_t>(row)])], 1.0);
  }
}

TEST(DigestExamples, DegenerateWeightsEqualSpdOne) {
  std::mt19937_64 rng(2);
  const auto fs = random_features(2, 4, 3, rng);
  const std::vector<EncodedFeature> group{fs.feature(0), fs.feature(1)};
  const std::vector<Real> w{1.0, 0.0};
  const auto d = mix(group, w, 3);
  for (int i = 0; i < 4; ++i) EXPECT_EQ(d.mixed_feature[static_cast<std::size_t>(i)], fs.values[static_cast<std::size_t>(i)]);
  std::vector<Real> y(3, 0.0);
  y[static_cast<std::size_t>(fs.labels[0])] = 1.0;
  EXPECT_EQ(d.mixed_label, y);
}

TEST(DigestExamples, LabelMixingArithmetic) {
  FeatureSet fs;
  fs.num_classes = 4;
  fs.values = nn::Tensor({4, 4}, std::vector<Real>{1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1});
  fs.labels = {1, 1, 2, 3};
  fs.source_indices = {0, 1, 2, 3};
  const std::vector<EncodedFeature> group{fs.feature(0), fs.feature(1), fs.feature(2), fs.feature(3)};
  const std::vector<Real> w(4, 0.25);
  const auto d = mix(group, w, 4);
  EXPECT_EQ(d.mixed_label, (std::vector<Real>{0.0, 0.5, 0.25, 0.25}));
  EXPECT_EQ(d.mixed_feature, (std::vector<Real>{0.25, 0.25, 0.25, 0.25}));
}

TEST(DigestExamples, LeftoversAreDropped) {
  std::mt19937_64 rng(3);
  const auto fs = random_features(17, 3, 2, rng);
  MixOptions opts;
  opts.samples_per_digest = 4;
  const auto d = build_digests(fs, opts);
  EXPECT_EQ(d.size(), 4u);
  std::set<int> used;
  for (const auto& x : d) used.insert(x.members.begin(), x.members.end());
  EXPECT_EQ(used.size(), 16u);
}

TEST(DigestExamples, WithinClassSkipsSmallClassesWithWarning) {
  FeatureSet fs;
  fs.num_classes = 3;
  fs.values = nn::Tensor({11, 2}, 1.0);
  fs.labels = {0, 0, 0, 0, 0, 0, 0, 0, 2, 2, 2};
  fs.source_indices.resize(11);
  std::iota(fs.source_indices.begin(), fs.source_indices.end(), 0);
  MixOptions opts;
  opts.samples_per_digest = 4;
  opts.strategy = MixStrategy::kWithinClass;
  std::vector<std::string> warnings;
  const auto d = build_digests(fs, opts, &warnings);
  ASSERT_EQ(d.size(), 2u);
  for (const auto& x : d) EXPECT_EQ(x.mixed_label, (std::vector<Real>{1.0, 0.0, 0.0}));
  ASSERT_EQ(warnings.size(), 1u);
  EXPECT_NE(warnings[0].find("class 2"), std::string::npos);
}

TEST(DigestExamples, ContractViolationsThrow) {
  std::mt19937_64 rng(4);
  const auto fs = random_features(3, 2, 2, rng);
  const std::vector<EncodedFeature> dup{fs.feature(0), fs.feature(0)};
  const std::vector<Real> half{0.5, 0.5};
  EXPECT_THROW(mix(dup, half, 2), Error);
  const std::vector<EncodedFeature> pair{fs.feature(0), fs.feature(1)};
  const std::vector<Real> bad{0.6, 0.6};
  EXPECT_THROW(mix(pair, bad, 2), Error);
  const std::vector<Real> neg{1.5, -0.5};
  EXPECT_THROW(mix(pair, neg, 2), Error);
  MixOptions opts;
  opts.samples_per_digest = 4;
  EXPECT_THROW(build_digests(fs, opts), Error);
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<int> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int x, int y) { return v[static_cast<std::size_t>(x)] < v[static_cast<std::size_t>(y)]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size(); ++i) r[static_cast<std::size_t>(idx[i])] = static_cast<double>(i);
    return r;
  };
  const auto ra = ranks(a);
  const auto rb = ranks(b);
  const double n = static_cast<double>(a.size());
  double d2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d2 += (ra[i] - rb[i]) * (ra[i] - rb[i]);
  return 1.0 - 6.0 * d2 / (n * (n * n - 1.0));
}

// Positions whose values vary more across samples are disturbed more by the
// co-mixed partners.
TEST(DigestProperties, MixingDisturbanceTracksFeatureVariance) {
  std::mt19937_64 rng(5);
  const int ell = 24;
  const int s = 4800;
  FeatureSet fs;
  fs.num_classes = 2;
  fs.values = nn::Tensor({s, ell});
  for (int i = 0; i < s; ++i) {
    fs.labels.push_back(i % 2);
    fs.source_indices.push_back(i);
    for (int p = 0; p < ell; ++p) {
      std::gamma_distribution<Real> g(2.0, 0.1 + 0.2 * p);
      fs.values[static_cast<std::size_t>(i * ell + p)] = g(rng);
    }
  }
  std::vector<double> sample_var(ell), disturbance_var(ell);
  for (int p = 0; p < ell; ++p) {
    double m = 0.0, m2 = 0.0;
    for (int i = 0; i < s; ++i) {
      const double v = fs.values[static_cast<std::size_t>(i * ell + p)];
      m += v;
      m2 += v * v;
    }
    sample_var[static_cast<std::size_t>(p)] = m2 / s - (m / s) * (m / s);
  }
  MixOptions opts;
  opts.samples_per_digest = 4;
  opts.seed = 9;
  const auto digests = build_digests(fs, opts);
  ASSERT_GE(digests.size(), 1000u);
  for (int p = 0; p < ell; ++p) {
    double m = 0.0, m2 = 0.0;
    for (const auto& d : digests) {
      const double v = d.mixed_feature[static_cast<std::size_t>(p)] -
                       d.weights[0] * fs.values[static_cast<std::size_t>(d.members[0] * ell + p)];
      m += v;
      m2 += v * v;
    }
    const double n = static_cast<double>(digests.size());
    disturbance_var[static_cast<std::size_t>(p)] = m2 / n - (m / n) * (m / n);
  }
  EXPECT_GT(spearman(sample_var, disturbance_var), 0.9);
}

TEST(Laplace, InfiniteEpsilonIsExact) {
  std::mt19937_64 rng(6);
  const auto fs = random_features(10, 6, 3, rng);
  const auto d = laplace_digests(fs, std::numeric_limits<Real>::infinity(), TauPolicy::kMaxValue, 1);
  ASSERT_EQ(d.size(), 10u);
  for (int r = 0; r < 10; ++r) {
    for (int i = 0; i < 6; ++i) {
      EXPECT_EQ(d[static_cast<std::size_t>(r)].mixed_feature[static_cast<std::size_t>(i)], fs.values[static_cast<std::size_t>(r * 6 + i)]);
    }
    EXPECT_EQ(d[static_cast<std::size_t>(r)].mixed_label[static_cast<std::size_t>(fs.labels[static_cast<std::size_t>(r)])], 1.0);
  }
}

TEST(Laplace, EmpiricalStdMatchesClosedForm) {
  util::Rng rng(7);
  for (Real scale : {0.5, 0.05}) {
    const int draws = 100000;
    double m = 0.0, m2 = 0.0;
    for (int i = 0; i < draws; ++i) {
      const double x = laplace_sample(scale, rng);
      m += x;
      m2 += x * x;
    }
    const double sd = std::sqrt(m2 / draws - (m / draws) * (m / draws));
    EXPECT_NEAR(sd / (std::sqrt(2.0) * scale), 1.0, 0.02);
  }
}

TEST(Laplace, NoiseScaleRatioFollowsEpsilon) {
  // Large offsets keep the clamp at zero out of play.
  FeatureSet fs;
  fs.num_classes = 2;
  const int s = 20000;
  fs.values = nn::Tensor({s, 1}, 100.0);
  fs.labels.assign(s, 0);
  fs.source_indices.resize(s);
  std::iota(fs.source_indices.begin(), fs.source_indices.end(), 0);
  auto noise_sd = [&](Real eps) {
    const auto d = laplace_digests(fs, eps, TauPolicy::kMaxValue, 3);
    double m = 0.0, m2 = 0.0;
    for (const auto& x : d) {
      const double v = x.mixed_feature[0] - 100.0;
      m += v;
      m2 += v * v;
    }
    return std::sqrt(m2 / s - (m / s) * (m / s));
  };
  EXPECT_NEAR(noise_sd(10.0) / noise_sd(100.0), 10.0, 0.4);
  EXPECT_NEAR(noise_sd(100.0), std::sqrt(2.0) * 100.0 / 100.0, 0.03);
}

TEST(Laplace, OutputsAreClampedNonNegative) {
  std::mt19937_64 rng(8);
  const auto fs = random_features(50, 8, 3, rng);
  for (const auto& d : laplace_digests(fs, 0.5, TauPolicy::kMaxValue, 2)) {
    for (Real v : d.mixed_feature) EXPECT_GE(v, 0.0);
  }
  EXPECT_THROW(laplace_digests(fs, 0.0, TauPolicy::kMaxValue, 2), Error);
}

}  // namespace
}  // namespace feddig
