#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "support.hpp"
#include "symprobe/analysis.hpp"

using namespace symprobe;
using symprobe::testing::normal_matrix;

namespace {

LatentStats random_stats(Eigen::Index n, Eigen::Index k, Rng& rng) {
  LatentStats s;
  s.z_mean = normal_matrix(n, k, rng);
  for (Eigen::Index j = 0; j < k; ++j) s.z_mean.col(j) *= rng.uniform(0.01, 5.0);
  s.z_sigma.resize(n, k);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < k; ++j) s.z_sigma(i, j) = rng.uniform(0.05, 1.5);
  return s;
}

RelevanceReport report_of(std::vector<double> r) {
  RelevanceReport rep;
  rep.relevance = std::move(r);
  rep.order.resize(rep.relevance.size());
  std::iota(rep.order.begin(), rep.order.end(), std::size_t{0});
  std::stable_sort(rep.order.begin(), rep.order.end(),
                   [&](std::size_t a, std::size_t b) { return rep.relevance[a] > rep.relevance[b]; });
  const auto s = rep.sorted();
  rep.effective_dim = effective_dim(s);
  rep.gap_ratio = gap_ratio(s);
  return rep;
}

Dataset two_column(const Matrix& x) {
  Dataset d;
  d.features = x;
  d.names = {"x1", "x2"};
  return d;
}

}  // namespace

TEST_CASE("relevance examples") {
  LatentStats s;
  s.z_mean = Matrix::Zero(4, 2);
  s.z_mean.col(0).setConstant(3.0);
  // Population std of {-2, 2, -2, 2} is 2; mean sigma 0.5.
  s.z_mean.col(1) << -2, 2, -2, 2;
  s.z_sigma = Matrix::Constant(4, 2, 0.5);
  const auto r = relevance(s);
  CHECK(r.relevance[0] == 0.0);
  CHECK(r.relevance[1] == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(r.order == std::vector<std::size_t>{1, 0});

  LatentStats zero{Matrix::Zero(10, 3), Matrix::Ones(10, 3)};
  const auto z = relevance(zero);
  for (double v : z.relevance) CHECK(v == 0.0);

  CHECK_THROWS(relevance(LatentStats{Matrix::Zero(1, 2), Matrix::Ones(1, 2)}));
}

TEST_CASE("effective_dim examples") {
  const std::vector<double> a{5.0, 4.8, 0.1, 0.1}, b{5.0, 0.2, 0.1, 0.1}, c{1.0, 0.9, 0.8, 0.7};
  CHECK(effective_dim(a) == 2);
  CHECK(gap_ratio(a) == doctest::Approx(48.0));
  CHECK(effective_dim(b) == 1);
  CHECK(gap_ratio(b) == doctest::Approx(25.0));
  CHECK(effective_dim(c) == 4);
  const std::vector<double> zeros_tail{3.0, 0.0, 0.0};
  CHECK(effective_dim(zeros_tail) == 1);
  const std::vector<double> one{1.0};
  CHECK_THROWS(effective_dim(one));
}

TEST_CASE("aggregate examples") {
  const auto single = report_of({0.1, 4.0, 0.0, 0.0});
  const std::vector<RelevanceReport> one{single};
  const auto agg1 = aggregate_runs(one);
  CHECK(agg1.relevance == std::vector<double>{4.0, 0.1, 0.0, 0.0});
  // 0.1 over the 1e-12 floor outranks 4 / 0.1.
  CHECK(agg1.effective_dim == 2);
  CHECK(agg1.runs == 1);

  const std::vector<RelevanceReport> two{report_of({4, 0.1, 0, 0}), report_of({0.1, 4, 0, 0})};
  const auto agg = aggregate_runs(two);
  CHECK(agg.relevance == std::vector<double>{4.0, 0.1, 0.0, 0.0});
  CHECK(agg.runs == 2);

  const std::vector<RelevanceReport> mixed{report_of({1, 2}), report_of({1, 2, 3})};
  CHECK_THROWS_AS(aggregate_runs(mixed), ShapeError);
  CHECK_THROWS(aggregate_runs(std::span<const RelevanceReport>{}));
}

TEST_CASE("property: aggregate_runs is permutation invariant") {
  Rng rng(3);
  for (int t = 0; t < 50; ++t) {
    const auto k = 2 + static_cast<std::size_t>(rng.below(6));
    std::vector<RelevanceReport> runs;
    for (std::uint64_t r = 0, n = 1 + rng.below(8); r < n; ++r) {
      std::vector<double> v(k);
      for (auto& x : v) x = rng.uniform(0.0, 5.0);
      runs.push_back(report_of(v));
    }
    const auto a = aggregate_runs(runs);
    auto shuffled = runs;
    shuffle(shuffled.begin(), shuffled.end(), rng);
    const auto b = aggregate_runs(shuffled);
    REQUIRE(a.relevance.size() == b.relevance.size());
    for (std::size_t i = 0; i < k; ++i)
      CHECK(a.relevance[i] == doctest::Approx(b.relevance[i]).epsilon(1e-14));
    CHECK(a.effective_dim == b.effective_dim);
  }
}

TEST_CASE("property: relevance is invariant under row permutation and latent sign flips") {
  Rng rng(4);
  for (int t = 0; t < 50; ++t) {
    const auto n = 5 + static_cast<Eigen::Index>(rng.below(50));
    const auto k = 1 + static_cast<Eigen::Index>(rng.below(6));
    const auto s = random_stats(n, k, rng);
    const auto base = relevance(s);

    std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), Eigen::Index{0});
    shuffle(perm.begin(), perm.end(), rng);
    LatentStats p = s;
    for (Eigen::Index i = 0; i < n; ++i) {
      p.z_mean.row(i) = s.z_mean.row(perm[static_cast<std::size_t>(i)]);
      p.z_sigma.row(i) = s.z_sigma.row(perm[static_cast<std::size_t>(i)]);
    }
    const auto permuted = relevance(p);

    LatentStats f = s;
    const auto j = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(k)));
    f.z_mean.col(j) *= -1.0;
    const auto flipped = relevance(f);
    for (Eigen::Index i = 0; i < k; ++i) {
      const auto u = static_cast<std::size_t>(i);
      CHECK(permuted.relevance[u] == doctest::Approx(base.relevance[u]).epsilon(1e-12));
      CHECK(flipped.relevance[u] == doctest::Approx(base.relevance[u]).epsilon(1e-12));
    }
  }
}

TEST_CASE("pearson and correlation examples") {
  Rng rng(5);
  const auto s = random_stats(200, 3, rng);
  Dataset d;
  d.features.resize(200, 2);
  d.features.col(0) = s.z_mean.col(1);
  d.features.col(1) = -s.z_mean.col(1);
  d.names = {"a", "b"};
  const auto probes = default_probes(d);
  REQUIRE(probes.size() == 2);
  const auto c = latent_feature_correlations(s, d, probes);
  CHECK(c.r(1, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(c.r(1, 1) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(c.latent_labels == std::vector<std::string>{"z1", "z2", "z3"});

  const Vector a = normal_matrix(50, 1, rng).col(0);
  CHECK(pearson(a, Vector::Constant(50, 2.0)) == 0.0);
  CHECK(pearson(a, 3.0 * a.array() + 1.0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("collision probes flag vanishing sums") {
  Rng rng(6);
  const auto d = gen_ee_dimuon(500, 80.0, rng);
  const auto probes = default_probes(d);
  // Six raw columns, three differences, three sums.
  REQUIRE(probes.size() == 12);
  const auto s = random_stats(500, 4, rng);
  const auto c = latent_feature_correlations(s, d, probes);
  for (std::size_t p = 0; p < probes.size(); ++p) {
    const bool is_sum = probes[p].label.find('+') != std::string::npos;
    CHECK(c.zero_variance[p] == is_sum);
    if (is_sum) CHECK(c.r.col(static_cast<Eigen::Index>(p)).isZero());
  }
  CHECK(std::find(c.probe_labels.begin(), c.probe_labels.end(), "px_mu-px_mubar") !=
        c.probe_labels.end());
}

TEST_CASE("property: correlations are invariant under affine rescaling of raw features") {
  Rng rng(7);
  for (int t = 0; t < 20; ++t) {
    const auto raw = two_column(normal_matrix(100, 2, rng));
    const auto s = random_stats(100, 3, rng);
    Dataset scaled = raw;
    for (Eigen::Index j = 0; j < 2; ++j)
      scaled.features.col(j) = scaled.features.col(j).array() * rng.uniform(0.1, 100.0) +
                               rng.uniform(-50.0, 50.0);
    const auto a = standardize(raw).first;
    const auto b = standardize(scaled).first;
    const auto pa = default_probes(a);
    const auto ca = latent_feature_correlations(s, a, pa);
    const auto cb = latent_feature_correlations(s, b, default_probes(b));
    CHECK((ca.r - cb.r).cwiseAbs().maxCoeff() < 1e-10);

    LatentStats flipped = s;
    flipped.z_mean.col(0) *= -1.0;
    const auto cf = latent_feature_correlations(flipped, a, pa);
    CHECK((ca.r.cwiseAbs() - cf.r.cwiseAbs()).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("scatter export round trip") {
  Rng rng(8);
  const auto d = gen_circle(300, 10.0, rng);
  const auto s = random_stats(300, 4, rng);
  const auto t = scatter_export(s, d, 2, 1);
  CHECK(t.feature == d.features.col(1));
  CHECK(t.z_mean == s.z_mean.col(2));
  std::stringstream io;
  csv_write(t.to_dataset(), io);
  const auto back = ScatterTable::from_dataset(csv_read(io));
  CHECK(back.feature == t.feature);
  CHECK(back.z_mean == t.z_mean);
  CHECK(back.feature_name == t.feature_name);
  CHECK(back.latent_name == t.latent_name);
  CHECK_THROWS_AS(scatter_export(s, d, 4, 0), ShapeError);
  CHECK_THROWS_AS(scatter_export(s, d, 0, 2), ShapeError);
  CHECK_THROWS_AS(scatter_export(s, d, -1, 0), ShapeError);
}
