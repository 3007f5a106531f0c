#include <doctest.h>

#include <numeric>
#include <random>

#include "neovitals/evaluation.hpp"
#include "oracles.hpp"

using namespace neovitals;

TEST_CASE("align") {
  SUBCASE("identical series") {
    const auto s = make_series({1, 2, 3, 4, 5}, 1.0, Unit::bpm);
    const auto p = align(s, s);
    CHECK(p.size() == 5);
    CHECK(p.dropped == 0);
    CHECK(p.candidate == p.reference);
  }
  SUBCASE("240 Hz against 1 Hz matches brute-force block means") {
    std::mt19937 rng(1);
    std::normal_distribution<double> g(100.0, 5.0);
    std::vector<double> hi(240 * 20);
    for (auto& v : hi) v = g(rng);
    const auto cand = make_series(hi, 240.0, Unit::bpm);
    std::vector<double> lo(20);
    for (auto& v : lo) v = g(rng);
    const auto ref = make_series(lo, 1.0, Unit::bpm);
    const auto p = align(cand, ref);
    REQUIRE(p.size() == 20);
    for (std::size_t j = 0; j < 20; ++j) {
      double sum = 0.0;
      for (std::size_t i = 240 * j; i < 240 * (j + 1); ++i) sum += hi[i];
      CHECK(p.candidate[j] == doctest::Approx(sum / 240.0).epsilon(1e-12));
      CHECK(p.reference[j] == lo[j]);
      CHECK(p.time[j] == doctest::Approx(static_cast<double>(j)));
    }
    // operand order only swaps the roles
    const auto q = align(ref, cand);
    CHECK(q.candidate == p.reference);
  }
  SUBCASE("missing samples drop pairs") {
    auto a = make_series({1, 2, 3, 4}, 1.0, Unit::bpm);
    auto b = make_series({1, 2, 3, 4}, 1.0, Unit::bpm);
    a.set_missing(1);
    b.set_missing(3);
    const auto p = align(a, b);
    CHECK(p.size() == 2);
    CHECK(p.dropped == 2);
  }
  SUBCASE("partial overlap and offsets") {
    const auto a = make_series({1, 2, 3, 4, 5, 6}, 1.0, Unit::bpm, 10.0);
    const auto b = make_series({7, 8, 9}, 1.0, Unit::bpm, 13.0);
    const auto p = align(a, b);
    CHECK(p.size() == 3);
    CHECK(p.candidate == std::vector<double>{4, 5, 6});
  }
  SUBCASE("disjoint spans") {
    const auto a = make_series({1, 2, 3}, 1.0, Unit::bpm, 0.0);
    const auto b = make_series({1, 2, 3}, 1.0, Unit::bpm, 100.0);
    CHECK_THROWS_WITH_AS(align(a, b), "no overlap", ContractError);
  }
}

TEST_CASE("agreement examples") {
  const std::vector<double> x{1, 2}, y{2, 4};
  const auto r = agreement(x, y);
  CHECK(r.mae == 1.5);
  CHECK(r.mse == 2.5);
  CHECK(r.bias == -1.5);
  CHECK(r.n == 2);

  const std::vector<double> v{90, 100, 110, 120};
  const auto th = default_cp_thresholds(Vital::hr);
  const auto same = agreement(v, v, th);
  CHECK(same.mae == 0.0);
  CHECK(same.bias == 0.0);
  for (const auto& [t, p] : same.cp) CHECK(p == 1.0);

  CHECK_THROWS_AS(agreement(std::vector<double>{1}, std::vector<double>{1}), ContractError);
  CHECK_THROWS_AS(agreement(std::vector<double>{1, 2}, std::vector<double>{1}), ContractError);
}

TEST_CASE("cp thresholds") {
  CHECK(default_cp_thresholds(Vital::rr) == std::vector<CpThreshold>{{10, true}, {20, true}});
  CHECK(default_cp_thresholds(Vital::tv) == std::vector<CpThreshold>{{10, true}, {20, true}});
  CHECK(default_cp_thresholds(Vital::hr) == std::vector<CpThreshold>{{5, true}, {10, true}});
  CHECK(default_cp_thresholds(Vital::spo2) == std::vector<CpThreshold>{{3, false}, {6, false}});
  CHECK(CpThreshold{10, true}.label() == "+-10%");
  CHECK(vital_from_string("spo2") == Vital::spo2);
  CHECK_THROWS_AS(vital_from_string("bp"), ContractError);

  // percent is relative to the reference; the boundary counts as covered
  const std::vector<double> cand{110, 111, 95}, ref{100, 100, 100};
  const std::vector<CpThreshold> th{{10, true}, {5, false}};
  const auto r = agreement(cand, ref, th);
  CHECK(r.cp[0].second == doctest::Approx(2.0 / 3.0));
  CHECK(r.cp[1].second == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("agreement against the naive oracle over 100 seeds") {
  for (unsigned seed = 0; seed < 100; ++seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(20.0, 200.0);
    std::normal_distribution<double> g(0.0, 8.0);
    std::uniform_int_distribution<int> len(2, 300);
    const int n = len(rng);
    std::vector<double> x(n), y(n);
    for (int i = 0; i < n; ++i) {
      y[i] = u(rng);
      x[i] = y[i] + g(rng);
    }
    std::vector<CpThreshold> th;
    for (double w = 1.0; w <= 30.0; w += 1.0) th.push_back({w, seed % 2 == 0});
    const auto r = agreement(x, y, th);
    const auto o = oracle::agreement(x, y);
    CHECK(std::abs(r.mae - o.mae) <= 1e-12 * std::max(1.0, o.mae));
    CHECK(std::abs(r.mse - o.mse) <= 1e-12 * std::max(1.0, o.mse));
    CHECK(std::abs(r.bias - o.bias) <= 1e-12 * std::max(1.0, std::abs(o.bias)));
    CHECK(std::abs(r.sd_diff - o.sd) <= 1e-12 * std::max(1.0, o.sd));
    CHECK(std::abs(r.loa_low - o.loa_low) <= 1e-12 * std::max(1.0, std::abs(o.loa_low)));
    CHECK(std::abs(r.loa_high - o.loa_high) <= 1e-12 * std::max(1.0, std::abs(o.loa_high)));
    // MAE^2 <= MSE
    CHECK(r.mae * r.mae <= r.mse * (1.0 + 1e-12));
    // CP monotone in width and within [0, 1]
    for (std::size_t k = 0; k < r.cp.size(); ++k) {
      CHECK(r.cp[k].second >= 0.0);
      CHECK(r.cp[k].second <= 1.0);
      if (k > 0) CHECK(r.cp[k].second >= r.cp[k - 1].second);
    }
    // swap symmetry
    const auto s = agreement(y, x, th);
    CHECK(s.mse == doctest::Approx(r.mse).epsilon(1e-12));
    CHECK(s.bias == doctest::Approx(-r.bias).epsilon(1e-12));
    // Bland-Altman point cloud
    REQUIRE(r.bland_altman.size() == static_cast<std::size_t>(n));
    CHECK(r.bland_altman[0].mean == doctest::Approx((x[0] + y[0]) / 2.0));
    CHECK(r.bland_altman[0].diff == doctest::Approx(x[0] - y[0]));
  }
}

TEST_CASE("mann_whitney_u") {
  SUBCASE("complete separation 3 vs 3") {
    const std::vector<double> a{1, 2, 3}, b{4, 5, 6};
    const auto r = mann_whitney_u(a, b);
    CHECK(r.exact);
    CHECK(r.u == 0.0);
    CHECK(r.p == doctest::Approx(0.1).epsilon(1e-12));
    const auto s = mann_whitney_u(b, a);
    CHECK(s.u == 9.0);
    CHECK(s.p == doctest::Approx(r.p).epsilon(1e-12));
  }
  SUBCASE("identical single elements") {
    const std::vector<double> a{5}, b{5};
    CHECK(mann_whitney_u(a, b).p == 1.0);
  }
  SUBCASE("exact branch against enumeration, with ties") {
    for (unsigned seed = 0; seed < 100; ++seed) {
      std::mt19937 rng(seed);
      std::uniform_int_distribution<int> d(0, 6), len(1, 6);
      std::vector<double> a(len(rng)), b(len(rng));
      for (auto& v : a) v = d(rng);
      for (auto& v : b) v = d(rng);
      const auto r = mann_whitney_u(a, b, MannWhitneyMethod::exact);
      CHECK(r.p == doctest::Approx(oracle::mann_whitney_enumerate(a, b)).epsilon(1e-9));
      CHECK(r.p > 0.0);
      CHECK(r.p <= 1.0);
      const auto s = mann_whitney_u(b, a, MannWhitneyMethod::exact);
      CHECK(s.u == doctest::Approx(static_cast<double>(a.size() * b.size()) - r.u));
      CHECK(s.p == doctest::Approx(r.p).epsilon(1e-9));
    }
  }
  SUBCASE("exact and approximate agree at 15 vs 15") {
    for (unsigned seed = 0; seed < 100; ++seed) {
      std::mt19937 rng(seed);
      std::normal_distribution<double> g;
      std::vector<double> a(15), b(15);
      for (auto& v : a) v = g(rng);
      for (auto& v : b) v = g(rng) + 0.5;
      const auto e = mann_whitney_u(a, b, MannWhitneyMethod::exact);
      const auto n = mann_whitney_u(a, b, MannWhitneyMethod::asymptotic);
      CHECK(e.u == n.u);
      CHECK(std::abs(e.p - n.p) <= 0.02);
      CHECK(n.p <= 1.0);
    }
  }
  SUBCASE("automatic branch selection") {
    std::vector<double> a(20), b(21);
    std::iota(a.begin(), a.end(), 0.0);
    std::iota(b.begin(), b.end(), 10.0);
    CHECK(mann_whitney_u(a, b).exact == false);
    CHECK(mann_whitney_u(std::vector<double>(20, 1.0), std::vector<double>(20, 2.0)).exact);
  }
  CHECK_THROWS_AS(mann_whitney_u(std::vector<double>{}, std::vector<double>{1}), ContractError);
}
