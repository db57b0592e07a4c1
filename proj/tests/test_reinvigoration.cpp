#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "chpf/candidate.hpp"
#include "chpf/errors.hpp"
#include "chpf/filter.hpp"
#include "chpf/strategy.hpp"

using namespace chpf;

namespace {

std::vector<double> random_vec(RandomStream& r, std::size_t n, double hi = 1.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = r.uniform(0.0, hi);
  return v;
}

class ConstModel final : public ObservationModel<PlanarState, int> {
 public:
  [[nodiscard]] double likelihood(const PlanarState&, const int&) const override { return 0.5; }
  [[nodiscard]] double counter(const PlanarState&, const int&) const override { return 0.5; }
};

class OffsetSampler final : public StateSampler<PlanarState, int> {
 public:
  explicit OffsetSampler(double x) : x_(x) {}
  [[nodiscard]] PlanarState sample(const int&, RandomStream& rng) const override {
    return {x_, rng.uniform(), 0.0};
  }

 private:
  double x_;
};

}  // namespace

TEST_CASE("decide_chpf examples") {
  const std::vector<double> ones{1, 1};
  const std::vector<double> zeros{0, 0};
  CHECK(decide_chpf(ones, zeros).alpha == 0.0);
  CHECK(decide_chpf(zeros, ones).alpha == 1.0);
  const std::vector<double> l{0.2, 0.3};
  const std::vector<double> c{0.1, 0.4};
  const auto d = decide_chpf(l, c);
  CHECK(std::abs(d.alpha - 0.5) < 1e-12);
  CHECK(d.n_reinvigorate == 1);
  CHECK(d.sum_likelihood == doctest::Approx(0.5));
  CHECK(d.sum_counter == doctest::Approx(0.5));
  CHECK(decide_chpf(zeros, zeros).alpha == 1.0);
}

TEST_CASE("decide_chpf rejects bad input") {
  const std::vector<double> ok{0.5};
  const std::vector<double> neg{-0.1};
  const std::vector<double> nan{std::nan("")};
  CHECK_THROWS_AS(decide_chpf(neg, ok), std::invalid_argument);
  CHECK_THROWS_AS(decide_chpf(ok, nan), std::invalid_argument);
}

TEST_CASE("decide_chpf properties over random inputs") {
  RandomStream r(1, StreamId::Initialization);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + r.below(64);
    auto l = random_vec(r, n);
    auto c = random_vec(r, n);
    const double a = decide_chpf(l, c).alpha;
    REQUIRE(a >= 0.0);
    REQUIRE(a <= 1.0);

    const double k = std::exp(r.uniform(-5.0, 5.0));
    std::vector<double> lk(l), ck(c);
    for (auto& x : lk) x *= k;
    for (auto& x : ck) x *= k;
    REQUIRE(std::abs(decide_chpf(lk, ck).alpha - a) < 1e-12);

    // More counter-evidence never lowers alpha; more support never raises it.
    std::vector<double> c_up(c), l_up(l);
    c_up[r.below(n)] += r.uniform();
    l_up[r.below(n)] += r.uniform();
    REQUIRE(decide_chpf(l, c_up).alpha >= a - 1e-12);
    REQUIRE(decide_chpf(l_up, c).alpha <= a + 1e-12);
  }
}

TEST_CASE("decide_srl examples") {
  const std::vector<double> l{0.2, 0.3};
  CHECK(std::abs(decide_srl(l, 0.5).alpha - 0.5) < 1e-12);
  const std::vector<double> at_beta(4, 0.3);
  CHECK(decide_srl(at_beta, 0.3).alpha == 0.0);
  const std::vector<double> zero(4, 0.0);
  CHECK(decide_srl(zero, 0.3).alpha == 1.0);
  const std::vector<double> above(3, 2.0);
  CHECK(decide_srl(above, 0.5).alpha == 0.0);
  CHECK_THROWS_AS(decide_srl(l, 0.0), ConfigError);
  CHECK_THROWS_AS(decide_srl(l, -1.0), ConfigError);
}

TEST_CASE("SRL equals CH-PF with counter = beta - L") {
  RandomStream r(2, StreamId::Initialization);
  for (int trial = 0; trial < 1000; ++trial) {
    const double beta = 1.0 - r.uniform();  // (0, 1]
    const std::size_t n = 1 + r.below(64);
    auto l = random_vec(r, n, beta);
    std::vector<double> c(n);
    for (std::size_t i = 0; i < n; ++i) c[i] = beta - l[i];
    REQUIRE(std::abs(decide_srl(l, beta).alpha - decide_chpf(l, c).alpha) < 1e-12);
  }
}

TEST_CASE("Aug-MCL") {
  SUBCASE("steady mean weight gives alpha 0") {
    AugMclState s;
    StepDecision d;
    for (int i = 0; i < 500; ++i) d = decide_augmcl(0.3, s, 0.05, 0.5, 10);
    CHECK(s.w_fast == doctest::Approx(s.w_slow));
    CHECK(d.alpha == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(d.n_reinvigorate == 0);
  }
  SUBCASE("w_slow 0.4, w_fast 0.1 gives 0.75") {
    AugMclState s{0.4, 0.1};
    // A zero-rate update leaves the averages where they are.
    const auto d = decide_augmcl(0.0, s, 0.0, 0.0, 100);
    CHECK(d.alpha == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(d.n_reinvigorate == 75);
  }
  SUBCASE("improving weights never trigger resets") {
    AugMclState s;
    for (int i = 0; i < 50; ++i) decide_augmcl(0.1, s, 0.05, 0.5, 10);
    const auto d = decide_augmcl(0.9, s, 0.05, 0.5, 10);
    CHECK(s.w_fast > s.w_slow);
    CHECK(d.alpha == 0.0);
  }
  SUBCASE("strategy wrapper under constant weights") {
    StrategyConfig cfg;
    cfg.variant = StrategyVariant::AugMCL;
    Strategy st(cfg);
    const std::vector<double> l(20, 0.25);
    const std::vector<double> c(20, 0.0);
    for (int k = 0; k < 100; ++k) CHECK(st.decide(k, l, c, false).alpha == 0.0);
  }
}

TEST_CASE("annealing") {
  const std::vector<double> sched{1.0, 0.5, 0.0};
  CHECK(annealing_exponent(0, sched) == 1.0);
  CHECK(annealing_exponent(4, sched) == 0.5);
  CHECK(decide_annealing(1, sched).alpha == 0.0);

  auto make = [](std::vector<double> w) {
    ParticleSet<PlanarState> s;
    for (const double x : w) s.particles.push_back({PlanarState{}, x, x, 0.0, Origin::Propagated});
    return s;
  };
  SUBCASE("gamma 1 leaves weights alone") {
    auto s = make({0.81, 0.09});
    apply_weight_exponent(s, 1.0);
    CHECK(s.particles[0].weight == 0.81);
  }
  SUBCASE("gamma 0 flattens") {
    auto s = make({0.81, 0.09, 0.3});
    apply_weight_exponent(s, 0.0);
    REQUIRE(normalize(s));
    for (const auto& p : s.particles) CHECK(p.weight == doctest::Approx(1.0 / 3.0));
  }
  SUBCASE("gamma 0.5 on {0.81, 0.09}") {
    auto s = make({0.81, 0.09});
    apply_weight_exponent(s, 0.5);
    REQUIRE(normalize(s));
    CHECK(s.particles[0].weight == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(s.particles[1].weight == doctest::Approx(0.25).epsilon(1e-12));
  }
  SUBCASE("argsort is preserved for positive exponents") {
    RandomStream r(4, StreamId::Initialization);
    for (int trial = 0; trial < 200; ++trial) {
      auto w = random_vec(r, 30);
      auto s = make(w);
      apply_weight_exponent(s, r.uniform(0.01, 3.0));
      REQUIRE(normalize(s));
      std::vector<std::size_t> a(w.size()), b(w.size());
      std::iota(a.begin(), a.end(), 0);
      std::iota(b.begin(), b.end(), 0);
      std::stable_sort(a.begin(), a.end(), [&](auto i, auto j) { return w[i] < w[j]; });
      std::stable_sort(b.begin(), b.end(),
                       [&](auto i, auto j) { return s.particles[i].weight < s.particles[j].weight; });
      REQUIRE(a == b);
    }
  }
}

TEST_CASE("external proposal partition") {
  const auto half = decide_external(0.5, 50, true);
  CHECK(half.n_reinvigorate == 25);
  CHECK(half.source == DrawSource::Proposal);
  CHECK(decide_external(0.5, 50, false).n_reinvigorate == 0);
  CHECK(decide_external(0.0, 50, true).n_reinvigorate == 0);
  CHECK(decide_external(1.0, 50, true).n_reinvigorate == 50);
}

TEST_CASE("proposal draws carry the proposal origin") {
  StrategyConfig cfg;
  cfg.variant = StrategyVariant::ExternalProposal;
  cfg.proposal_fraction = 1.0;
  Strategy st(cfg);
  ConstModel model;
  OffsetSampler cand(-1.0);
  OffsetSampler prop(7.0);
  FilterConfig fc;
  FilterStreams streams(3);
  auto set = ParticleSet<PlanarState>::uniform(std::vector<PlanarState>(10));
  auto r = step(set, ControlInput<PlanarState>{}, 0, st, model, cand, &prop, fc, streams, nullptr);
  for (const auto& p : r.set.particles) {
    CHECK(p.origin == Origin::Proposal);
    CHECK(p.state.x == 7.0);
  }
  // Without a detector estimate nothing is replaced.
  auto r2 = step(set, ControlInput<PlanarState>{}, 0, st, model, cand, nullptr, fc, streams, nullptr);
  for (const auto& p : r2.set.particles) CHECK(p.origin == Origin::Propagated);
}

TEST_CASE("proposal fraction 0 behaves like Fixed(0)") {
  auto run = [](StrategyConfig cfg) {
    Strategy st(cfg);
    ConstModel model;
    OffsetSampler cand(-1.0);
    OffsetSampler prop(7.0);
    FilterConfig fc;
    fc.motion.sigma_x = fc.motion.sigma_y = fc.motion.sigma_theta = 0.1;
    FilterStreams streams(5);
    auto set = ParticleSet<PlanarState>::uniform(std::vector<PlanarState>(12));
    for (int k = 0; k < 4; ++k) {
      set = step(std::move(set), ControlInput<PlanarState>{}, 0, st, model, cand, &prop, fc, streams,
                 nullptr)
                .set;
    }
    std::vector<PlanarState> out;
    for (const auto& p : set.particles) out.push_back(p.state);
    return out;
  };
  StrategyConfig e2e;
  e2e.variant = StrategyVariant::ExternalProposal;
  e2e.proposal_fraction = 0.0;
  StrategyConfig fixed;
  fixed.variant = StrategyVariant::Fixed;
  fixed.fixed_alpha = 0.0;
  CHECK(run(e2e) == run(fixed));
}

TEST_CASE("strategy config validation and names") {
  CHECK(parse_strategy_variant("chpf") == StrategyVariant::CHPF);
  CHECK(parse_strategy_variant("mcl_e2e") == StrategyVariant::ExternalProposal);
  CHECK_FALSE(parse_strategy_variant("nope").has_value());
  StrategyConfig bad;
  bad.variant = StrategyVariant::Fixed;
  bad.fixed_alpha = 1.5;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  StrategyConfig srl;
  srl.variant = StrategyVariant::SRL;
  srl.beta = 0.0;
  CHECK_THROWS_AS(srl.validate(), ConfigError);
  StrategyConfig named;
  named.name = "mine";
  CHECK(named.label() == "mine");
  CHECK(StrategyConfig{}.label() == "chpf");
}

TEST_CASE("candidate sampling") {
  RandomStream r(8, StreamId::CandidateSampling);
  SUBCASE("a point box pins the translation") {
    CandidateDistribution cd;
    cd.region = Box3::centered(Eigen::Vector3d(0.1, 0.2, 0.7), Eigen::Vector3d::Zero());
    for (int i = 0; i < 20; ++i) {
      CHECK(sample_candidate(cd, nullptr, r).translation == Eigen::Vector3d(0.1, 0.2, 0.7));
    }
  }
  SUBCASE("uniform box moments") {
    CandidateDistribution cd;
    cd.region = {Eigen::Vector3d(0, -1, 2), Eigen::Vector3d(1, 1, 3)};
    const int n = 30000;
    Eigen::Vector3d s = Eigen::Vector3d::Zero();
    Eigen::Vector3d s2 = Eigen::Vector3d::Zero();
    for (int i = 0; i < n; ++i) {
      const Eigen::Vector3d t = sample_candidate(cd, nullptr, r).translation;
      REQUIRE(cd.region.contains(t));
      s += t;
      s2 += t.cwiseProduct(t);
    }
    const Eigen::Vector3d mean = s / n;
    const Eigen::Vector3d var = s2 / n - mean.cwiseProduct(mean);
    CHECK(mean.x() == doctest::Approx(0.5).epsilon(0.02));
    CHECK(std::abs(mean.y()) < 0.02);
    CHECK(mean.z() == doctest::Approx(2.5).epsilon(0.01));
    CHECK(var.x() == doctest::Approx(1.0 / 12).epsilon(0.05));
    CHECK(var.y() == doctest::Approx(4.0 / 12).epsilon(0.05));
  }
  SUBCASE("observed-depth mode with no usable pixels falls back to the box") {
    CandidateDistribution cd;
    cd.depth_mode = DepthMode::FromObservedDepth;
    cd.region = Box3::centered(Eigen::Vector3d(0, 0, 0.7), Eigen::Vector3d::Constant(0.02));
    DepthImage empty(8, 8, PinholeCamera{10, 10, 3.5, 3.5});
    for (auto& d : empty.depths) d = kNoReturn;
    for (int i = 0; i < 50; ++i) CHECK(cd.region.contains(sample_candidate(cd, &empty, r).translation));
  }
  SUBCASE("observed-depth mode lands on the observed surface") {
    CandidateDistribution cd;
    cd.depth_mode = DepthMode::FromObservedDepth;
    cd.depth_jitter = 0.0;
    cd.region = Box3::centered(Eigen::Vector3d(0, 0, 0.7), Eigen::Vector3d::Constant(0.1));
    DepthImage flat(16, 16, PinholeCamera{20, 20, 7.5, 7.5});
    for (auto& d : flat.depths) d = 0.65;
    for (int i = 0; i < 50; ++i) {
      CHECK(sample_candidate(cd, &flat, r).translation.z() == doctest::Approx(0.65));
    }
  }
  SUBCASE("planar candidates cover the rectangle") {
    const PlanarRegion reg{1.0, 2.0, -1.0, 0.0};
    for (int i = 0; i < 100; ++i) {
      const PlanarState s = sample_planar_candidate(reg, r);
      CHECK(s.x >= 1.0);
      CHECK(s.x <= 2.0);
      CHECK(s.y >= -1.0);
      CHECK(s.y <= 0.0);
    }
  }
  SUBCASE("inverted boxes are rejected") {
    Box3 bad{Eigen::Vector3d(1, 0, 0), Eigen::Vector3d(0, 1, 1)};
    CHECK_THROWS(bad.validate());
  }
}
