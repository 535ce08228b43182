#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "doctest.h"
#include "lagflow/error.hpp"
#include "lagflow/random.hpp"
#include "lagflow/transport.hpp"

using namespace lagflow;

namespace {

TorusPoint random_point(RandomStream& rng, int d) {
  Vec v(d);
  for (int k = 0; k < d; ++k) v[k] = rng.uniform();
  return wrap(v);
}

DiscreteMeasure uniform_cloud(RandomStream& rng, int n, int d) {
  DiscreteMeasure m(d);
  for (int i = 0; i < n; ++i) m.add(random_point(rng, d), 1.0 / n);
  return m;
}

DiscreteMeasure weighted_cloud(RandomStream& rng, int n, int d, double mass) {
  DiscreteMeasure m(d);
  std::vector<double> w(n);
  for (double& x : w) x = rng.uniform(0.1, 1.0);
  const double s = std::accumulate(w.begin(), w.end(), 0.0);
  for (int i = 0; i < n; ++i) m.add(random_point(rng, d), w[i] / s * mass);
  return m;
}

// Uniform weights on both sides: OT is an assignment problem.
double best_assignment(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const GroundMetric& g) {
  const std::size_t n = mu.size();
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = INFINITY;
  do {
    double c = 0.0;
    for (std::size_t i = 0; i < n; ++i) c += g(mu.point(i), nu.point(perm[i]));
    best = std::min(best, c / n);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace

TEST_SUITE("transport") {
  TEST_CASE("exact solver matches permutation enumeration") {
    RandomStream rng(1);
    for (int inst = 0; inst < 60; ++inst) {
      const int n = 1 + inst % 6, d = 1 + inst % 2;
      const DiscreteMeasure mu = uniform_cloud(rng, n, d), nu = uniform_cloud(rng, n, d);
      const GroundMetric g =
          inst % 3 ? GroundMetric::euclidean() : GroundMetric::logarithmic(0.5, 0.01);
      CHECK(wasserstein_exact(mu, nu, g).cost == doctest::Approx(best_assignment(mu, nu, g)).epsilon(1e-10));
    }
  }

  TEST_CASE("two by two problems follow the vertex formula") {
    RandomStream rng(2);
    for (int inst = 0; inst < 50; ++inst) {
      const double p = rng.uniform(0.05, 0.95), q = rng.uniform(0.05, 0.95);
      const std::vector<TorusPoint> x{random_point(rng, 2), random_point(rng, 2)};
      const std::vector<TorusPoint> y{random_point(rng, 2), random_point(rng, 2)};
      const DiscreteMeasure mu(x, {p, 1 - p}), nu(y, {q, 1 - q});
      const GroundMetric g = GroundMetric::euclidean();
      const auto cost = [&](double t) {
        return t * g(x[0], y[0]) + (p - t) * g(x[0], y[1]) + (q - t) * g(x[1], y[0]) +
               (1 - p - q + t) * g(x[1], y[1]);
      };
      const double lo = std::max(0.0, p + q - 1), hi = std::min(p, q);
      CHECK(wasserstein_exact(mu, nu, g).cost ==
            doctest::Approx(std::min(cost(lo), cost(hi))).epsilon(1e-10));
    }
  }

  TEST_CASE("a single source spreads over every target") {
    RandomStream rng(3);
    const DiscreteMeasure nu = weighted_cloud(rng, 9, 2, 2.0);
    DiscreteMeasure mu(2);
    mu.add(wrap({0.3, 0.3}), 2.0);
    double expect = 0.0;
    for (std::size_t j = 0; j < nu.size(); ++j)
      expect += nu.weight(j) * periodic_distance(mu.point(0), nu.point(j));
    const ExactTransport r = wasserstein_exact(mu, nu, GroundMetric::euclidean());
    CHECK(r.cost == doctest::Approx(expect).epsilon(1e-10));
    CHECK(r.plan.size() == 9);
  }

  TEST_CASE("plans have the right marginals and the distance is a metric") {
    RandomStream rng(4);
    for (int inst = 0; inst < 20; ++inst) {
      const DiscreteMeasure a = weighted_cloud(rng, 30, 2, 1.0);
      const DiscreteMeasure b = weighted_cloud(rng, 25, 2, 1.0);
      const DiscreteMeasure c = weighted_cloud(rng, 20, 2, 1.0);
      const GroundMetric g = GroundMetric::euclidean();
      const ExactTransport ab = wasserstein_exact(a, b, g);
      std::vector<double> row(a.size(), 0.0), col(b.size(), 0.0);
      for (const PlanEntry& e : ab.plan) {
        CHECK(e.mass >= 0.0);
        row[e.i] += e.mass;
        col[e.j] += e.mass;
      }
      for (std::size_t i = 0; i < a.size(); ++i) CHECK(row[i] == doctest::Approx(a.weight(i)).epsilon(1e-12));
      for (std::size_t j = 0; j < b.size(); ++j) CHECK(col[j] == doctest::Approx(b.weight(j)).epsilon(1e-12));
      CHECK(ab.plan.size() <= a.size() + b.size() - 1);
      CHECK(wasserstein_exact(b, a, g).cost == doctest::Approx(ab.cost).epsilon(1e-10));
      CHECK(ab.cost <= wasserstein_exact(a, c, g).cost + wasserstein_exact(c, b, g).cost + 1e-12);
      CHECK(wasserstein_exact(a, a, g).cost == doctest::Approx(0.0));
    }
  }

  TEST_CASE("large problems carry an optimality certificate") {
    // A feasible plan and a verified 1-Lipschitz potential with equal values.
    RandomStream rng(5);
    const DiscreteMeasure mu = weighted_cloud(rng, 400, 2, 1.0);
    const DiscreteMeasure nu = weighted_cloud(rng, 300, 2, 1.0);
    const GroundMetric g = GroundMetric::euclidean();
    const ExactTransport r = wasserstein_exact(mu, nu, g);
    std::vector<double> row(mu.size(), 0.0), col(nu.size(), 0.0);
    double plan_cost = 0.0;
    for (const PlanEntry& e : r.plan) {
      row[e.i] += e.mass;
      col[e.j] += e.mass;
      plan_cost += e.mass * g(mu.point(e.i), nu.point(e.j));
    }
    for (std::size_t i = 0; i < mu.size(); ++i) CHECK(row[i] == doctest::Approx(mu.weight(i)).epsilon(1e-12));
    for (std::size_t j = 0; j < nu.size(); ++j) CHECK(col[j] == doctest::Approx(nu.weight(j)).epsilon(1e-12));
    CHECK(plan_cost == doctest::Approx(r.cost).epsilon(1e-12));
    CHECK(std::abs(kr_dual_gap(mu, nu, g, detail::optimal_kr_potential(mu, nu, g))) < 1e-9);
  }

  TEST_CASE("Kantorovich-Rubinstein duality is tight") {
    RandomStream rng(6);
    for (int inst = 0; inst < 10; ++inst) {
      const DiscreteMeasure mu = weighted_cloud(rng, 15, 2, 1.0);
      const DiscreteMeasure nu = weighted_cloud(rng, 12, 2, 1.0);
      const GroundMetric g = GroundMetric::euclidean();
      const std::vector<double> phi = detail::optimal_kr_potential(mu, nu, g);
      CHECK(std::abs(kr_dual_gap(mu, nu, g, phi)) < 1e-9);
      const std::vector<double> zero(phi.size(), 0.0);
      CHECK(kr_dual_gap(mu, nu, g, zero) == doctest::Approx(wasserstein_exact(mu, nu, g).cost));
      std::vector<double> steep(phi.size(), 0.0);
      steep[0] = 10.0;
      CHECK_THROWS_AS(kr_dual_gap(mu, nu, g, steep), InvalidInput);
    }
  }

  TEST_CASE("splitting bound dominates the joint distance") {
    RandomStream rng(7);
    for (int inst = 0; inst < 20; ++inst) {
      std::vector<DiscreteMeasure> pm, pn;
      for (int k = 0; k < 3; ++k) {
        const double m = rng.uniform(0.2, 1.0);
        pm.push_back(weighted_cloud(rng, 5, 2, m));
        pn.push_back(weighted_cloud(rng, 7, 2, m));
      }
      const GroundMetric g = GroundMetric::euclidean();
      CHECK(wasserstein_exact(concatenate(pm), concatenate(pn), g).cost <=
            splitting_upper_bound(pm, pn, g) + 1e-12);
    }
    std::vector<DiscreteMeasure> one{weighted_cloud(rng, 3, 2, 1.0)};
    std::vector<DiscreteMeasure> other{weighted_cloud(rng, 3, 2, 0.5)};
    CHECK_THROWS_AS(splitting_upper_bound(one, other, GroundMetric::euclidean()), InvalidInput);
  }

  TEST_CASE("entropic solver brackets the exact cost") {
    RandomStream rng(8);
    for (int inst = 0; inst < 5; ++inst) {
      const DiscreteMeasure mu = weighted_cloud(rng, 40, 2, 2.0);
      const DiscreteMeasure nu = weighted_cloud(rng, 35, 2, 2.0);
      for (const GroundMetric& g : {GroundMetric::euclidean(), GroundMetric::logarithmic(0.5, 0.1)}) {
        const double exact = wasserstein_exact(mu, nu, g).cost;
        const EntropicTransport e = wasserstein_entropic(mu, nu, g, 0.02 * g.diameter(2));
        CHECK(e.lower <= exact + 1e-9);
        CHECK(exact <= e.upper + 1e-9);
        CHECK(e.marginal_violation <= 1e-6);
        CHECK(e.iterations > 0);
      }
    }
  }

  TEST_CASE("entropic solver validates its inputs") {
    RandomStream rng(9);
    const DiscreteMeasure mu = uniform_cloud(rng, 20, 2), nu = uniform_cloud(rng, 20, 2);
    const GroundMetric g = GroundMetric::euclidean();
    CHECK_THROWS_AS(wasserstein_entropic(mu, nu, g, 1e-6), InvalidInput);
    CHECK_THROWS_AS(wasserstein_entropic(mu, nu.scaled(2.0), g, 0.01), InvalidInput);
    CHECK_THROWS_AS(wasserstein_entropic(mu, nu, g, 0.001, 1), ConvergenceError);
  }

  TEST_CASE("debiased divergence vanishes on identical inputs") {
    RandomStream rng(10);
    const DiscreteMeasure mu = uniform_cloud(rng, 30, 2);
    const EntropicTransport e = wasserstein_entropic(mu, mu, GroundMetric::euclidean(), 0.01);
    CHECK(std::abs(e.debiased) < 1e-6);
  }

  TEST_CASE("exact solver validates its inputs") {
    RandomStream rng(11);
    const DiscreteMeasure mu = uniform_cloud(rng, 10, 2), nu = uniform_cloud(rng, 10, 2);
    CHECK_THROWS_AS(wasserstein_exact(mu, nu.scaled(1.5), GroundMetric::euclidean()), InvalidInput);
    CHECK_THROWS_AS(wasserstein_exact(mu, uniform_cloud(rng, 10, 1), GroundMetric::euclidean()),
                    InvalidInput);
    const DiscreteMeasure big = uniform_cloud(rng, static_cast<int>(kExactSupportCap) + 1, 2);
    CHECK_THROWS_AS(wasserstein_exact(big, big, GroundMetric::euclidean()), CapacityError);
    // Atoms below the weight floor do not count toward the cap.
    DiscreteMeasure padded = mu;
    padded.add(wrap({0.5, 0.5}), 0.0);
    CHECK(wasserstein_exact(padded, nu, GroundMetric::euclidean()).cost ==
          doctest::Approx(wasserstein_exact(mu, nu, GroundMetric::euclidean()).cost));
  }

  TEST_CASE("ground metrics") {
    const GroundMetric e = GroundMetric::euclidean();
    const GroundMetric l = GroundMetric::logarithmic(0.5, 0.04);
    const TorusPoint x = wrap({0.1, 0.1}), y = wrap({0.9, 0.1});
    CHECK(e(x, y) == doctest::Approx(0.2));
    CHECK(l(x, y) == doctest::Approx(std::log1p(0.2 / 0.2)));
    CHECK(e.diameter(2) == doctest::Approx(std::sqrt(2.0) / 2));
    CHECK(l.diameter(1) == doctest::Approx(std::log1p(0.5 / 0.2)));
    CHECK(e.name() == "w1");
    CHECK(l.name().find("alpha=0.5") != std::string::npos);
    CHECK_THROWS_AS(GroundMetric::logarithmic(1.5, 0.1), InvalidInput);
    CHECK_THROWS_AS(GroundMetric::logarithmic(0.5, 0.0), InvalidInput);
  }

  TEST_CASE("measure operations") {
    DiscreteMeasure m(2);
    m.add(wrap({0.1, 0.2}), 0.25);
    m.add(wrap({0.3, 0.4}), 0.75);
    CHECK(m.total_mass() == 1.0);
    CHECK(m.scaled(2.0).total_mass() == 2.0);
    CHECK(m.scaled(4.0).normalized().weight(1) == doctest::Approx(0.75));
    const DiscreteMeasure both = concatenate({m, m}, 0.5);
    CHECK(both.size() == 4);
    CHECK(both.total_mass() == doctest::Approx(1.0));
    const DiscreteMeasure moved =
        pushforward(m, [](const TorusPoint& p) { return translate(p, Vec{0.5, 0.0}); });
    CHECK(moved.point(0)[0] == doctest::Approx(0.6));
    CHECK(moved.weights() == m.weights());
    CHECK_THROWS_AS(m.add(wrap({0.1}), 0.1), InvalidInput);
    CHECK_THROWS_AS(m.add(wrap({0.1, 0.1}), -1.0), InvalidInput);
    CHECK_THROWS_AS(DiscreteMeasure(2).normalized(), InvalidInput);
    CHECK_THROWS_AS(DiscreteMeasure({wrap({0.1})}, {}), InvalidInput);
  }

  TEST_CASE("csv round trip") {
    RandomStream rng(12);
    const DiscreteMeasure m = weighted_cloud(rng, 17, 2, 3.0);
    std::stringstream ss;
    write_measure_csv(ss, m);
    const DiscreteMeasure r = read_measure_csv(ss);
    CHECK(r.points() == m.points());
    CHECK(r.weights() == m.weights());

    std::istringstream bad_header("mass,x_1\n1,0.5\n");
    CHECK_THROWS_AS(read_measure_csv(bad_header), IoError);
    std::istringstream bad_number("weight,x_1\n1,abc\n");
    CHECK_THROWS_AS(read_measure_csv(bad_number), IoError);
    std::istringstream short_row("weight,x_1,x_2\n1,0.5\n");
    CHECK_THROWS_AS(read_measure_csv(short_row), IoError);

    const DiscreteMeasure other = weighted_cloud(rng, 5, 2, 3.0);
    const ExactTransport plan = wasserstein_exact(m, other, GroundMetric::euclidean());
    std::ostringstream os;
    write_plan_csv(os, plan, m, other, GroundMetric::euclidean());
    CHECK(os.str().rfind("i,j,mass,ground_cost\n", 0) == 0);
  }

  TEST_CASE("one dimensional pairs are matched monotonically") {
    DiscreteMeasure mu(1), nu(1);
    mu.add(wrap({0.1}), 0.5);
    mu.add(wrap({0.4}), 0.5);
    nu.add(wrap({0.2}), 0.5);
    nu.add(wrap({0.5}), 0.5);
    CHECK(wasserstein_exact(mu, nu, GroundMetric::euclidean()).cost == doctest::Approx(0.1));
  }

  TEST_CASE("coincident atoms behave like a merged atom") {
    RandomStream rng(30);
    DiscreteMeasure split(2), merged(2);
    const TorusPoint x = random_point(rng, 2);
    split.add(x, 0.2);
    split.add(x, 0.3);
    merged.add(x, 0.5);
    const TorusPoint y = random_point(rng, 2);
    split.add(y, 0.5);
    merged.add(y, 0.5);
    CHECK(split.size() == 3);
    CHECK(wasserstein_exact(split, merged, GroundMetric::euclidean()).cost == doctest::Approx(0.0));
    const DiscreteMeasure other = uniform_cloud(rng, 6, 2);
    CHECK(wasserstein_exact(split, other, GroundMetric::euclidean()).cost ==
          doctest::Approx(wasserstein_exact(merged, other, GroundMetric::euclidean()).cost));
  }

  TEST_CASE("entropic cost lies within epsilon log n of the exact cost") {
    RandomStream rng(31);
    const double eps = 0.01;
    for (int inst = 0; inst < 20; ++inst) {
      const DiscreteMeasure mu = weighted_cloud(rng, 64, 2, 1.0), nu = weighted_cloud(rng, 64, 2, 1.0);
      const double exact = wasserstein_exact(mu, nu, GroundMetric::euclidean()).cost;
      const EntropicTransport e = wasserstein_entropic(mu, nu, GroundMetric::euclidean(), eps);
      CHECK(e.primal >= exact - 1e-6);
      CHECK(e.primal <= exact + eps * std::log(64.0));
    }
  }

  TEST_CASE("splitting bound is sometimes strict") {
    RandomStream rng(32);
    int strict = 0;
    for (int inst = 0; inst < 50; ++inst) {
      std::vector<DiscreteMeasure> pm, pn;
      for (int k = 0; k < 4; ++k) {
        const double m = rng.uniform(0.2, 1.0);
        pm.push_back(weighted_cloud(rng, 8, 2, m));
        pn.push_back(weighted_cloud(rng, 8, 2, m));
      }
      const GroundMetric g = GroundMetric::euclidean();
      const double whole = wasserstein_exact(concatenate(pm), concatenate(pn), g).cost;
      const double bound = splitting_upper_bound(pm, pn, g);
      CHECK(bound >= whole - 1e-12);
      strict += bound > whole + 1e-9;
    }
    CHECK(strict > 0);
  }
}
