#include <vector>

#include "doctest.h"
#include "llmrouter/errors.hpp"
#include "llmrouter/stats.hpp"

using namespace llmrouter;

TEST_CASE("pearson: perfect linear relationships") {
  const std::vector<double> xs{1, 2, 3};
  const std::vector<double> up{2, 4, 6};
  const std::vector<double> down{6, 4, 2};
  CHECK(pearson(xs, up) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(pearson(xs, down) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(spearman(xs, up) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(spearman(xs, down) == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("pearson rejects degenerate input") {
  const std::vector<double> xs{1, 2, 3};
  const std::vector<double> flat{5, 5, 5};
  const std::vector<double> one{1};
  const std::vector<double> two{1, 2};
  CHECK_THROWS_AS(pearson(xs, flat), DomainError);
  CHECK_THROWS_AS(pearson(flat, xs), DomainError);
  CHECK_THROWS_AS(pearson(one, one), DomainError);
  CHECK_THROWS_AS(pearson(xs, two), DomainError);
}

TEST_CASE("spearman: one swapped pair on four points") {
  // Ranks differ by 1 at two positions: sum of squared differences is 2,
  // so rho = 1 - 12/(4*15) = 0.8.
  const std::vector<double> xs{1, 2, 3, 4};
  const std::vector<double> ys{1, 3, 2, 4};
  CHECK(spearman(xs, ys) == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("average_ranks shares ranks across ties") {
  const std::vector<double> v{3.0, 1.0, 3.0, 2.0};
  const auto r = average_ranks(v);
  CHECK(r == std::vector<double>{3.5, 1.0, 3.5, 2.0});
}

TEST_CASE("mean and population sd") {
  const std::vector<double> v{2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0};
  CHECK(mean(v) == doctest::Approx(5.0));
  CHECK(population_sd(v) == doctest::Approx(2.0));
  const std::vector<double> single{3.0};
  CHECK(population_sd(single) == 0.0);
}
