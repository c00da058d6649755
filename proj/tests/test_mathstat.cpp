#include <doctest.h>

#include <cmath>

#include "pbts/mathstat.hpp"
#include "pbts/rng.hpp"

using namespace pbts;

TEST_CASE("chi-square quantiles match reference values") {
  // reference values from standard tables
  CHECK(chi2_quantile(0.975, 1) == doctest::Approx(5.0238861873).epsilon(1e-8));
  CHECK(chi2_quantile(0.975, 2) == doctest::Approx(7.3777589082).epsilon(1e-8));
  CHECK(chi2_quantile(0.975, 4) == doctest::Approx(11.1432867818).epsilon(1e-8));
  CHECK(chi2_quantile(0.975, 5) == doctest::Approx(12.8325019940).epsilon(1e-8));
  CHECK(chi2_quantile(0.5, 2) == doctest::Approx(std::log(4.0)).epsilon(1e-8));
}

TEST_CASE("chi2 cdf and quantile are inverse") {
  for (const int dof : {1, 2, 3, 5}) {
    for (const double p : {0.05, 0.25, 0.5, 0.9, 0.975}) {
      CHECK(chi2_cdf(chi2_quantile(p, dof), dof) == doctest::Approx(p).epsilon(1e-9));
    }
  }
}

TEST_CASE("normal pdf at zero") {
  CHECK(normal_pdf(0.0) == doctest::Approx(0.3989422804014327).epsilon(1e-12));
}

TEST_CASE("sorted quantile interpolates linearly") {
  const std::vector<double> v = {1.0, 2.0, 3.0, 4.0};
  CHECK(sorted_quantile(v, 0.0) == 1.0);
  CHECK(sorted_quantile(v, 1.0) == 4.0);
  CHECK(sorted_quantile(v, 0.5) == doctest::Approx(2.5));
  CHECK(sorted_quantile(v, 0.25) == doctest::Approx(1.75));
}

TEST_CASE("sample moments") {
  const SampleMoments m = sample_moments({1.0, 2.0, 3.0});
  CHECK(m.mean == doctest::Approx(2.0));
  CHECK(m.std_dev == doctest::Approx(1.0));
  CHECK(m.count == 3);
}

TEST_CASE("rng streams are deterministic and roughly standard normal") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.uniform() == b.uniform());

  Rng r(7);
  double sum = 0.0, sum2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = r.normal();
    sum += x;
    sum2 += x * x;
  }
  CHECK(sum / n == doctest::Approx(0.0).epsilon(0.02));
  CHECK(sum2 / n == doctest::Approx(1.0).epsilon(0.02));
}
