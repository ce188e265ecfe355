#include <catch2/catch_amalgamated.hpp>

#include "orthofield/kernels.hpp"

using namespace orthofield;
using Catch::Approx;

TEST_CASE("Theta validates its domain") {
  CHECK_NOTHROW(kernels::Theta(1.0, 1.0));
  CHECK_THROWS_AS(kernels::Theta(0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(kernels::Theta(-1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(kernels::Theta(1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(kernels::Theta(1.0, -2.0), std::invalid_argument);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(kernels::Theta(nan, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(kernels::Theta(1.0, nan), std::invalid_argument);
}

TEST_CASE("kernel_eval is sigma2 exp(-alpha tau)") {
  kernels::CovarianceModel m({1.0, 1.0}, 1);
  CHECK(kernels::kernel_eval(m, 0.0) == 1.0);
  CHECK(kernels::kernel_eval(m, 1.0) == Approx(std::exp(-1.0)).epsilon(1e-15));
  kernels::CovarianceModel m2({2.5, 0.7}, 3);
  CHECK(kernels::kernel_eval(m2, 2.0) ==
        Approx(2.5 * std::exp(-1.4)).epsilon(1e-15));
  CHECK_THROWS_AS(kernels::kernel_eval(m, -0.1), std::domain_error);
}

TEST_CASE("surface areas of the unit sphere") {
  CHECK(kernels::surface_area(1) == Approx(2.0));
  CHECK(kernels::surface_area(2) == Approx(2.0 * M_PI));
  CHECK(kernels::surface_area(3) == Approx(4.0 * M_PI));
}

TEST_CASE("radial spectral density, d = 1 closed form") {
  kernels::CovarianceModel m({1.3, 0.8}, 1);
  auto g = kernels::spectral_density(m);
  for (double k : {0.0, 0.3, 1.0, 5.0, 40.0}) {
    const double want = 1.3 / M_PI * 0.8 / (0.64 + k * k);
    CHECK(kernels::spectral_eval(g, k) == Approx(want).epsilon(1e-14));
  }
  CHECK(g.max_value() == g(0.0));
  CHECK(g(1.0) < g.max_value());
  CHECK_THROWS_AS(kernels::spectral_eval(g, -1.0), std::domain_error);
}

TEST_CASE("radial measure cdf: monotone, closed form in d = 1, total mass") {
  kernels::CovarianceModel m({1.0, 1.0}, 1);
  auto g = kernels::spectral_density(m);
  CHECK(kernels::radial_measure_cdf(g, 0.0) == 0.0);

  // d = 1: Phi([0, b)) = (2 sigma2 / pi) atan(b / alpha)
  for (double b : {0.1, 0.5, 2.0, 10.0})
    CHECK(kernels::radial_measure_cdf(g, b) ==
          Approx(2.0 / M_PI * std::atan(b)).epsilon(1e-10));

  double prev = 0.0;
  for (double b : {0.5, 1.0, 2.0, 4.0, 8.0}) {
    const double cur = kernels::radial_measure_cdf(g, b);
    CHECK(cur >= prev);
    prev = cur;
  }

  // total mass equals sigma2 in every dimension
  for (int d : {1, 2, 3, 4}) {
    kernels::CovarianceModel md({1.7, 0.9}, d);
    CHECK(kernels::radial_measure_cdf(kernels::spectral_density(md), 1e6) ==
          Approx(1.7).epsilon(1e-4));
  }
  CHECK_THROWS_AS(kernels::radial_measure_cdf(g, -1.0), std::domain_error);
}

TEST_CASE("density integrates to the measure increment") {
  // S_{d-1} int_a^b k^{d-1} g(k) dk == cdf(b) - cdf(a)
  kernels::CovarianceModel m({0.8, 1.4}, 2);
  auto g = kernels::spectral_density(m);
  const double a = 0.5, b = 3.0;
  auto f = [&](double k) { return kernels::surface_area(2) * k * g(k); };
  const double inc = quad::adaptive_gl(f, a, b, 1e-12);
  CHECK(kernels::radial_measure_cdf(g, b) - kernels::radial_measure_cdf(g, a) ==
        Approx(inc).epsilon(1e-9));
}
