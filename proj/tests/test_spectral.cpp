#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>

#include "orthofield/spectral.hpp"

using namespace orthofield;
using Catch::Approx;

namespace {

Eigen::VectorXd vec2(double a, double b) {
  Eigen::VectorXd v(2);
  v << a, b;
  return v;
}

Eigen::VectorXd vec3(double a, double b, double c) {
  Eigen::VectorXd v(3);
  v << a, b, c;
  return v;
}

}  // namespace

TEST_CASE("expansion constant") {
  CHECK(spectral::expansion_constant_sq(2) == Approx(2.0 * M_PI));
  CHECK(spectral::expansion_constant_sq(3) == Approx(2.0 * M_PI * M_PI));
}

TEST_CASE("expansion config validation") {
  CHECK_NOTHROW(spectral::ExpansionConfig(10, 20.0, 16, 2));
  CHECK_THROWS_AS(spectral::ExpansionConfig(-1, 20.0, 16, 2), std::invalid_argument);
  CHECK_THROWS_AS(spectral::ExpansionConfig(10, 0.0, 16, 2), std::invalid_argument);
  CHECK_THROWS_AS(spectral::ExpansionConfig(10, 20.0, 4, 2), std::invalid_argument);
  CHECK_THROWS_AS(spectral::ExpansionConfig(10, 20.0, 16, 4),
                  specfun::UnsupportedDimension);
}

TEST_CASE("isotropic expansion converges to the kernel") {
  kernels::CovarianceModel m({1.0, 1.0}, 2);
  spectral::ExpansionConfig cfg(40, 40.0, 64, 2);

  SECTION("diagonal recovers the truncated spectral mass") {
    // at x == y every term is a square, so the truncated expansion sums to
    // the radial measure of [0, kappa_max) (for degrees covering kappa r)
    const Eigen::VectorXd x = vec2(0.3, -0.4);
    const double mass = kernels::radial_measure_cdf(kernels::spectral_density(m), 40.0);
    CHECK(spectral::isotropic_expansion(m, cfg, x, x) == Approx(mass).margin(1e-3));
  }
  SECTION("unit distance recovers exp(-1)") {
    const Eigen::VectorXd x = vec2(1.0, 0.0), y = vec2(1.0, 1.0);
    CHECK(spectral::isotropic_expansion(m, cfg, x, y) ==
          Approx(std::exp(-1.0)).margin(1e-3));
  }
  SECTION("raising the degree cap shrinks the error") {
    const Eigen::VectorXd x = vec2(0.9, 0.4), y = vec2(-1.2, 2.0);
    const double oracle = kernels::kernel_eval(m, (x - y).norm());
    auto err_at = [&](int M) {
      spectral::ExpansionConfig c(M, 40.0, 64, 2);
      return std::abs(spectral::isotropic_expansion(m, c, x, y) - oracle);
    };
    const double coarse = err_at(5), full = err_at(40);
    CHECK(full < coarse);
    CHECK(full < 1e-3);
  }
  SECTION("degree-zero truncation depends only on the radii") {
    spectral::ExpansionConfig c0(0, 40.0, 64, 2);
    const double a = spectral::isotropic_expansion(m, c0, vec2(1.1, 0.0), vec2(-0.7, 0.0));
    const double b = spectral::isotropic_expansion(m, c0, vec2(0.0, 1.1), vec2(0.7, 0.0));
    CHECK(a == Approx(b).epsilon(1e-12));
  }
  SECTION("three dimensions") {
    kernels::CovarianceModel m3({1.0, 1.0}, 3);
    spectral::ExpansionConfig c3(30, 40.0, 64, 3);
    const Eigen::VectorXd x = vec3(0.5, 0.4, -0.3), y = vec3(-0.8, 1.0, 0.6);
    CHECK(spectral::isotropic_expansion(m3, c3, x, y) ==
          Approx(kernels::kernel_eval(m3, (x - y).norm())).margin(1e-3));
  }
  SECTION("origin is rejected") {
    CHECK_THROWS_AS(
        spectral::isotropic_expansion(m, cfg, vec2(0.0, 0.0), vec2(1.0, 0.0)),
        std::domain_error);
  }
  SECTION("dimension mismatch is rejected") {
    CHECK_THROWS_AS(spectral::isotropic_expansion(m, cfg, vec3(1, 0, 0), vec3(0, 1, 0)),
                    std::invalid_argument);
  }
}

TEST_CASE("sphere projections of covariance differences") {
  kernels::CovarianceModel m1({1.0, 1.0}, 2), m2({2.0, 1.0}, 2);
  spectral::ExpansionConfig cfg(0, 60.0, 96, 2, 128);

  SECTION("equal models project to zero") {
    CHECK(spectral::sphere_project_delta(m1, m1, 0, 1, 0, 1, 0.7, 1.3, cfg) ==
          Approx(0.0).margin(1e-14));
    CHECK(spectral::sphere_project_delta(m1, m1, 2, 1, 2, 1, 0.7, 1.3, cfg) ==
          Approx(0.0).margin(1e-14));
  }
  SECTION("distinct degrees are orthogonal") {
    CHECK(std::abs(spectral::sphere_project_delta(m1, m2, 0, 1, 1, 1, 0.7, 1.3, cfg)) <
          1e-8);
    CHECK(std::abs(spectral::sphere_project_delta(m1, m2, 2, 1, 1, 2, 0.7, 1.3, cfg)) <
          1e-8);
  }
  SECTION("two quadrature routes agree at degree zero") {
    const double r1 = 0.7, r2 = 1.3;
    const double direct =
        spectral::sphere_project_delta(m1, m2, 0, 1, 0, 1, r1, r2, cfg);
    quad::QuadGrid g1{{r1}, {1.0}}, g2{{r2}, {1.0}};
    const auto ext = spectral::projection_extension(m1, m2, 0, g1, g2, 200.0, 256);
    CHECK(direct == Approx(ext.values(0, 0)).epsilon(1e-5));
  }
  SECTION("negative radii are rejected") {
    CHECK_THROWS_AS(spectral::sphere_project_delta(m1, m2, 0, 1, 0, 1, -0.5, 1.0, cfg),
                    std::domain_error);
  }
}

TEST_CASE("one-dimensional Hankel transform") {
  SECTION("orders below -1/2 are rejected") {
    auto g = quad::radial_grid(10.0, 64);
    CHECK_THROWS_AS(spectral::HankelPlan(-0.75, g, g), std::domain_error);
  }
  SECTION("half-integer order reduces to the sine transform") {
    auto plan = spectral::make_plan(0.5, 40.0, 1024, 30.0, 256);
    auto f = spectral::sample(plan.radial, [](double r) { return std::exp(-r); });
    auto g = spectral::hankel_1d(plan, f);
    for (std::size_t i = 0; i < g.grid.size(); i += 17) {
      const double k = g.grid.nodes[i];
      CHECK(g.values[i] ==
            Approx(std::sqrt(2.0 / M_PI) * k / (1.0 + k * k)).margin(1e-8));
    }
  }
  SECTION("zero maps to zero") {
    auto plan = spectral::make_plan(0.0, 10.0, 64, 10.0, 64);
    auto f = spectral::sample(plan.radial, [](double) { return 0.0; });
    auto g = spectral::hankel_1d(plan, f);
    CHECK(g.values.cwiseAbs().maxCoeff() == 0.0);
  }
  SECTION("gaussian profile is a fixed point") {
    auto plan = spectral::make_plan(0.0, 12.0, 512, 12.0, 512);
    auto f = spectral::sample(plan.radial,
                              [](double r) { return std::sqrt(r) * std::exp(-0.5 * r * r); });
    auto g = spectral::hankel_1d(plan, f);
    // same functional form on the frequency grid
    for (std::size_t i = 0; i < g.grid.size(); i += 31) {
      const double k = g.grid.nodes[i];
      CHECK(g.values[i] ==
            Approx(std::sqrt(k) * std::exp(-0.5 * k * k)).margin(1e-10));
    }
    // and the double transform returns the input
    auto back = spectral::hankel_1d(plan.swapped(), g);
    CHECK((back.values - f.values).cwiseAbs().maxCoeff() < 1e-10);
  }
  SECTION("Parseval holds on rapidly decaying functions") {
    auto plan = spectral::make_plan(1.0, 12.0, 512, 12.0, 512);
    auto f = spectral::sample(plan.radial, [](double r) {
      return std::pow(r, 1.5) * std::exp(-0.5 * r * r);
    });
    auto g = spectral::hankel_1d(plan, f);
    CHECK(spectral::square_mass(f) == Approx(spectral::square_mass(g)).epsilon(1e-10));
  }
  SECTION("grid mismatch is rejected") {
    auto plan = spectral::make_plan(0.0, 10.0, 64, 10.0, 64);
    auto other = quad::radial_grid(10.0, 128);
    auto f = spectral::sample(other, [](double r) { return std::exp(-r); });
    CHECK_THROWS_AS(spectral::hankel_1d(plan, f), std::invalid_argument);
  }
}

TEST_CASE("two-dimensional Hankel transform") {
  auto plan = spectral::make_plan(0.0, 12.0, 256, 12.0, 256);
  auto fx = [](double r) { return std::sqrt(r) * std::exp(-0.5 * r * r); };
  auto fy = [](double r) { return std::sqrt(r) * std::exp(-0.45 * r * r); };

  SECTION("separable inputs map to separable outputs") {
    auto F = spectral::sample2(plan.radial, plan.radial,
                               [&](double x, double y) { return fx(x) * fy(y); });
    auto G = spectral::hankel_2d(plan, plan, F);
    auto gx = spectral::hankel_1d(plan, spectral::sample(plan.radial, fx));
    auto gy = spectral::hankel_1d(plan, spectral::sample(plan.radial, fy));
    double worst = 0.0;
    for (std::size_t i = 0; i < plan.freq.size(); i += 13)
      for (std::size_t j = 0; j < plan.freq.size(); j += 13)
        worst = std::max(worst, std::abs(G.values(i, j) - gx.values[i] * gy.values[j]));
    CHECK(worst < 1e-12);
  }
  SECTION("zero maps to zero") {
    spectral::SampledBivariate Z{plan.radial, plan.radial,
                                 Eigen::MatrixXd::Zero(plan.radial.size(),
                                                       plan.radial.size())};
    auto G = spectral::hankel_2d(plan, plan, Z);
    CHECK(G.values.cwiseAbs().maxCoeff() == 0.0);
  }
  SECTION("double transform restores smooth decaying inputs") {
    auto F = spectral::sample2(plan.radial, plan.radial,
                               [&](double x, double y) { return fx(x) * fy(y); });
    auto G = spectral::hankel_2d(plan, plan, F);
    auto back = spectral::hankel_2d(plan.swapped(), plan.swapped(), G);
    CHECK((back.values - F.values).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("difference mass grows with the truncation volume") {
  kernels::CovarianceModel m1({1.0, 1.0}, 1), m2({2.0, 1.0}, 1);

  SECTION("equal models give zero") {
    CHECK(spectral::delta_square_mass(m1, m1, 5.0) == Approx(0.0).margin(1e-12));
  }
  SECTION("matches a direct quadrature oracle in d = 1") {
    auto diff2 = [&](double t) {
      const double d = kernels::kernel_eval(m1, t) - kernels::kernel_eval(m2, t);
      return d * d;
    };
    const double line = 2.0 * quad::adaptive_gl(diff2, 0.0, 60.0, 1e-13);
    const double R = 7.0;
    CHECK(spectral::delta_square_mass(m1, m2, R) == Approx(2.0 * R * line).epsilon(1e-8));
  }
  SECTION("doubling R doubles the value") {
    const double a = spectral::delta_square_mass(m1, m2, 10.0);
    const double b = spectral::delta_square_mass(m1, m2, 20.0);
    CHECK(b / a == Approx(2.0).epsilon(0.01));
  }
  SECTION("factor ten over a decade of R") {
    const double a = spectral::delta_square_mass(m1, m2, 10.0);
    const double b = spectral::delta_square_mass(m1, m2, 100.0);
    CHECK(b / a > 8.0);
  }
  SECTION("R must be positive") {
    CHECK_THROWS_AS(spectral::delta_square_mass(m1, m2, 0.0), std::domain_error);
  }
}

TEST_CASE("equivalence ratio integral flags divergence") {
  SECTION("zero extension converges") {
    kernels::CovarianceModel m({1.0, 1.0}, 1);
    auto rg = quad::radial_grid(40.0, 128);
    spectral::HankelPlan plan(0.0, rg, quad::radial_grid(4.0, 64));
    spectral::SampledBivariate zero{rg, rg,
                                    Eigen::MatrixXd::Zero(rg.size(), rg.size())};
    auto rep = spectral::equivalence_ratio_integral(m, m, zero, plan, plan);
    CHECK_FALSE(rep.diverges);
    CHECK(rep.values.back() == 0.0);
  }
  SECTION("stationary difference of distinct models diverges") {
    kernels::CovarianceModel m1({1.0, 1.0}, 1), m2({2.0, 1.0}, 1);
    auto rg = quad::radial_grid(160.0, 768);
    spectral::HankelPlan plan(-0.5, rg, quad::radial_grid(6.0, 256));
    auto ext = spectral::sample2(rg, rg, [&](double x, double y) {
      return kernels::kernel_eval(m1, std::abs(x - y)) -
             kernels::kernel_eval(m2, std::abs(x - y));
    });
    auto rep = spectral::equivalence_ratio_integral(m1, m2, ext, plan, plan);
    CHECK(rep.diverges);
    // linear-in-volume mechanism: each doubling of R roughly doubles the value
    for (std::size_t i = 1; i < rep.values.size(); ++i)
      CHECK(rep.values[i] > 1.5 * rep.values[i - 1]);
  }
  SECTION("scaled degree-zero projection grows without bound") {
    kernels::CovarianceModel m1({1.0, 1.0}, 2), m2({2.0, 1.0}, 2);
    auto rg = quad::radial_grid(80.0, 512);
    spectral::HankelPlan plan(0.0, rg, quad::radial_grid(8.0, 256));
    auto ext = spectral::projection_extension(m1, m2, 0, rg, rg, 8.0, 64);
    auto scaled = spectral::scale_projection(ext, 2);
    auto rep = spectral::equivalence_ratio_integral(m1, m2, scaled, plan, plan);
    for (std::size_t i = 1; i < rep.values.size(); ++i)
      CHECK(rep.values[i] > 1.5 * rep.values[i - 1]);
    CHECK(rep.values.back() > 2.0 * rep.values[rep.values.size() - 2]);
  }
}
