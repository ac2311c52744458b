#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "svmrob/kernel.hpp"
#include "svmrob/rng.hpp"

using namespace svmrob;

namespace {

Point random_point(std::mt19937_64& gen, std::size_t dim, double radius) {
  Point x(dim);
  for (auto& v : x) v = uniform(gen, -radius, radius);
  return x;
}

}  // namespace

TEST_CASE("rbf kernel frozen values") {
  auto k = make_rbf(1.0);
  CHECK(k->eval(Point{0.0, 0.0}, Point{1.0, 0.0}) == 0.36787944117144233);
  CHECK(k->eval(Point{1.0, 2.0}, Point{1.0, 2.0}) == 1.0);
  CHECK(k->sup_norm() == 1.0);
  CHECK(k->bounded());
  CHECK(k->spec_string() == "rbf:1");
  auto half = make_rbf(0.5);
  CHECK(half->eval(Point{0.0}, Point{2.0}) == doctest::Approx(std::exp(-2.0)).epsilon(1e-14));
  CHECK_THROWS_AS(make_rbf(0.0), ConfigError);
  CHECK_THROWS_AS(make_rbf(-1.0), ConfigError);
}

TEST_CASE("feature map distance under rbf") {
  auto k = make_rbf(1.0);
  auto fa = RkhsFunction::feature(k, {0.0, 0.0});
  auto fb = RkhsFunction::feature(k, {1.0, 0.0});
  // |Phi(x) - Phi(x')|_H = sqrt(2 - 2 k(x,x')).
  CHECK(rkhs_distance(fa, fb) == doctest::Approx(1.1243847729568004).epsilon(1e-14));
  CHECK(fa.norm() == 1.0);
  CHECK(fa.squared_norm() == 1.0);
}

TEST_CASE("linear kernel needs a domain bound to be bounded") {
  auto unbounded = make_linear();
  CHECK(unbounded->eval(Point{1.0, 2.0}, Point{3.0, -1.0}) == 1.0);
  CHECK_FALSE(unbounded->bounded());
  CHECK_THROWS_AS(unbounded->sup_norm(), ConfigError);
  auto k = make_linear(2.0);
  CHECK(k->bounded());
  CHECK(k->sup_norm() == 2.0);
  CHECK(k->eval(Point{1.0, 1.0}, Point{1.0, -1.0}) == 0.0);
  // Points outside the declared ball are rejected.
  CHECK_THROWS_AS(k->eval(Point{3.0, 0.0}, Point{0.0, 0.0}), ConfigError);
  CHECK_THROWS_AS(k->eval(Point{0.0, 0.0}, Point{0.0, 2.001}), ConfigError);
  CHECK_NOTHROW(k->eval(Point{2.0, 0.0}, Point{0.0, 2.0}));
  CHECK_THROWS_AS(make_linear(0.0), ConfigError);
  CHECK_THROWS_AS(make_linear(-3.0), ConfigError);
}

TEST_CASE("polynomial kernel values and sup norm") {
  auto k = make_polynomial(2, 1.0, 3.0);
  CHECK(k->eval(Point{1.0, 1.0}, Point{1.0, 0.0}) == 4.0);
  CHECK(k->sup_norm() == doctest::Approx(10.0).epsilon(1e-14));
  CHECK(k->spec_string() == "poly:2:1");
  // Odd degree keeps the sign of the base.
  auto cubic = make_polynomial(3, 0.0, 1.0);
  CHECK(cubic->eval(Point{1.0}, Point{-1.0}) == -1.0);
  CHECK_THROWS_AS(make_polynomial(0, 1.0, 1.0), ConfigError);
  CHECK_THROWS_AS(make_polynomial(2, -0.5, 1.0), ConfigError);

  // sup_norm is the maximum of sqrt(k(x,x)) over the ball; check against a
  // dense 1-d scan.
  auto p = make_polynomial(2, 0.5, 1.5);
  double seen = 0.0;
  for (int i = -1500; i <= 1500; ++i) {
    const Point x{i * 1e-3};
    seen = std::max(seen, std::sqrt(p->eval(x, x)));
  }
  CHECK(seen <= p->sup_norm() + 1e-9);
  CHECK(seen == doctest::Approx(p->sup_norm()).epsilon(1e-9));
}

TEST_CASE("exponential kernel values and sup norm") {
  auto k = make_exponential(1.0);
  CHECK(k->eval(Point{1.0, 0.0}, Point{0.0, 1.0}) == 1.0);
  CHECK(k->eval(Point{1.0, 0.0}, Point{1.0, 0.0}) == doctest::Approx(std::exp(1.0)));
  CHECK(k->sup_norm() == 1.6487212707001282);
  CHECK_THROWS_AS(make_exponential()->sup_norm(), ConfigError);
}

TEST_CASE("kernel parsing") {
  CHECK(parse_kernel("rbf:0.25")->spec_string() == "rbf:0.25");
  CHECK(parse_kernel("linear", 2.0)->sup_norm() == 2.0);
  CHECK(parse_kernel("poly:3:0.5", 1.0)->spec_string() == "poly:3:0.5");
  CHECK(parse_kernel("exp", 1.0)->spec_string() == "exp");
  CHECK_THROWS_AS(parse_kernel("laplace:1"), ConfigError);
  CHECK_THROWS_AS(parse_kernel("rbf"), ConfigError);
  CHECK_THROWS_AS(parse_kernel("rbf:a"), ConfigError);
  CHECK_THROWS_AS(parse_kernel("rbf:1:2"), ConfigError);
  CHECK_THROWS_AS(parse_kernel("poly:2.5:1", 1.0), ConfigError);
  CHECK_THROWS_AS(parse_kernel("poly:2", 1.0), ConfigError);
  CHECK_THROWS_AS(parse_kernel("linear:1"), ConfigError);
}

TEST_CASE("kernel identity comparison") {
  CHECK(same_kernel(*make_rbf(1.0), *make_rbf(1.0)));
  CHECK_FALSE(same_kernel(*make_rbf(1.0), *make_rbf(2.0)));
  CHECK_FALSE(same_kernel(*make_rbf(1.0), *make_linear(1.0)));
  CHECK(same_kernel(*make_linear(2.0), *make_linear(2.0)));
  CHECK_FALSE(same_kernel(*make_linear(2.0), *make_linear(3.0)));
  CHECK_FALSE(same_kernel(*make_linear(2.0), *make_linear()));
}

TEST_CASE("kernel eval rejects dimension mismatches") {
  auto k = make_rbf(1.0);
  CHECK_THROWS_AS(k->eval(Point{1.0}, Point{1.0, 2.0}), ConfigError);
}

TEST_CASE("gram matrices are symmetric and positive semidefinite") {
  std::mt19937_64 gen(31);
  std::vector<Point> pts;
  for (int i = 0; i < 10; ++i) pts.push_back(random_point(gen, 3, 1.0));
  for (const auto& k : {make_rbf(0.7), make_linear(2.0), make_polynomial(2, 1.0, 2.0),
                        make_exponential(2.0)}) {
    const Eigen::MatrixXd K = gram(*k, pts);
    CHECK((K - K.transpose()).cwiseAbs().maxCoeff() == 0.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K);
    const double floor = -1e-10 * 10 * std::max(1.0, K.diagonal().maxCoeff());
    CAPTURE(k->spec_string());
    CHECK(es.eigenvalues().minCoeff() >= floor);
  }
  CHECK_THROWS_AS(gram(*make_rbf(1.0), {}), ConfigError);
}

TEST_CASE("evaluation reproduces the inner product with a feature map") {
  std::mt19937_64 gen(7);
  auto k = make_rbf(0.5);
  std::vector<Point> support;
  std::vector<double> coeffs;
  for (int j = 0; j < 5; ++j) {
    support.push_back(random_point(gen, 2, 2.0));
    coeffs.push_back(uniform(gen, -1.5, 1.5));
  }
  RkhsFunction f(k, support, coeffs);
  for (int rep = 0; rep < 200; ++rep) {
    const Point x = random_point(gen, 2, 2.5);
    const double via_inner = rkhs_inner(f, RkhsFunction::feature(k, x));
    CHECK(std::abs(via_inner - f.eval(x)) <= 1e-10 * std::max(1.0, std::abs(via_inner)));
  }
}

TEST_CASE("rkhs geometry: Cauchy-Schwarz and the sup norm bound") {
  std::mt19937_64 gen(11);
  auto k = make_rbf(0.8);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<Point> sf, sg;
    std::vector<double> cf, cg;
    for (int j = 0; j < 4; ++j) {
      sf.push_back(random_point(gen, 2, 2.0));
      cf.push_back(uniform(gen, -2.0, 2.0));
      sg.push_back(random_point(gen, 2, 2.0));
      cg.push_back(uniform(gen, -2.0, 2.0));
    }
    RkhsFunction f(k, sf, cf), g(k, sg, cg);
    CHECK(std::abs(rkhs_inner(f, g)) <= f.norm() * g.norm() + 1e-9);
    const Point x = random_point(gen, 2, 2.0);
    CHECK(std::abs(f.eval(x)) <= f.norm() * k->sup_norm() + 1e-9);
    // Uniform norm of the difference is controlled by the rkhs distance.
    const std::vector<Point> probes{x, random_point(gen, 2, 2.0)};
    CHECK(sup_distance(f, g, probes) <= rkhs_distance(f, g) * k->sup_norm() + 1e-9);
  }
}

TEST_CASE("rkhs inner product is symmetric and bilinear") {
  auto k = make_rbf(1.0);
  RkhsFunction f(k, {{0.0}, {1.0}}, {1.0, -2.0});
  RkhsFunction g(k, {{0.5}}, {3.0});
  CHECK(rkhs_inner(f, g) == doctest::Approx(rkhs_inner(g, f)).epsilon(1e-14));
  RkhsFunction f2(k, {{0.0}, {1.0}}, {2.0, -4.0});
  CHECK(rkhs_inner(f2, g) == doctest::Approx(2.0 * rkhs_inner(f, g)).epsilon(1e-13));
  CHECK(rkhs_inner(f, RkhsFunction::zero(k)) == 0.0);
}

TEST_CASE("zero function and mismatches") {
  auto k = make_rbf(1.0);
  auto z = RkhsFunction::zero(k);
  CHECK(z.norm() == 0.0);
  CHECK(z.eval(Point{3.0}) == 0.0);
  CHECK(z.support().empty());
  RkhsFunction f(k, {{1.0}}, {2.0});
  CHECK(rkhs_distance(f, z) == f.norm());

  CHECK_THROWS_AS(RkhsFunction(nullptr, {{1.0}}, {1.0}), ConfigError);
  CHECK_THROWS_AS(RkhsFunction(k, {{1.0}}, {1.0, 2.0}), ConfigError);
  CHECK_THROWS_AS(RkhsFunction(k, {{1.0}, {1.0, 2.0}}, {1.0, 2.0}), ConfigError);
  CHECK_THROWS_AS(rkhs_inner(f, RkhsFunction(make_rbf(2.0), {{1.0}}, {1.0})), ConfigError);
  CHECK_THROWS_AS(sup_distance(f, z, {}), ConfigError);
}

TEST_CASE("squared norm equals the quadratic form and caches the gram") {
  auto k = make_rbf(1.0);
  RkhsFunction f(k, {{0.0}, {1.5}, {-0.5}}, {1.0, -0.5, 0.25});
  const Eigen::MatrixXd K = gram(*k, f.support());
  Eigen::Vector3d a(1.0, -0.5, 0.25);
  CHECK(f.squared_norm() == doctest::Approx(a.dot(K * a)).epsilon(1e-14));
  // A copy shares the cached gram and agrees.
  RkhsFunction copy = f;
  CHECK(copy.squared_norm() == f.squared_norm());
  CHECK(&copy.support_gram() == &f.support_gram());
}
