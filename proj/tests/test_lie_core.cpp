#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "tsf/groups.hpp"
#include "tsf/lie_core.hpp"

using namespace tsf;

namespace {
double maxabs(const MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }
}  // namespace

TEST_CASE("vectorize/matrize round trips on every basis") {
  const LieAlgebraBasis* bases[] = {&s_basis(), &so3_basis(), &se3_basis(), &se23_basis()};
  for (const LieAlgebraBasis* b : bases) {
    CHECK(b->vectorize(MatrixXd::Zero(b->mat_dim(), b->mat_dim())).norm() == 0.0);
    for (int rep = 0; rep < 20; ++rep) {
      const VectorXd c = oracle::randn(b->dim());
      const VectorXd back = b->vectorize(b->matrize(c));
      CHECK(maxabs(back - c) < 1e-12);
      CHECK(maxabs(b->matrize(b->vectorize(b->matrize(c))) - b->matrize(c)) < 1e-12);
    }
  }
  CHECK(s_basis().vectorize(m_s(Vector3d(1, 2, 3))).isApprox(Vector3d(1, 2, 3), 1e-14));
}

TEST_CASE("vectorize rejects matrices outside the algebra") {
  MatrixXd bad = MatrixXd::Zero(3, 3);
  bad(0, 0) = 1.0;  // symmetric part, not in so(3)
  CHECK_THROWS_AS(so3_basis().vectorize(bad), NotInAlgebra);
}

TEST_CASE("quaternion algebra exponential closed form") {
  S3Group s3;
  const Vector3d a(M_PI / 2.0, 0.0, 0.0);
  const Matrix4d closed = s3.exp(a).as_matrix();
  CHECK(maxabs(closed - m_s(Vector3d(1, 0, 0))) < 1e-14);
  for (int rep = 0; rep < 25; ++rep) {
    const Vector3d xi = oracle::randn(3);
    const Matrix4d viamat = MatrixXd(m_s(xi)).exp();
    CHECK(maxabs(s3.exp(xi).as_matrix() - viamat) < 1e-12);
  }
}

TEST_CASE("exp at zero is the identity; SE(3) pure translation") {
  SE3Group se3;
  CHECK(maxabs(se3.exp(Vector6d::Zero()) - Matrix4d::Identity()) == 0.0);
  Vector6d xi = Vector6d::Zero();
  xi.tail<3>() = Vector3d(0.3, -1.0, 2.0);
  const Matrix4d g = se3.exp(xi);
  CHECK(maxabs(g.topLeftCorner<3, 3>() - Matrix3d::Identity()) < 1e-15);
  CHECK((g.topRightCorner<3, 1>() - xi.tail<3>()).norm() < 1e-15);
}

TEST_CASE("log round trips and the SE(2,3) abelian case") {
  SE23Group se23;
  CHECK(se23.log(se23.identity()).norm() == 0.0);
  for (int rep = 0; rep < 25; ++rep) {
    auto xi = SE23Group::Tangent(oracle::randn_rot_bounded(9, 0.05, 3.0));
    const auto back = se23.log(se23.exp(xi));
    CHECK((back - xi).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(maxabs(se23.exp(back) - se23.exp(xi)) < 1e-10);
  }
  // rotation = I: coordinates are just the columns
  Matrix5d g = Matrix5d::Identity();
  g.block<3, 1>(0, 3) = Vector3d(1, 2, 3);
  g.block<3, 1>(0, 4) = Vector3d(-4, 0, 5);
  const auto xi = se23.log(g);
  CHECK(xi.segment<3>(0).norm() == 0.0);
  CHECK((xi.segment<3>(3) - Vector3d(1, 2, 3)).norm() < 1e-14);
  CHECK((xi.segment<3>(6) - Vector3d(-4, 0, 5)).norm() < 1e-14);
}

TEST_CASE("principal log raises CutLocus near pi") {
  CHECK_THROWS_AS(so3_log(so3_exp(Vector3d((1.0 - 1e-12) * M_PI, 0, 0))), CutLocus);
  S3Group s3;
  Quaternion q;
  q.v = Vector3d(std::sin(M_PI - 1e-12), 0, 0);
  q.s = std::cos(M_PI - 1e-12);
  CHECK_THROWS_AS(s3.log(q), CutLocus);
}

TEST_CASE("adbar closed forms match the basis adjoint") {
  CHECK(maxabs(adbar_s(Vector3d::Zero())) == 0.0);
  CHECK(maxabs(adbar_s(Vector3d(0, 0, 1)) - (-2.0 * skew(Vector3d(0, 0, 1)))) == 0.0);
  for (int rep = 0; rep < 10; ++rep) {
    const Vector3d a = oracle::randn(3);
    CHECK(maxabs(adbar_s(a) - s_basis().adbar(a)) < 1e-12);
    CHECK(maxabs(adbar_so3(a) - so3_basis().adbar(a)) < 1e-12);
    const Vector6d x6 = oracle::randn(6);
    CHECK(maxabs(adbar_se3(x6) - se3_basis().adbar(x6)) < 1e-12);
    const auto x9 = Eigen::Matrix<double, 9, 1>(oracle::randn(9));
    CHECK(maxabs(adbar_se23(x9) - se23_basis().adbar(x9)) < 1e-12);
  }
}

TEST_CASE("adbar bracket compatibility: M(adbar_x y) = [M(x), M(y)]") {
  const LieAlgebraBasis* bases[] = {&s_basis(), &so3_basis(), &se3_basis(), &se23_basis()};
  for (const LieAlgebraBasis* b : bases) {
    for (int rep = 0; rep < 10; ++rep) {
      const VectorXd x = oracle::randn(b->dim()), y = oracle::randn(b->dim());
      const MatrixXd lhs = b->matrize(b->adbar(x) * y);
      const MatrixXd rhs = b->matrize(x) * b->matrize(y) - b->matrize(y) * b->matrize(x);
      CHECK(maxabs(lhs - rhs) < 1e-12);
    }
  }
}

TEST_CASE("jbar and wbar: trivial points and exact values") {
  CHECK(maxabs(wbar_s(Vector3d::Zero()) - Matrix3d::Identity()) < 1e-15);
  CHECK(maxabs(jbar_so3(Vector3d::Zero()) - Matrix3d::Identity()) < 1e-15);
  Matrix3d expect;
  expect << 1, 0, 0, 0, 0, -M_PI / 2.0, 0, M_PI / 2.0, 0;
  CHECK(maxabs(wbar_s(Vector3d(M_PI / 2.0, 0, 0)) - expect) < 1e-12);
  // kappa((pi/2,0,0)) = |xi| cot |xi| = 0
  CHECK(kappa_radial(M_PI / 2.0) == doctest::Approx(0.0).epsilon(1e-12));

  Vector6d xi = Vector6d::Zero();
  xi.tail<3>() = Vector3d(2, -1, 0.5);
  Matrix6d w0 = Matrix6d::Identity();
  w0.bottomLeftCorner<3, 3>() = -0.5 * skew(xi.tail<3>());
  CHECK(maxabs(wbar_se3(xi) - w0) < 1e-12);
}

TEST_CASE("closed-form wbar matches the quadrature oracle on all algebras") {
  for (int rep = 0; rep < 60; ++rep) {
    const Vector3d a = oracle::randn_rot_bounded(3, 1e-4, 1.5).head<3>();
    CHECK(maxabs(wbar_s(a) - oracle::gl_wbar(adbar_s(a))) < 1e-10);
    const Vector3d w = oracle::randn_rot_bounded(3, 1e-4, 3.0).head<3>();
    CHECK(maxabs(wbar_so3(w) - oracle::gl_wbar(adbar_so3(w))) < 1e-10);
    CHECK(maxabs(jbar_so3(w) - oracle::gl_jbar(adbar_so3(w))) < 1e-10);
    CHECK(maxabs(jbar_so3_explicit(w) - oracle::gl_jbar(adbar_so3(w))) < 1e-10);
    const Vector6d x6 = oracle::randn_rot_bounded(6, 1e-4, 3.0);
    CHECK(maxabs(wbar_se3(x6) - oracle::gl_wbar(adbar_se3(x6))) < 1e-9);
    const auto x9 = Eigen::Matrix<double, 9, 1>(oracle::randn_rot_bounded(9, 1e-4, 3.0));
    CHECK(maxabs(wbar_se23(x9) - oracle::gl_wbar(adbar_se23(x9))) < 1e-9);
  }
  // wbar_s is wbar_so3 after rescaling
  const Vector3d a(0.4, -0.2, 0.9);
  CHECK(maxabs(wbar_s(a) - wbar_so3(Vector3d(-2.0 * a))) < 1e-14);
}

TEST_CASE("wbar is singular at the branch boundary") {
  // adbar_s(pi e1) has |adbar| = 2 pi: the defining integral vanishes
  CHECK_THROWS_AS(wbar_series(MatrixXd(adbar_s(Vector3d(M_PI, 0, 0)))), Singular);
}

TEST_CASE("series jbar/wbar agree with closed forms") {
  for (int rep = 0; rep < 20; ++rep) {
    const Vector6d xi = oracle::randn_rot_bounded(6, 1e-3, 2.9);
    CHECK(maxabs(jbar_series(adbar_se3(xi)) - oracle::gl_jbar(adbar_se3(xi))) < 1e-10);
    CHECK(maxabs(wbar_series(adbar_se3(xi)) - wbar_se3(xi)) < 1e-9);
  }
}

TEST_CASE("wbar inverts the defining integral") {
  for (int rep = 0; rep < 20; ++rep) {
    const Vector6d xi = oracle::randn_rot_bounded(6, 1e-3, 2.9);
    const MatrixXd integral = oracle::gl_jbar(-adbar_se3(xi));  // int exp(s adbar)
    CHECK(maxabs(wbar_se3(xi) * integral - Matrix6d::Identity()) < 1e-10);
  }
}

TEST_CASE("BCH: trivial, commuting, and the matrix-log oracle") {
  SO3Group so3;
  const Vector3d a(0.3, 0, 0), b(0.2, 0, 0);
  CHECK((bch_so3(a, Vector3d::Zero()) - a).norm() < 1e-15);
  CHECK((bch_so3(a, b) - Vector3d(0.5, 0, 0)).norm() < 1e-14);

  const Vector3d a2(0.4, 0, 0), b2(0, 0.3, 0);
  const Vector3d c = bch_so3(a2, b2);
  const VectorXd c_oracle = oracle::matlog_bch(so3_basis(), a2, b2);
  CHECK((c - c_oracle).norm() < 1e-10);
  // |c| from the arccos composition law, applied at half angle
  const double half = std::acos(std::cos(0.2) * std::cos(0.15));
  CHECK(c.norm() == doctest::Approx(2.0 * half).epsilon(1e-12));

  for (int rep = 0; rep < 40; ++rep) {
    const Vector3d x = oracle::randn(3, 0.5), y = oracle::randn(3, 0.5);
    if (x.norm() + y.norm() >= 2.5) continue;
    CHECK((bch_s(x, y) - oracle::matlog_bch(s_basis(), x, y)).norm() < 1e-10);
    CHECK(maxabs(MatrixXd(m_s(bch_s(x, y))).exp() -
                 MatrixXd(m_s(x)).exp() * MatrixXd(m_s(y)).exp()) < 1e-10);
  }
}

TEST_CASE("BCH symmetry bch(x,y) = -bch(-y,-x) on 1000 pairs") {
  int tested = 0;
  while (tested < 1000) {
    const Vector3d x = oracle::randn(3, 0.6), y = oracle::randn(3, 0.6);
    if (x.norm() + y.norm() >= 2.5) continue;
    ++tested;
    CHECK((bch_so3(x, y) + bch_so3(-y, -x)).norm() < 1e-12);
  }
}

TEST_CASE("group-affine defect: constant fields are affine by construction") {
  SE23Group se23;
  const MatrixXd x1 = se23_basis().matrize(oracle::randn(9));
  auto f = [&x1](const MatrixXd& g) -> MatrixXd { return x1 * g; };
  for (int rep = 0; rep < 20; ++rep) {
    const MatrixXd g1 = se23.exp(SE23Group::Tangent(oracle::randn(9)));
    const MatrixXd g2 = se23.exp(SE23Group::Tangent(oracle::randn(9)));
    CHECK(group_affine_defect(f, g1, g2) < 1e-12);
  }
}

TEST_CASE("group-affine defect: the IMU field on SE(2,3) is affine") {
  SE23Group se23;
  const Vector3d omega(0.3, -0.2, 0.5), acc(1.0, -2.0, 9.0), grav(0.0, 0.0, -9.81);
  auto f = [&](const MatrixXd& g) -> MatrixXd {
    Eigen::Matrix<double, 9, 1> coords;
    coords << omega, acc + g.topLeftCorner<3, 3>() * grav, g.block<3, 1>(0, 3);
    return se23_basis().matrize(coords) * g;
  };
  for (int rep = 0; rep < 30; ++rep) {
    const MatrixXd g1 = se23.exp(SE23Group::Tangent(oracle::randn(9)));
    const MatrixXd g2 = se23.exp(SE23Group::Tangent(oracle::randn(9)));
    CHECK(group_affine_defect(f, g1, g2) < 1e-10);
  }
}

TEST_CASE("group-affine defect: DP-law gyro-bias field is not affine") {
  const Vector3d omega(0.3, -0.2, 0.5);
  auto f = [&omega](const MatrixXd& g) -> MatrixXd {
    MatrixXd out = MatrixXd::Zero(7, 7);
    const Vector3d beta = g.block<3, 1>(3, 6);
    out.topLeftCorner<3, 3>() = skew(omega - beta) * g.topLeftCorner<3, 3>();
    return out;
  };
  auto dp_sample = [] {
    RotBias e{so3_exp(oracle::randn(3).head<3>()), oracle::randn(3).head<3>(),
              BiasLaw::kDirectProduct};
    return MatrixXd(BiasGroup::dp_embed(e));
  };
  int big = 0;
  for (int rep = 0; rep < 50; ++rep) {
    if (group_affine_defect(f, dp_sample(), dp_sample()) > 0.01) ++big;
  }
  CHECK(big >= 45);
}

TEST_CASE("characterized fields") {
  const auto& basis = so3_basis();
  SUBCASE("zero field, zero generator") {
    CharacterizedField cf{MatrixXd::Zero(3, 3), VectorXd::Zero(3), VectorXd::Zero(3)};
    const MatrixXd g = so3_exp(Vector3d(0.2, -0.1, 0.4));
    CHECK(maxabs(characterized_field_eval(basis, cf, g)) < 1e-15);
    CHECK(maxabs(tangent_linear_generator(basis, cf)) == 0.0);
  }
  SUBCASE("D = 0: generator is adbar(Y2)") {
    CharacterizedField cf{MatrixXd::Zero(3, 3), VectorXd::Zero(3),
                          VectorXd(Vector3d(0.5, -1.0, 2.0))};
    CHECK(maxabs(tangent_linear_generator(basis, cf) - adbar_so3(Vector3d(0.5, -1.0, 2.0))) <
          1e-14);
  }
  SUBCASE("inner derivation on so(3) builds a group-affine field") {
    CharacterizedField cf{MatrixXd(adbar_so3(Vector3d(0.3, 0.7, -0.2))), VectorXd::Zero(3),
                          VectorXd(Vector3d(0.1, 0.0, -0.4))};
    auto f = [&](const MatrixXd& g) { return characterized_field_eval(basis, cf, g); };
    for (int rep = 0; rep < 10; ++rep) {
      const MatrixXd g1 = so3_exp(oracle::randn(3, 0.6).head<3>());
      const MatrixXd g2 = so3_exp(oracle::randn(3, 0.6).head<3>());
      CHECK(group_affine_defect(f, g1, g2) < 1e-9);
    }
  }
  SUBCASE("non-derivations are rejected") {
    MatrixXd bad = MatrixXd::Identity(3, 3);  // identity is not a derivation on so(3)
    CharacterizedField cf{bad, VectorXd::Zero(3), VectorXd::Zero(3)};
    CHECK_THROWS_AS(characterized_field_eval(basis, cf, Matrix3d(so3_exp(Vector3d(0.1, 0, 0)))),
                    NotADerivation);
  }
}

TEST_CASE("the SE(2,3) IMU field in characterized form") {
  // D maps (d, u, w) -> (0, 0, u); Y1 = (0, g, 0); Y2 = (omega, a, 0)
  const Vector3d omega(0.3, -0.2, 0.5), acc(1.0, -2.0, 9.0), grav(0.0, 0.0, -9.81);
  MatrixXd dbar = MatrixXd::Zero(9, 9);
  dbar.block<3, 3>(6, 3) = Matrix3d::Identity();
  VectorXd y1 = VectorXd::Zero(9);
  y1.segment<3>(3) = grav;
  VectorXd y2 = VectorXd::Zero(9);
  y2.segment<3>(0) = omega;
  y2.segment<3>(3) = acc;
  const CharacterizedField cf{dbar, y1, y2};

  CHECK(derivation_defect(se23_basis(), dbar) < 1e-14);

  SE23Group se23;
  auto direct = [&](const MatrixXd& g) -> MatrixXd {
    Eigen::Matrix<double, 9, 1> coords;
    coords << omega, acc + g.topLeftCorner<3, 3>() * grav, g.block<3, 1>(0, 3);
    return se23_basis().matrize(coords) * g;
  };
  for (int rep = 0; rep < 10; ++rep) {
    const MatrixXd g = se23.exp(SE23Group::Tangent(oracle::randn_rot_bounded(9, 0.05, 2.0)));
    CHECK(maxabs(characterized_field_eval(se23_basis(), cf, g) - direct(g)) < 1e-9);
  }
}

TEST_CASE("integral identities") {
  const MatrixXd zero = MatrixXd::Zero(3, 3);
  CHECK(maxabs(int_exp(zero) - Matrix3d::Identity()) < 1e-15);
  CHECK(maxabs(int_s_exp(zero) - 0.5 * Matrix3d::Identity()) < 1e-15);
  const MatrixXd a = skew(Vector3d(0, 0, 1));
  CHECK(maxabs(int_exp(a) - oracle::gl_int_exp(a)) < 1e-10);
  CHECK(maxabs(int_s_exp(a) - oracle::gl_int_s_exp(a)) < 1e-10);
  for (int rep = 0; rep < 10; ++rep) {
    const MatrixXd s = skew(oracle::randn(3).head<3>());
    CHECK(maxabs(int_exp(s) - oracle::gl_int_exp(s)) < 1e-10);
    CHECK(maxabs(int_s_exp(s) - oracle::gl_int_s_exp(s)) < 1e-10);
  }
  MatrixXd nilpotent = MatrixXd::Zero(2, 2);
  nilpotent(0, 1) = 1.0;
  CHECK_THROWS_AS(int_exp(nilpotent), NotNormalCommuting);
}

TEST_CASE("n_matrix: limits, oracle, and continuity at the series switch") {
  CHECK(maxabs(n_matrix(Vector3d::Zero(), Vector3d(1, 0, 0)) - 0.5 * skew(Vector3d(1, 0, 0))) <
        1e-15);
  const Vector3d d(0.7, 0.1, -0.2), u(1, 2, 3);
  CHECK(maxabs(n_matrix(d, u) - oracle::gl_n_matrix(d, u)) < 1e-10);
  CHECK(maxabs(n_matrix(Vector3d(1e-8, 0, 0), Vector3d(0, 1, 0)) -
               0.5 * skew(Vector3d(0, 1, 0))) < 1e-8);
  // both branches agree at the switch point
  const Vector3d eps(0.9e-4, 0.3e-4, -0.2e-4);
  CHECK(maxabs(detail::n_matrix_series(eps, u) - oracle::gl_n_matrix(eps, u)) < 1e-14);
  for (int rep = 0; rep < 100; ++rep) {
    const Vector3d dd = oracle::randn_rot_bounded(3, 1e-6, 3.0).head<3>();
    const Vector3d uu = oracle::randn(3, 2.0).head<3>();
    CHECK(maxabs(n_matrix(dd, uu) - oracle::gl_n_matrix(dd, uu)) < 1e-8);
  }
}

TEST_CASE("braiding identity on sampled algebra elements") {
  const LieAlgebraBasis* bases[] = {&s_basis(), &so3_basis(), &se3_basis(), &se23_basis()};
  for (const LieAlgebraBasis* b : bases) {
    for (int rep = 0; rep < 10; ++rep) {
      const VectorXd x = oracle::randn(b->dim(), 0.7), y = oracle::randn(b->dim(), 0.7);
      const MatrixXd ex = MatrixXd(b->matrize(x)).exp();
      const MatrixXd lhs = ex * b->matrize(y) * ex.inverse();
      const MatrixXd rhs = b->matrize(MatrixXd(b->adbar(x)).exp() * y);
      CHECK(maxabs(lhs - rhs) < 1e-10);
    }
  }
}

TEST_CASE("derivative of the exponential map by central differences") {
  const auto& basis = se3_basis();
  const VectorXd a = oracle::randn(6, 0.5), b = oracle::randn(6, 0.5),
                 c = oracle::randn(6, 0.3);
  auto path = [&](double t) { return VectorXd(a + t * b + t * t * c); };
  const double h = 1e-5;
  for (double t : {0.0, 0.4, 1.1}) {
    const MatrixXd num =
        (MatrixXd(basis.matrize(path(t + h))).exp() - MatrixXd(basis.matrize(path(t - h))).exp()) /
        (2.0 * h);
    const VectorXd xdot = b + 2.0 * t * c;
    const MatrixXd ana = MatrixXd(basis.matrize(path(t))).exp() *
                         basis.matrize(jbar_series(basis.adbar(path(t))) * xdot);
    CHECK(maxabs(num - ana) / std::max(1.0, maxabs(ana)) < 1e-6);
  }
}

TEST_CASE("operator identities behind the TSSDE derivation") {
  for (int rep = 0; rep < 20; ++rep) {
    const Vector6d xi = oracle::randn_rot_bounded(6, 1e-3, 2.8);
    const Matrix6d ad = adbar_se3(xi);
    const MatrixXd jinv = wbar_se3(-xi);  // Jbar^{-1}(xi) = Wbar(-xi)
    const MatrixXd emad = MatrixXd(-ad).exp();
    CHECK(maxabs(jinv * emad - wbar_se3(xi)) < 1e-10);
    CHECK(maxabs(jinv * (emad - Matrix6d::Identity()) + ad) < 1e-10);
  }
}

TEST_CASE("directional derivatives match finite differences") {
  const double h = 1e-6;
  for (int rep = 0; rep < 50; ++rep) {
    const Vector3d d = oracle::randn_rot_bounded(3, 1e-3, 2.9).head<3>();
    const Vector3d u = oracle::randn(3, 2.0).head<3>();
    const Vector3d dd = oracle::randn(3).head<3>().normalized();
    const Vector3d du = oracle::randn(3).head<3>().normalized();

    const Matrix3d fd_exp = (so3_exp(d + h * dd) - so3_exp(d - h * dd)) / (2 * h);
    CHECK(maxabs(so3_exp_dir(d, dd) - fd_exp) < 1e-7);

    const Matrix3d fd_j = (jbar_so3(d + h * dd) - jbar_so3(d - h * dd)) / (2 * h);
    CHECK(maxabs(jbar_so3_dir(d, dd) - fd_j) < 1e-7);

    const Matrix3d fd_w = (wbar_so3(d + h * dd) - wbar_so3(d - h * dd)) / (2 * h);
    CHECK(maxabs(wbar_so3_dir(d, dd) - fd_w) < 1e-7);

    const Matrix3d fd_n =
        (n_matrix(d + h * dd, u + h * du) - n_matrix(d - h * dd, u - h * du)) / (2 * h);
    CHECK(maxabs(n_matrix_dir(d, u, dd, du) - fd_n) < 1e-6);
  }
}
