#include "support/meshes.hpp"
#include "vemsad/poly.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace vemsad;
using namespace vemsad::testing;

namespace {

double factorial(int n) { return n <= 1 ? 1.0 : n * factorial(n - 1); }

Polynomial random_polynomial(const MonomialBasis& basis, std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-1, 1);
  Vector c(basis.size());
  for (int i = 0; i < c.size(); ++i) c[i] = u(rng);
  return Polynomial(basis, c);
}

int rank_of(const Matrix& g) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(g);
  const double top = es.eigenvalues().maxCoeff();
  int r = 0;
  for (int i = 0; i < es.eigenvalues().size(); ++i) r += es.eigenvalues()[i] > 1e-10 * top;
  return r;
}

}  // namespace

TEST(Poly, BasisDimensions) {
  const PolyMesh mesh = single_box();
  EXPECT_EQ(cell_basis(mesh, 0, 0).size(), 1);
  EXPECT_EQ(cell_basis(mesh, 0, 1).size(), 4);
  EXPECT_EQ(cell_basis(mesh, 0, 2).size(), 10);
  EXPECT_EQ(face_basis(mesh, 0, 2).size(), 6);
  EXPECT_DOUBLE_EQ(cell_basis(mesh, 0, 0).eval(Vec3(0.3, 0.2, 0.9))[0], 1.0);
  const auto& idx = multi_indices(3);
  for (int i = 0; i < static_cast<int>(idx.size()); ++i) EXPECT_EQ(monomial_index(idx[i]), i);
}

TEST(Poly, ScaledMonomialsBoundedOnConvexCell) {
  std::mt19937 rng(1);
  for (const PolyMesh& mesh : {single_box(), voronoi_cell(4), single_prism(0.2)}) {
    const MonomialBasis b = cell_basis(mesh, 0, 2);
    const QuadratureRule q = cell_quadrature(mesh, 0, 6);
    for (const Vec3& x : q.points) EXPECT_LE(b.eval(x).cwiseAbs().maxCoeff(), 1.0);
  }
}

TEST(Poly, UnitCubeMoments) {
  // Order-6 cell rules carry negative weights; summation error is ~1e-14.
  const MomentTable t = integrate_monomials(single_box(), 0, 6);
  EXPECT_NEAR(t[0], 1.0, 1e-13);
  const auto& idx = multi_indices(6);
  for (int i = 0; i < static_cast<int>(idx.size()); ++i) {
    const auto& a = idx[i].a;
    if (a[0] % 2 || a[1] % 2 || a[2] % 2) EXPECT_NEAR(t[i], 0.0, 1e-13);
  }
}

TEST(Poly, TetrahedronMomentsMatchFactorialFormula) {
  const PolyMesh mesh = single_tetrahedron();
  for (int k = 0; k <= 6; ++k) {
    const QuadratureRule q = cell_quadrature(mesh, 0, k);
    for (const MultiIndex& m : multi_indices(k)) {
      if (m.degree() != k) continue;
      double num = 0.0;
      for (std::size_t i = 0; i < q.size(); ++i)
        num += q.weights[i] * std::pow(q.points[i].x(), m.a[0]) * std::pow(q.points[i].y(), m.a[1]) *
               std::pow(q.points[i].z(), m.a[2]);
      const double exact = factorial(m.a[0]) * factorial(m.a[1]) * factorial(m.a[2]) / factorial(k + 3);
      EXPECT_NEAR(num, exact, 1e-13 * exact);
    }
  }
}

TEST(Poly, CubeMomentsMatchAnalytic) {
  const PolyMesh mesh = single_box(Vec3(0.2, -0.1, 0.4), Vec3(1.0, 0.7, 0.9));
  for (int k = 0; k <= 6; ++k) {
    const QuadratureRule q = cell_quadrature(mesh, 0, k);
    for (const MultiIndex& m : multi_indices(k)) {
      double num = 0.0;
      for (std::size_t i = 0; i < q.size(); ++i)
        num += q.weights[i] * std::pow(q.points[i].x(), m.a[0]) * std::pow(q.points[i].y(), m.a[1]) *
               std::pow(q.points[i].z(), m.a[2]);
      auto prim = [](double lo, double hi, int a) { return (std::pow(hi, a + 1) - std::pow(lo, a + 1)) / (a + 1); };
      const double exact = prim(0.2, 1.0, m.a[0]) * prim(-0.1, 0.7, m.a[1]) * prim(0.4, 0.9, m.a[2]);
      EXPECT_NEAR(num, exact, 1e-12 * std::max(1e-3, std::abs(exact)));
    }
  }
}

TEST(Poly, Calculus) {
  const PolyMesh mesh = voronoi_cell(2);
  const MonomialBasis b = cell_basis(mesh, 0, 2);
  const VectorPolynomial g = grad(Polynomial::monomial(b, 0));
  for (const auto& c : g) EXPECT_EQ(c.coefficients().cwiseAbs().maxCoeff(), 0.0);
  const Polynomial d = div(scaled_position(b));
  EXPECT_NEAR(d(b.center), 3.0 / b.scale, 1e-13);
  EXPECT_NEAR(d(b.center + Vec3(0.1, 0.2, 0.3)), 3.0 / b.scale, 1e-13);
}

TEST(Poly, SymGradMatchesFiniteDifferences) {
  std::mt19937 rng(3);
  const PolyMesh mesh = single_prism(0.4);
  const MonomialBasis b = cell_basis(mesh, 0, 2);
  const VectorPolynomial v{random_polynomial(b, rng), random_polynomial(b, rng), random_polynomial(b, rng)};
  const TensorPolynomial e = sym_grad(v);
  std::uniform_real_distribution<double> u(0.1, 0.3);
  for (int s = 0; s < 10; ++s) {
    const Vec3 x(u(rng), u(rng), u(rng) + 0.3);
    Mat3 jac;
    const double h = 1e-5;
    for (int j = 0; j < 3; ++j) {
      const Vec3 dx = h * Vec3::Unit(j);
      jac.col(j) = (eval(v, x + dx) - eval(v, x - dx)) / (2 * h);
    }
    const Mat3 fd = 0.5 * (jac + jac.transpose());
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) EXPECT_NEAR(e[i][j](x), fd(i, j), 1e-8);
  }
}

TEST(Poly, LaplacianMatchesDoubleFiniteDifferences) {
  std::mt19937 rng(5);
  const PolyMesh mesh = single_box();
  MonomialBasis b = cell_basis(mesh, 0, 4);
  for (int i = 0; i < b.size(); ++i) {
    const Polynomial p = Polynomial::monomial(b, i);
    const Polynomial lap = div(grad(p));
    const Polynomial lap2 = laplacian(p);
    const Vec3 x(0.3, 0.6, 0.45);
    const double h = 1e-3;
    double fd = 0.0;
    for (int j = 0; j < 3; ++j) fd += (p(x + h * Vec3::Unit(j)) - 2 * p(x) + p(x - h * Vec3::Unit(j))) / (h * h);
    EXPECT_NEAR(lap(x), fd, 1e-6);
    EXPECT_NEAR(lap2(x), lap(x), 1e-12);
  }
}

TEST(Poly, FaceQuadrature) {
  const PolyMesh cube = single_box();
  const QuadratureRule q = face_quadrature(cube, 0, 1);
  EXPECT_NEAR(q.total_weight(), 1.0, 1e-14);
  const FaceBasis fb = face_basis(cube, 0, 1);
  double m1 = 0, m2 = 0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    const Vector v = fb.eval(q.points[i]);
    m1 += q.weights[i] * v[1];
    m2 += q.weights[i] * v[2];
  }
  EXPECT_NEAR(m1, 0.0, 1e-15);
  EXPECT_NEAR(m2, 0.0, 1e-15);
}

TEST(Poly, PentagonCubicMatchesSubtriangleRule) {
  // Pentagon in the plane z = 0.3 of a prism-like cell.
  std::vector<Vec3> v = {{0, 0, 0.3}, {1, 0, 0.3}, {1.3, 0.7, 0.3}, {0.5, 1.2, 0.3}, {-0.2, 0.6, 0.3}};
  std::vector<Vec3> all = v;
  for (const Vec3& x : v) all.push_back(x + Vec3(0, 0, 1));
  const PolyMesh mesh = PolyMesh::from_polyhedra(
      all, {{{0, 4, 3, 2, 1}, {5, 6, 7, 8, 9}, {0, 1, 6, 5}, {1, 2, 7, 6}, {2, 3, 8, 7}, {3, 4, 9, 8}, {4, 0, 5, 9}}});
  int face = -1;
  for (int f = 0; f < mesh.num_faces(); ++f)
    if (mesh.face(f).vertices.size() == 5 && std::abs(mesh.face(f).centroid.z() - 0.3) < 1e-12) face = f;
  ASSERT_GE(face, 0);
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> u(-1, 1);
  double c[20];
  for (double& x : c) x = u(rng);
  auto p = [&](const Vec3& x) {
    const auto& idx = multi_indices(3);
    double s = 0;
    for (int i = 0; i < 20; ++i) s += c[i] * std::pow(x.x(), idx[i].a[0]) * std::pow(x.y(), idx[i].a[1]) * std::pow(x.z(), idx[i].a[2]);
    return s;
  };
  const QuadratureRule q = face_quadrature(mesh, face, 3);
  double num = 0;
  for (std::size_t i = 0; i < q.size(); ++i) num += q.weights[i] * p(q.points[i]);
  // Degree-3 exact 7-point rule (vertices, edge midpoints, centroid) on a fan from vertex 0.
  double oracle = 0;
  for (int t = 1; t + 1 < 5; ++t) {
    const Vec3 a = v[0], b = v[t], d = v[t + 1];
    const double area = 0.5 * (b - a).cross(d - a).norm();
    oracle += area * (3.0 / 60 * (p(a) + p(b) + p(d)) + 8.0 / 60 * (p(0.5 * (a + b)) + p(0.5 * (b + d)) + p(0.5 * (d + a))) +
                      27.0 / 60 * p((a + b + d) / 3));
  }
  EXPECT_NEAR(num, oracle, 1e-12 * std::abs(oracle) + 1e-13);
}

TEST(Poly, DecompositionRanks) {
  for (const PolyMesh& mesh : {single_box(), voronoi_cell(6)}) {
    const MonomialBasis b = cell_basis(mesh, 0, 3);
    for (int k = 0; k <= 2; ++k) {
      const int full = 3 * poly_dim3(k);
      auto g = gradient_basis(b, k);
      auto gc = gradient_complement_basis(b, k);
      EXPECT_EQ(static_cast<int>(g.size() + gc.size()), full);
      g.insert(g.end(), gc.begin(), gc.end());
      EXPECT_EQ(rank_of(vector_gram(mesh, 0, g)), full);
      auto r = curl_basis(b, k);
      auto rc = curl_complement_basis(b, k);
      EXPECT_EQ(static_cast<int>(r.size() + rc.size()), full);
      r.insert(r.end(), rc.begin(), rc.end());
      EXPECT_EQ(rank_of(vector_gram(mesh, 0, r)), full);
    }
  }
}
