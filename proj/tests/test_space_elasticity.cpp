#include "support/meshes.hpp"
#include "support/oracles.hpp"
#include "vemsad/space_elasticity.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace vemsad;
using namespace vemsad::testing;

namespace {

std::vector<PolyMesh> sample_cells() {
  std::mt19937 rng(7);
  std::vector<PolyMesh> out;
  out.push_back(single_box());
  out.push_back(single_prism(0.3));
  out.push_back(single_tetrahedron());
  out.push_back(voronoi_cell(3));
  out.push_back(random_affine(single_box(), rng));
  return out;
}

}  // namespace

TEST(ElasticityElement, ProjectionReproducesQuadratics) {
  for (const PolyMesh& mesh : sample_cells()) {
    ElasticityElement el(mesh, 0);
    const Matrix pd = el.energy_projection() * el.interpolation();
    EXPECT_LT((pd - Matrix::Identity(30, 30)).cwiseAbs().maxCoeff(), 1e-11);
  }
}

TEST(ElasticityElement, PolynomialDofsAreInterpolation) {
  // DoFs computed by quadrature match the nodal/moment definitions on a quadratic.
  const PolyMesh mesh = single_prism(0.2);
  ElasticityElement el(mesh, 0);
  const VectorField v = [](const Vec3& x) {
    return Vec3(x.x() * x.y() + 0.3 * x.z(), x.z() * x.z() - x.x(), 1.0 + x.y() * x.z());
  };
  const Vector d = el.interpolate(v);
  const Cell& c = mesh.cell(0);
  for (int lv = 0; lv < static_cast<int>(c.vertices.size()); ++lv)
    EXPECT_LT((d.segment<3>(3 * el.vertex_slot(lv)) - v(mesh.vertex(c.vertices[lv]))).norm(), 1e-13);
  for (int le = 0; le < static_cast<int>(c.edges.size()); ++le)
    EXPECT_LT((d.segment<3>(3 * el.edge_slot(le)) - v(mesh.edge(c.edges[le]).midpoint)).norm(), 1e-13);
  // (h/|P|) int div v xhat_i, div v = 2y
  const MonomialBasis b = el.basis();
  const QuadratureRule q = cell_quadrature(mesh, 0, 6);
  for (int i = 0; i < 3; ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < q.size(); ++k) s += q.weights[k] * 2 * q.points[k].y() * b.local(q.points[k])[i];
    EXPECT_NEAR(d[el.div_offset() + i], s * c.diameter / c.volume, 1e-13);
  }
}

TEST(ElasticityElement, ProjectionIsEnergyOrthogonal) {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(-1, 1);
  for (const PolyMesh& mesh : sample_cells()) {
    ElasticityElement el(mesh, 0);
    Vector v(el.num_dofs());
    for (int i = 0; i < v.size(); ++i) v[i] = u(rng);
    // a(v - D Pi v, q) = 0 for every quadratic q, through the projection's own gram
    const Vector r = el.strain_gram() * (el.energy_projection() * (v - el.interpolation() * el.energy_projection() * v));
    EXPECT_LT(r.cwiseAbs().maxCoeff(), 1e-11 * el.strain_gram().cwiseAbs().maxCoeff());
  }
}

TEST(ElasticityElement, StabilisationVanishesOnPolynomialsAndIsSpdOnKernel) {
  for (const PolyMesh& mesh : sample_cells()) {
    ElasticityElement el(mesh, 0);
    const Matrix S = el.stabilisation();
    EXPECT_LT((S * el.interpolation()).cwiseAbs().maxCoeff(), 1e-11 * S.cwiseAbs().maxCoeff());
    Eigen::JacobiSVD<Matrix> svd(el.energy_projection(), Eigen::ComputeFullV);
    const Matrix Z = svd.matrixV().rightCols(el.num_dofs() - ElasticityElement::kProjDim);
    Eigen::SelfAdjointEigenSolver<Matrix> es(Z.transpose() * S * Z);
    EXPECT_GT(es.eigenvalues().minCoeff(), 1e-8 * es.eigenvalues().maxCoeff());
  }
}

TEST(ElasticityElement, SymmetryOfStiffness) {
  ElasticityElement el(voronoi_cell(5), 0);
  const Matrix K = el.stiffness(3.0);
  EXPECT_LT((K - K.transpose()).cwiseAbs().maxCoeff(), 1e-12 * K.cwiseAbs().maxCoeff());
  // rigid motions carry no energy
  const Matrix rbm = el.interpolation().leftCols(1);  // constant x-translation
  EXPECT_LT((K * rbm).norm(), 1e-10 * K.norm());
}

TEST(ElasticityOracle, ExtensionReproducesQuadratics) {
  const PolyMesh mesh = single_box();
  ElasticityElement el(mesh, 0);
  const Matrix G = elasticity_seminorm_gram(mesh, 0, el, 2);
  const Matrix D = el.interpolation();
  // exact int grad p : grad q over the 30 quadratic basis fields
  const QuadratureRule q = cell_quadrature(mesh, 0, 4);
  Matrix exact = Matrix::Zero(30, 30);
  for (std::size_t k = 0; k < q.size(); ++k) {
    const auto g = el.basis().eval_grad(q.points[k]);
    for (int c = 0; c < 3; ++c) exact.block(10 * c, 10 * c, 10, 10) += q.weights[k] * g * g.transpose();
  }
  EXPECT_LT((D.transpose() * G * D - exact).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(ElasticityOracle, StabilisationSpectrallyEquivalentOnUnitCube) {
  const PolyMesh mesh = single_box();
  ElasticityElement el(mesh, 0);
  const Matrix G = elasticity_seminorm_gram(mesh, 0, el);
  const Vector ev = kernel_generalized_eigenvalues(el.stabilisation(), G, el.energy_projection());
  EXPECT_GE(ev.minCoeff(), 1e-2);
  EXPECT_LE(ev.maxCoeff(), 1e2);
}
