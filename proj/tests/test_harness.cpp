#include "support/meshes.hpp"
#include "support/vtu_arrays.hpp"
#include "vemsad/harness.hpp"
#include "vemsad/mesh_io.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

using namespace vemsad;
using namespace vemsad::testing;

namespace {

FaceTag clamp_x0(const Vec3& c) { return std::abs(c.x()) < 1e-12 ? FaceTag::dirichlet : FaceTag::neumann; }

// u in (P2)^3, p in P1, zeta in (P1)^3; phi quadratic so only its mean is representable.
ManufacturedCase polynomial_case(double mu) {
  PhysicalParameters k;
  k.mu = mu;
  k.lambda = 5;
  k.theta = 0.5;
  k.M = 2;
  std::shared_ptr<const MaterialLaw> law = constant_law(k, Mat3::Identity(), 0.3, 0.0);
  auto u = [](const JetVec& X) -> JetVec {
    const Jet &x = X[0], &y = X[1], &z = X[2];
    return {0.1 * x * x + 0.2 * x * y - 0.05 * z * z + 0.3 * y, 0.1 * y * z + 0.2 * x * x + 0.1 * x,
            0.15 * x * z - 0.1 * y * y + 0.2 * z};
  };
  auto phi = [](const JetVec& X) -> Jet { return X[0] * X[0] + 0.5 * X[1] * X[2] - X[2]; };
  return ManufacturedCase("poly", law, u, phi, clamp_x0, unit_cube_example1_tag);
}

SolutionState insert_exact(Discretization& disc, const ExactSolution& ex) {
  const PolyMesh& mesh = disc.mesh();
  SolutionState st;
  st.u = disc.interpolate_displacement(ex.u);
  st.zeta = disc.interpolate_flux(ex.zeta);
  st.p = Vector::Zero(disc.dofs().num_pressure());
  st.phi = Vector::Zero(mesh.num_cells());
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const auto gu = disc.dofs().displacement_dofs(c);
    Vector lu(gu.size());
    for (std::size_t i = 0; i < gu.size(); ++i) lu[i] = st.u[gu[i]];
    st.u_projection.push_back(disc.elasticity_projection(c) * lu);
    const auto gz = disc.dofs().flux_dofs(c);
    Vector lz(gz.size());
    for (std::size_t i = 0; i < gz.size(); ++i) lz[i] = st.zeta[gz[i]];
    st.zeta_projection.push_back(disc.flux_projection(c) * lz);
    // linear p in centred scaled monomials: value at the centre, then h * gradient
    const MonomialBasis b = cell_basis(mesh, c, 1);
    const double h = 1e-4;
    st.p[4 * c] = ex.p(b.center);
    for (int i = 0; i < 3; ++i) {
      const Vec3 e = Vec3::Unit(i) * h;
      st.p[4 * c + 1 + i] = b.scale * (ex.p(b.center + e) - ex.p(b.center - e)) / (2 * h);
    }
    const QuadratureRule q = cell_quadrature(mesh, c, 4);
    double s = 0.0;
    for (std::size_t k = 0; k < q.size(); ++k) s += q.weights[k] * ex.phi(q.points[k]);
    st.phi[c] = s / mesh.cell(c).volume;
  }
  return st;
}

}  // namespace

TEST(Manufactured, Example1ResidualsBeforeAnySolve) {
  const ResidualReport r = manufactured_residuals(example1_case(), 100);
  EXPECT_LE(r.max(), 1e-8);
  const ResidualReport s = manufactured_residuals(example1_case(StressReading::scalar), 100);
  EXPECT_LE(s.max(), 1e-8);
}

TEST(Manufactured, DerivedDataMatchesHandComputation) {
  // u = (x^2 + x cos x sin y, ...)/5 at a point, first-derivative spot checks.
  const ManufacturedCase c = example1_case();
  const Vec3 x(0.3, 0.6, 0.2);
  const Mat3 g = c.exact().grad_u(x);
  EXPECT_NEAR(g(0, 0), (2 * 0.3 + std::cos(0.3) * std::sin(0.6) - 0.3 * std::sin(0.3) * std::sin(0.6)) / 5, 1e-14);
  EXPECT_NEAR(g(2, 2), 2 * 0.2 / 5, 1e-14);
  const double phi = std::cos(M_PI * 0.6) + std::sin(M_PI * 0.3) + 0.09 + 0.36 + 0.04;
  EXPECT_NEAR(c.exact().phi(x), phi, 1e-14);
  const double div_u = g.trace();
  EXPECT_NEAR(c.exact().p(x), -1e3 * div_u + 1 + phi * phi / (1 + phi * phi), 1e-10);
  // zeta = M grad phi with M = 1e-3 exp(-1e-4 tr sigma) I
  const Mat3 sigma = c.stress(x);
  const Vec3 grad_phi(M_PI * std::cos(M_PI * 0.3) + 0.6, -M_PI * std::sin(M_PI * 0.6) + 1.2, 0.4);
  EXPECT_LT((c.exact().zeta(x) - 1e-3 * std::exp(-1e-4 * sigma.trace()) * grad_phi).norm(), 1e-15);
  EXPECT_LT((c.mobility(x) - 1e-3 * std::exp(-1e-4 * sigma.trace()) * Mat3::Identity()).norm(), 1e-16);
}

TEST(Norms, ExactlyInsertedFieldsHaveZeroError) {
  const ManufacturedCase mc = polynomial_case(2.0);
  const PolyMesh mesh = build_structured_mesh(StructuredKind::prism, 2);
  Discretization disc(mesh, mc.params(), mc.problem_data(mesh));
  const SolutionState st = insert_exact(disc, mc.exact());
  const FieldNorms e = compute_errors(disc, mc.law(), st, mc.exact());
  EXPECT_LT(e.u, 1e-11);
  EXPECT_LT(e.p, 1e-9);  // coefficients from central differences
  EXPECT_LT(e.zeta, 1e-11);
  // phi: distance to the cell means, independent quadrature
  double s = 0.0;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const QuadratureRule q = cell_quadrature(mesh, c, 8);
    for (std::size_t k = 0; k < q.size(); ++k) s += q.weights[k] * std::pow(mc.exact().phi(q.points[k]) - st.phi[c], 2);
  }
  EXPECT_NEAR(e.phi, std::sqrt((1 / 2.0 + 0.5) * s), 1e-12);
}

TEST(Norms, MuScalingOfDisplacementNorm) {
  const PolyMesh mesh = build_structured_mesh(StructuredKind::hex, 2);
  double eu[2];
  for (int i = 0; i < 2; ++i) {
    const ManufacturedCase mc = polynomial_case(i == 0 ? 1.5 : 6.0);
    Discretization disc(mesh, mc.params(), mc.problem_data(mesh));
    SolutionState st = insert_exact(disc, mc.exact());
    for (Vector& v : st.u_projection) v.setZero();
    eu[i] = compute_errors(disc, mc.law(), st, mc.exact()).u;
  }
  EXPECT_NEAR(eu[1] / eu[0], 2.0, 1e-13);
}

TEST(Norms, QuadratureRefinementChangesErrorsBelowOnePercent) {
  const ManufacturedCase mc = example1_case();
  const PolyMesh mesh = build_structured_mesh(StructuredKind::hex, 2);
  Discretization disc(mesh, mc.params(), mc.problem_data(mesh));
  const auto sol = solve_coupled(disc, mc.law());
  const FieldNorms a = compute_errors(disc, mc.law(), sol.state, mc.exact(), 6);
  const FieldNorms b = compute_errors(disc, mc.law(), sol.state, mc.exact(), 12);
  for (auto [x, y] : {std::pair{a.u, b.u}, {a.p, b.p}, {a.zeta, b.zeta}, {a.phi, b.phi}}) EXPECT_LT(std::abs(x - y), 0.01 * y);
}

TEST(Rates, ObservedAndLeastSquares) {
  const std::vector<double> h = {0.5, 0.25, 0.125, 0.0625};
  std::vector<double> e;
  for (double x : h) e.push_back(3 * x * x);
  for (double r : observed_rates(h, e)) EXPECT_NEAR(r, 2.0, 1e-12);
  EXPECT_NEAR(least_squares_rate(h, e), 2.0, 1e-12);
  e = {1.0, 0.6, 0.25, 0.13};
  // slope of log e vs log h by the normal equations, done by hand
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < 4; ++i) {
    const double lx = std::log(h[i]), ly = std::log(e[i]);
    sx += lx, sy += ly, sxx += lx * lx, sxy += lx * ly;
  }
  EXPECT_NEAR(least_squares_rate(h, e), (4 * sxy - sx * sy) / (4 * sxx - sx * sx), 1e-12);
}

TEST(Convergence, ReportAndAnomalyWarning) {
  const ManufacturedCase mc = polynomial_case(2.0);
  // the same mesh twice: no refinement, so no observable rate
  std::vector<PolyMesh> meshes = structured_family(StructuredKind::hex, {2, 2});
  int seen = 0;
  ConvergenceConfig cfg;
  cfg.on_level = [&](const LevelResult&) { ++seen; };
  const ErrorReport rep = run_convergence(mc, meshes, "hex", cfg);
  EXPECT_EQ(seen, 2);
  ASSERT_EQ(rep.rates.size(), 1u);
  EXPECT_FALSE(rep.rates[0] >= 0.5);
  EXPECT_EQ(rep.warnings.size(), 1u);

  std::ostringstream csv, txt, plot;
  rep.write_csv(csv);
  rep.write_text(txt);
  rep.write_plot_data(plot);
  int lines = 0;
  std::istringstream in(csv.str());
  for (std::string l; std::getline(in, l);) ++lines;
  EXPECT_EQ(lines, 3);
  EXPECT_NE(txt.str().find("least-squares"), std::string::npos);
  EXPECT_NE(plot.str().find('#'), std::string::npos);
}

TEST(Export, ZeroStateRoundTrip) {
  const PolyMesh mesh = voronoi_mesh(8, 5);
  ProblemData d;
  d.mechanics_tags = tag_boundary(mesh, clamp_x0);
  d.diffusion_tags = tag_boundary(mesh, clamp_x0);
  Discretization disc(mesh, PhysicalParameters{}, d);
  SolutionState st;
  st.u = Vector::Zero(disc.dofs().num_displacement());
  st.p = Vector::Zero(disc.dofs().num_pressure());
  st.zeta = Vector::Zero(disc.dofs().num_flux());
  st.phi = Vector::Zero(mesh.num_cells());
  const auto path = std::filesystem::temp_directory_path() / "vemsad_zero.vtu";
  export_vtk(disc, st, path);
  const auto arrays = read_vtu_arrays(path);
  for (const char* name : {"pressure", "concentration", "flux_divergence", "flux", "flux_magnitude", "displacement"}) {
    ASSERT_TRUE(arrays.count(name)) << name;
    for (double v : arrays.at(name)) EXPECT_EQ(v, 0.0);
  }
  EXPECT_EQ(arrays.at("displacement").size(), 3u * mesh.num_vertices());
  const PolyMesh back = load_mesh(path);
  EXPECT_EQ(back.num_vertices(), mesh.num_vertices());
  EXPECT_EQ(back.num_faces(), mesh.num_faces());
  EXPECT_EQ(back.num_cells(), mesh.num_cells());
  for (int c = 0; c < mesh.num_cells(); ++c) EXPECT_NEAR(back.cell(c).volume, mesh.cell(c).volume, 1e-12);
  std::filesystem::remove(path);
}

TEST(Export, VertexDisplacementIsTheVertexDof) {
  const ManufacturedCase mc = polynomial_case(2.0);
  const PolyMesh mesh = build_structured_mesh(StructuredKind::prism, 2);
  Discretization disc(mesh, mc.params(), mc.problem_data(mesh));
  const auto sol = solve_coupled(disc, mc.law());
  const auto path = std::filesystem::temp_directory_path() / "vemsad_disp.vtu";
  export_vtk(disc, sol.state, path);
  const auto disp = read_vtu_arrays(path).at("displacement");
  for (int v = 0; v < mesh.num_vertices(); ++v)
    for (int k = 0; k < 3; ++k) EXPECT_NEAR(disp[3 * v + k], sol.state.u[3 * disc.dofs().vertex_slot(v) + k], 1e-15 + 1e-12 * std::abs(disp[3 * v + k]));
  std::filesystem::remove(path);
}

TEST(Lithiation, CylinderTagsSplitPerField) {
  const PolyMesh mesh = perforated_cylinder(1, 5, 5, 2, 12, 2);
  const CylinderTags t = cylinder_tags(mesh, false);
  EXPECT_EQ(t.inner.size(), 12u * 2);
  EXPECT_EQ(t.outer.size(), 12u * 2);
  EXPECT_EQ(t.bases.size(), 2u * 2 * 12);
  for (int f : t.inner) {
    EXPECT_EQ(t.mechanics[f], FaceTag::dirichlet);
    EXPECT_EQ(t.diffusion[f], FaceTag::neumann);
  }
  for (int f : t.outer) {
    EXPECT_EQ(t.mechanics[f], FaceTag::neumann);
    EXPECT_EQ(t.diffusion[f], FaceTag::dirichlet);
  }
  for (int f : t.bases) EXPECT_EQ(t.mechanics[f], FaceTag::neumann);
  const CylinderTags tc = cylinder_tags(mesh, true);
  for (int f : tc.bases) EXPECT_EQ(tc.mechanics[f], FaceTag::dirichlet);
}

TEST(Lithiation, ZeroDataGivesZeroSolution) {
  const PolyMesh mesh = perforated_cylinder(1, 5, 5, 2, 12, 2);
  LithiationConfig cfg;
  cfg.traction = 0.0;
  cfg.boundary_concentration = 0.0;
  const LithiationResult r = run_lithiation(mesh, cfg);
  EXPECT_TRUE(r.trace.converged);
  EXPECT_EQ(r.state.u.norm() + r.state.p.norm() + r.state.zeta.norm() + r.state.phi.norm(), 0.0);
}

TEST(Lithiation, ClampingReducesOuterDisplacement) {
  const PolyMesh mesh = perforated_cylinder(1, 5, 5, 2, 16, 3);
  LithiationConfig cfg;
  const LithiationResult free = run_lithiation(mesh, cfg);
  cfg.clamped = true;
  const LithiationResult clamped = run_lithiation(mesh, cfg);
  EXPECT_TRUE(free.finite && clamped.finite);
  EXPECT_EQ(free.max_abs_neumann_flux, 0.0);
  EXPECT_EQ(clamped.max_abs_neumann_flux, 0.0);
  EXPECT_GT(free.max_outer_displacement, 0.0);
  EXPECT_LE(clamped.max_outer_displacement, free.max_outer_displacement);
  EXPECT_NE(clamped.max_displacement, free.max_displacement);
}
