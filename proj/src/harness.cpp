#include "vemsad/harness.hpp"

#include "vemsad/mesh_io.hpp"

#include <Eigen/LU>

#include <chrono>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <random>

namespace vemsad {

namespace {

// Step of the Richardson differences applied to the material law.
constexpr double kLawStep = 1e-2;
// Independent step for the residual oracle.
constexpr double kOracleStep = 2e-2;

Mat3 sym(const Mat3& a) { return 0.5 * (a + a.transpose()); }

}  // namespace

ManufacturedCase::ManufacturedCase(std::string name, std::shared_ptr<const MaterialLaw> law, JetVectorField u,
                                   JetScalarField phi, BoundaryPredicate mechanics, BoundaryPredicate diffusion)
    : name_(std::move(name)),
      law_(std::move(law)),
      u_(std::move(u)),
      phi_(std::move(phi)),
      mech_(std::move(mechanics)),
      diff_(std::move(diffusion)) {
  if (!law_ || !u_ || !phi_ || !mech_ || !diff_) throw ConstraintError("manufactured case needs a law, u, phi and both predicates");
  exact_.u = [this](const Vec3& x) {
    const JetVec U = u_(jet_point(x));
    return Vec3(U[0].v, U[1].v, U[2].v);
  };
  exact_.grad_u = [this](const Vec3& x) { return point(x).grad_u; };
  exact_.p = [this](const Vec3& x) { return point(x).p; };
  exact_.phi = [this](const Vec3& x) { return phi_(jet_point(x)).v; };
  exact_.zeta = [this](const Vec3& x) { return Vec3(mobility(x) * phi_(jet_point(x)).g); };
  // div(M grad phi) with d_i M = -M (d_i Minv) M; d_i Minv is differenced
  // along the path (eps + s d_i eps, p + s d_i p, x + s e_i), so only the
  // law is re-evaluated.
  exact_.div_zeta = [this](const Vec3& x) {
    const Point pt = point(x);
    const Mat3 eps = sym(pt.grad_u);
    const Mat3 M = sym(law_->eval_Minv(eps, pt.p, x).inverse());
    double d = (M * pt.phi.H).trace();
    for (int i = 0; i < 3; ++i) {
      Mat3 deps;
      for (int j = 0; j < 3; ++j) deps.row(j) = pt.hess_u[j].col(i).transpose();
      deps = sym(deps);
      const auto along = [&](const Vec3& y) {
        const double s = y[i] - x[i];
        return Mat3(law_->eval_Minv(eps + s * deps, pt.p + s * pt.grad_p[i], y));
      };
      const Mat3 dminv = richardson_derivative(along, x, i, kLawStep);
      d -= (M * dminv * M).row(i).dot(pt.phi.g);
    }
    return d;
  };
}

ManufacturedCase::Point ManufacturedCase::point(const Vec3& x) const {
  const JetVec U = u_(jet_point(x));
  Point pt;
  pt.phi = phi_(jet_point(x));
  double div = 0.0;
  pt.grad_div_u.setZero();
  for (int i = 0; i < 3; ++i) {
    pt.grad_u.row(i) = U[i].g.transpose();
    pt.hess_u[i] = U[i].H;
    pt.lap_u[i] = U[i].H.trace();
    div += U[i].g[i];
    pt.grad_div_u += U[i].H.row(i).transpose();
  }
  const PhysicalParameters& k = law_->params();
  pt.p = -k.lambda * div + law_->eval_ell(pt.phi.v);
  pt.grad_p = -k.lambda * pt.grad_div_u + law_->eval_dell(pt.phi.v) * pt.phi.g;
  return pt;
}

Vec3 ManufacturedCase::body_force(const Vec3& x) const {
  const Point pt = point(x);
  return -law_->params().mu * (pt.lap_u + pt.grad_div_u) + pt.grad_p;
}

Mat3 ManufacturedCase::stress(const Vec3& x) const {
  const Point pt = point(x);
  return 2.0 * law_->params().mu * sym(pt.grad_u) - pt.p * Mat3::Identity();
}

Mat3 ManufacturedCase::mobility(const Vec3& x) const {
  const Point pt = point(x);
  return sym(law_->eval_Minv(sym(pt.grad_u), pt.p, x).inverse());
}

double ManufacturedCase::source(const Vec3& x) const {
  return law_->params().theta * exact_.phi(x) - exact_.div_zeta(x);
}

ProblemData ManufacturedCase::problem_data(const PolyMesh& mesh) const {
  ProblemData d;
  d.body_force = [this](const Vec3& x) { return body_force(x); };
  d.source = [this](const Vec3& x) { return source(x); };
  d.displacement = exact_.u;
  d.traction = [this](const Vec3& x, const Vec3& n) { return Vec3(stress(x) * n); };
  d.concentration = exact_.phi;
  d.normal_flux = [this](const Vec3& x, const Vec3& n) { return exact_.zeta(x).dot(n); };
  d.mechanics_tags = tag_boundary(mesh, mech_);
  d.diffusion_tags = tag_boundary(mesh, diff_);
  return d;
}

FaceTag unit_cube_example1_tag(const Vec3& c) {
  constexpr double tol = 1e-9;
  for (int i = 0; i < 3; ++i)
    if (std::abs(c[i] - 1.0) < tol) return FaceTag::neumann;
  return FaceTag::dirichlet;
}

ManufacturedCase example1_case(StressReading reading) {
  auto u = [](const JetVec& X) -> JetVec {
    const Jet &x = X[0], &y = X[1], &z = X[2];
    return {(x * x + x * cos(x) * sin(y)) / 5.0, (y * y + x * cos(y) * sin(x)) / 5.0,
            (z * z + x * cos(x) * cos(y)) / 5.0};
  };
  auto phi = [](const JetVec& X) -> Jet {
    const Jet &x = X[0], &y = X[1], &z = X[2];
    return cos(M_PI * y) + sin(M_PI * x) + x * x + y * y + z * z;
  };
  std::shared_ptr<const MaterialLaw> law = example1_law(reading);
  return ManufacturedCase("example1", law, u, phi, unit_cube_example1_tag, unit_cube_example1_tag);
}

// ---------------------------------------------------------------------------
// Residual oracle

double ResidualReport::max() const { return std::max({momentum, pressure, flux, mass}); }

ResidualReport manufactured_residuals(const ManufacturedCase& c, int points, unsigned seed, const Box& box) {
  const ExactSolution& ex = c.exact();
  const PhysicalParameters& k = c.params();
  const MaterialLaw& law = c.law();
  const double h = kOracleStep * (box.upper - box.lower).maxCoeff();
  auto grad_num = [&](const VectorField& v, const Vec3& x) {
    Mat3 g;
    for (int j = 0; j < 3; ++j) g.col(j) = richardson_derivative(v, x, j, h);
    return g;
  };
  auto eps_num = [&](const Vec3& x) { return sym(grad_num(ex.u, x)); };

  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> U(0.05, 0.95);
  ResidualReport r;
  for (int n = 0; n < points; ++n) {
    Vec3 x;
    for (int i = 0; i < 3; ++i) x[i] = box.lower[i] + U(rng) * (box.upper[i] - box.lower[i]);

    // p + lambda div u - ell(phi) = 0
    const double div_u = eps_num(x).trace();
    const double p = ex.p(x), ell = law.eval_ell(ex.phi(x));
    r.pressure = std::max(r.pressure, std::abs(p + k.lambda * div_u - ell) /
                                          std::max({1.0, std::abs(p), std::abs(k.lambda * div_u), std::abs(ell)}));

    // -div sigma = f
    Vec3 div_sigma = Vec3::Zero();
    Vec3 grad_p = Vec3::Zero();
    for (int j = 0; j < 3; ++j) {
      const Vec3 col = richardson_derivative(
          [&](const Vec3& y) { return Vec3((2 * k.mu * eps_num(y) - ex.p(y) * Mat3::Identity()).col(j)); }, x, j, h);
      div_sigma += col;
      grad_p[j] = richardson_derivative(ex.p, x, j, h);
    }
    const Vec3 f = c.body_force(x);
    r.momentum = std::max(r.momentum, (div_sigma + f).norm() / std::max({1.0, f.norm(), grad_p.norm()}));

    // zeta = M grad phi
    Vec3 grad_phi;
    for (int j = 0; j < 3; ++j) grad_phi[j] = richardson_derivative(ex.phi, x, j, h);
    const Mat3 M = law.eval_Minv(eps_num(x), p, x).inverse();
    const Vec3 zeta = ex.zeta(x);
    r.flux = std::max(r.flux, (zeta - M * grad_phi).norm() / std::max(1e-300, std::max(zeta.norm(), (M * grad_phi).norm())));

    // theta phi - div zeta = g
    double div_zeta = 0.0;
    for (int j = 0; j < 3; ++j) div_zeta += richardson_derivative([&](const Vec3& y) { return ex.zeta(y)[j]; }, x, j, h);
    const double g = c.source(x);
    const double th = k.theta * ex.phi(x);
    r.mass = std::max(r.mass, std::abs(th - div_zeta - g) / std::max({1e-300, std::abs(g), std::abs(div_zeta), std::abs(th)}));
  }
  return r;
}

// ---------------------------------------------------------------------------
// Errors

FieldNorms compute_errors(Discretization& disc, const MaterialLaw& law, const SolutionState& st, const ExactSolution& ex,
                          int quad_order) {
  const PolyMesh& mesh = disc.mesh();
  const PhysicalParameters& k = disc.params();
  double su = 0, sp = 0, sz = 0, sd = 0, sf = 0;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const MonomialBasis b = cell_basis(mesh, c, 2);
    const QuadratureRule q = cell_quadrature(mesh, c, quad_order);
    const Vector& uc = st.u_projection[c];
    const Vector& zc = st.zeta_projection[c];
    const std::vector<int> g = disc.dofs().flux_dofs(c);
    const Eigen::RowVectorXd& row = disc.flux_divergence_row(c);
    double div_h = 0;
    for (std::size_t i = 0; i < g.size(); ++i) div_h += row[i] * st.zeta[g[i]];
    div_h /= mesh.cell(c).volume;
    for (std::size_t i = 0; i < q.size(); ++i) {
      const Vec3& x = q.points[i];
      const double w = q.weights[i];
      const Vector m = b.eval(x);
      const Matrix gm = b.eval_grad(x);
      Mat3 gh;
      for (int r = 0; r < 3; ++r) gh.row(r) = uc.segment<10>(10 * r).transpose() * gm;
      const Mat3 eps = sym(ex.grad_u(x));
      su += w * (eps - sym(gh)).squaredNorm();
      const double p = ex.p(x);
      const double ep = p - st.p.segment<4>(4 * c).dot(m.head(4));
      sp += w * ep * ep;
      const Vec3 zh(zc.segment<4>(0).dot(m.head(4)), zc.segment<4>(4).dot(m.head(4)), zc.segment<4>(8).dot(m.head(4)));
      const Vec3 ez = ex.zeta(x) - zh;
      sz += w * ez.dot(law.eval_Minv(eps, p, x) * ez);
      const double ed = ex.div_zeta(x) - div_h;
      sd += w * ed * ed;
      const double ef = ex.phi(x) - st.phi[c];
      sf += w * ef * ef;
    }
  }
  FieldNorms e;
  e.u = std::sqrt(2 * k.mu * su);
  e.p = std::sqrt((1 / (2 * k.mu) + 1 / k.lambda) * sp);
  e.zeta = std::sqrt(sz + k.M * sd);
  e.phi = std::sqrt((1 / k.M + k.theta) * sf);
  return e;
}

// ---------------------------------------------------------------------------
// Convergence study

std::vector<double> observed_rates(const std::vector<double>& h, const std::vector<double>& e) {
  std::vector<double> r;
  for (std::size_t i = 0; i + 1 < h.size() && i + 1 < e.size(); ++i)
    r.push_back(std::log(e[i] / e[i + 1]) / std::log(h[i] / h[i + 1]));
  return r;
}

double least_squares_rate(const std::vector<double>& h, const std::vector<double>& e) {
  const std::size_t n = std::min(h.size(), e.size());
  if (n < 2) return 0.0;
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += std::log(h[i]);
    my += std::log(e[i]);
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (std::log(h[i]) - mx) * (std::log(e[i]) - my);
    sxx += (std::log(h[i]) - mx) * (std::log(h[i]) - mx);
  }
  return sxy / sxx;
}

std::vector<PolyMesh> structured_family(StructuredKind kind, const std::vector<int>& ns) {
  std::vector<PolyMesh> out;
  for (int n : ns) out.push_back(build_structured_mesh(kind, n));
  return out;
}

ErrorReport run_convergence(const ManufacturedCase& c, const std::vector<PolyMesh>& meshes, const std::string& family,
                            const ConvergenceConfig& config) {
  ErrorReport rep;
  rep.case_name = c.name();
  rep.family = family;
  for (const PolyMesh& mesh : meshes) {
    const auto t0 = std::chrono::steady_clock::now();
    Discretization disc(mesh, c.params(), c.problem_data(mesh), config.assembly);
    const CoupledSolution sol = solve_coupled(disc, c.law(), config.fixed_point);
    LevelResult lv;
    lv.label = std::to_string(mesh.num_cells());
    lv.cells = mesh.num_cells();
    lv.h = mesh.max_cell_diameter();
    lv.errors = compute_errors(disc, c.law(), sol.state, c.exact(), config.error_order);
    lv.iterations = sol.trace.iterations();
    lv.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rep.levels.push_back(lv);
    if (config.on_level) config.on_level(lv);
  }
  std::vector<double> h, e;
  for (const auto& lv : rep.levels) {
    h.push_back(lv.h);
    e.push_back(lv.errors.total());
  }
  rep.rates = observed_rates(h, e);
  rep.least_squares_rate = least_squares_rate(h, e);
  if (!rep.rates.empty() && !(rep.rates.back() >= 0.5)) {  // also catches nan
    std::ostringstream msg;
    msg << "final observed rate " << rep.rates.back() << " is below 0.5";
    rep.warnings.push_back({msg.str()});
  }
  return rep;
}

void ErrorReport::write_text(std::ostream& os) const {
  os << "case " << case_name << ", family " << family << "\n";
  os << std::setw(8) << "cells" << std::setw(12) << "h" << std::setw(12) << "e_u" << std::setw(12) << "e_p"
     << std::setw(12) << "e_zeta" << std::setw(12) << "e_phi" << std::setw(12) << "e_total" << std::setw(8) << "rate"
     << std::setw(6) << "its" << std::setw(10) << "time[s]" << "\n";
  os << std::scientific << std::setprecision(3);
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const LevelResult& l = levels[i];
    os << std::setw(8) << l.cells << std::setw(12) << l.h << std::setw(12) << l.errors.u << std::setw(12) << l.errors.p
       << std::setw(12) << l.errors.zeta << std::setw(12) << l.errors.phi << std::setw(12) << l.errors.total();
    os << std::fixed << std::setprecision(2);
    if (i == 0)
      os << std::setw(8) << "-";
    else
      os << std::setw(8) << rates[i - 1];
    os << std::setw(6) << l.iterations << std::setw(10) << l.seconds << "\n" << std::scientific << std::setprecision(3);
  }
  os << std::fixed << std::setprecision(3) << "least-squares rate " << least_squares_rate << "\n";
  for (const auto& w : warnings) os << "warning: " << w.message << "\n";
  os << std::defaultfloat;
}

void ErrorReport::write_csv(std::ostream& os) const {
  os << "cells,h,e_u,e_p,e_zeta,e_phi,e_total,rate,iterations,seconds\n" << std::setprecision(10);
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const LevelResult& l = levels[i];
    os << l.cells << ',' << l.h << ',' << l.errors.u << ',' << l.errors.p << ',' << l.errors.zeta << ',' << l.errors.phi
       << ',' << l.errors.total() << ',';
    if (i > 0) os << rates[i - 1];
    os << ',' << l.iterations << ',' << l.seconds << '\n';
  }
}

void ErrorReport::write_plot_data(std::ostream& os) const {
  os << "# h e_u e_p e_zeta e_phi e_total\n" << std::setprecision(10);
  for (const auto& l : levels)
    os << l.h << ' ' << l.errors.u << ' ' << l.errors.p << ' ' << l.errors.zeta << ' ' << l.errors.phi << ' '
       << l.errors.total() << '\n';
}

// ---------------------------------------------------------------------------
// Example 2

CylinderTags cylinder_tags(const PolyMesh& mesh, bool clamped) {
  CylinderTags t;
  t.mechanics.assign(mesh.num_faces(), FaceTag::interior);
  t.diffusion.assign(mesh.num_faces(), FaceTag::interior);
  for (int f = 0; f < mesh.num_faces(); ++f) {
    const Face& face = mesh.face(f);
    if (!face.on_boundary()) continue;
    Vec3 radial(face.centroid.x(), face.centroid.y(), 0.0);
    if (std::abs(face.normal.z()) > 0.5) {
      t.bases.push_back(f);
      t.mechanics[f] = clamped ? FaceTag::dirichlet : FaceTag::neumann;
      t.diffusion[f] = FaceTag::neumann;
    } else if (face.normal.dot(radial) > 0) {
      t.outer.push_back(f);
      t.mechanics[f] = FaceTag::neumann;
      t.diffusion[f] = FaceTag::dirichlet;
    } else {
      t.inner.push_back(f);
      t.mechanics[f] = FaceTag::dirichlet;
      t.diffusion[f] = FaceTag::neumann;
    }
  }
  if (t.outer.empty() || t.inner.empty()) throw ConstraintError("mesh does not look like a perforated cylinder about the z axis");
  return t;
}

LithiationResult run_lithiation(const PolyMesh& mesh, const LithiationConfig& config, const std::filesystem::path& vtk_out) {
  LawOptions lo;
  lo.reading = config.reading;
  std::shared_ptr<const MaterialLaw> law = LawRegistry::instance().make(config.law, lo);
  const CylinderTags tags = cylinder_tags(mesh, config.clamped);

  ProblemData data;
  data.mechanics_tags = tags.mechanics;
  data.diffusion_tags = tags.diffusion;
  data.concentration = [c = config.boundary_concentration](const Vec3&) { return c; };
  data.traction = [t = config.traction](const Vec3& x, const Vec3& n) {
    const Vec3 radial(x.x(), x.y(), 0.0);
    if (std::abs(n.z()) > 0.5 || n.dot(radial) <= 0) return Vec3(Vec3::Zero());
    return Vec3(t * n);
  };

  Discretization disc(mesh, law->params(), data, config.assembly);
  CoupledSolution sol = solve_coupled(disc, *law, config.fixed_point);

  LithiationResult r;
  r.trace = sol.trace;
  const SolutionState& st = sol.state;
  r.finite = st.u.allFinite() && st.p.allFinite() && st.zeta.allFinite() && st.phi.allFinite();
  std::vector<char> outer_vertex(mesh.num_vertices(), 0);
  for (int f : tags.outer)
    for (int v : mesh.face(f).vertices) outer_vertex[v] = 1;
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    const double m = st.u.segment<3>(3 * disc.dofs().vertex_slot(v)).norm();
    r.max_displacement = std::max(r.max_displacement, m);
    if (outer_vertex[v]) r.max_outer_displacement = std::max(r.max_outer_displacement, m);
  }
  for (int f = 0; f < mesh.num_faces(); ++f)
    if (tags.diffusion[f] == FaceTag::neumann)
      for (int b = 0; b < 3; ++b) r.max_abs_neumann_flux = std::max(r.max_abs_neumann_flux, std::abs(st.zeta[disc.dofs().flux_face_dof(f, b)]));
  if (!vtk_out.empty()) export_vtk(disc, st, vtk_out);
  r.state = std::move(sol.state);
  return r;
}

LithiationResult run_lithiation(const std::filesystem::path& mesh_path, const LithiationConfig& config,
                                const std::filesystem::path& vtk_out) {
  const PolyMesh mesh = load_mesh(mesh_path);
  return run_lithiation(mesh, config, vtk_out);
}

void export_vtk(Discretization& disc, const SolutionState& st, const std::filesystem::path& path) {
  const PolyMesh& mesh = disc.mesh();
  const int nc = mesh.num_cells(), nv = mesh.num_vertices();
  if (st.u.size() != disc.dofs().num_displacement() || st.zeta.size() != disc.dofs().num_flux() || st.phi.size() != nc)
    throw DimensionError("state does not match the discretization");
  VtuField p{"pressure", 1, true, {}}, phi{"concentration", 1, true, {}}, div{"flux_divergence", 1, true, {}};
  VtuField flux{"flux", 3, true, {}}, mag{"flux_magnitude", 1, true, {}}, upi{"projected_displacement", 3, true, {}};
  VtuField disp{"displacement", 3, false, {}};
  for (int c = 0; c < nc; ++c) {
    p.values.push_back(st.p[4 * c]);  // centred monomials: value at the centroid
    phi.values.push_back(st.phi[c]);
    const std::vector<int> g = disc.dofs().flux_dofs(c);
    const Eigen::RowVectorXd& row = disc.flux_divergence_row(c);
    double d = 0;
    for (std::size_t i = 0; i < g.size(); ++i) d += row[i] * st.zeta[g[i]];
    div.values.push_back(d / mesh.cell(c).volume);
    Vec3 z = Vec3::Zero(), u = Vec3::Zero();
    if (!st.zeta_projection.empty()) z = Vec3(st.zeta_projection[c][0], st.zeta_projection[c][4], st.zeta_projection[c][8]);
    if (!st.u_projection.empty()) u = Vec3(st.u_projection[c][0], st.u_projection[c][10], st.u_projection[c][20]);
    for (int k = 0; k < 3; ++k) {
      flux.values.push_back(z[k]);
      upi.values.push_back(u[k]);
    }
    mag.values.push_back(z.norm());
  }
  for (int v = 0; v < nv; ++v)
    for (int k = 0; k < 3; ++k) disp.values.push_back(st.u[3 * disc.dofs().vertex_slot(v) + k]);
  write_vtu(mesh, path, {p, phi, div, flux, mag, upi, disp});
}

}  // namespace vemsad
