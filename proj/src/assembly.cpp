#include "vemsad/assembly.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <limits>
#include <string>

namespace vemsad {

namespace {

// Triplets are flushed into the accumulated matrix every kChunk cells so the
// triplet buffer never holds more than a few cells' worth of entries.
constexpr int kChunk = 256;

using Triplets = std::vector<Eigen::Triplet<double>>;

void flush(SparseMatrix& acc, Triplets& t, int rows, int cols) {
  if (t.empty()) return;
  SparseMatrix part(rows, cols);
  part.setFromTriplets(t.begin(), t.end());
  if (acc.nonZeros() == 0)
    acc = std::move(part);
  else
    acc += part;
  t.clear();
}

Vec3 outward_normal(const PolyMesh& mesh, int cell, int lf) {
  const Cell& c = mesh.cell(cell);
  return c.orientation[lf] * mesh.face(c.faces[lf]).normal;
}

}  // namespace

BoundaryTags effective_tags(const PolyMesh& mesh, const BoundaryTags& explicit_tags) {
  const BoundaryTags& t = explicit_tags.empty() ? mesh.boundary_tags() : explicit_tags;
  if (static_cast<int>(t.size()) != mesh.num_faces())
    throw DimensionError("boundary tags: expected " + std::to_string(mesh.num_faces()) + " entries, got " +
                         std::to_string(t.size()));
  for (int f = 0; f < mesh.num_faces(); ++f) {
    const bool bnd = mesh.face(f).on_boundary();
    if (bnd && (t[f] == FaceTag::untagged || t[f] == FaceTag::interior))
      throw ConstraintError("boundary face " + std::to_string(f) + " has no boundary condition");
    if (!bnd && t[f] != FaceTag::interior) throw ConstraintError("interior face " + std::to_string(f) + " carries a boundary tag");
  }
  return t;
}

// ---------------------------------------------------------------------------
// DofMap

DofMap::DofMap(const PolyMesh& mesh, const BoundaryTags& mechanics, const BoundaryTags& diffusion)
    : mesh_(&mesh),
      nv_(mesh.num_vertices()),
      ne_(mesh.num_edges()),
      nf_(mesh.num_faces()),
      nc_(mesh.num_cells()),
      mech_(effective_tags(mesh, mechanics)),
      diff_(effective_tags(mesh, diffusion)) {
  nu_ = 3 * (nv_ + ne_ + nf_) + 3 * nc_;
  nz_ = 3 * nf_ + 3 * nc_;

  std::vector<char> fixed_u(nu_, 0), fixed_z(nz_, 0);
  for (int f = 0; f < nf_; ++f) {
    const Face& face = mesh.face(f);
    if (mech_[f] == FaceTag::dirichlet) {
      auto fix = [&](int slot) {
        for (int c = 0; c < 3; ++c) fixed_u[3 * slot + c] = 1;
      };
      for (int v : face.vertices) fix(vertex_slot(v));
      for (int e : face.edges) fix(edge_slot(e));
      fix(face_slot(f));
    }
    if (diff_[f] == FaceTag::neumann)
      for (int b = 0; b < 3; ++b) fixed_z[flux_face_dof(f, b)] = 1;
  }

  u_free_.assign(nu_, -1);
  z_free_.assign(nz_, -1);
  for (int g = 0; g < nu_; ++g) {
    if (fixed_u[g]) {
      u_fixed_list_.push_back(g);
    } else {
      u_free_[g] = static_cast<int>(u_free_list_.size());
      u_free_list_.push_back(g);
    }
  }
  for (int g = 0; g < nz_; ++g) {
    if (fixed_z[g]) {
      z_fixed_list_.push_back(g);
    } else {
      z_free_[g] = static_cast<int>(z_free_list_.size());
      z_free_list_.push_back(g);
    }
  }
}

std::vector<int> DofMap::displacement_dofs(int cell) const {
  const Cell& c = mesh_->cell(cell);
  std::vector<int> out;
  out.reserve(3 * (c.vertices.size() + c.edges.size() + c.faces.size()) + 3);
  auto push = [&](int slot) {
    for (int k = 0; k < 3; ++k) out.push_back(3 * slot + k);
  };
  for (int v : c.vertices) push(vertex_slot(v));
  for (int e : c.edges) push(edge_slot(e));
  for (int f : c.faces) push(face_slot(f));
  for (int i = 0; i < 3; ++i) out.push_back(divergence_dof(cell, i));
  return out;
}

std::vector<int> DofMap::flux_dofs(int cell) const {
  const Cell& c = mesh_->cell(cell);
  std::vector<int> out;
  out.reserve(3 * c.faces.size() + 3);
  for (int f : c.faces)
    for (int b = 0; b < 3; ++b) out.push_back(flux_face_dof(f, b));
  for (int i = 0; i < 3; ++i) out.push_back(flux_interior_dof(cell, i));
  return out;
}

// ---------------------------------------------------------------------------
// BlockSystem

SparseMatrix BlockSystem::full_matrix() const {
  const int n = num_primal(), m = num_multiplier();
  Triplets t;
  t.reserve(A.nonZeros() + 2 * B.nonZeros() + C.nonZeros());
  for (int k = 0; k < A.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(A, k); it; ++it) t.emplace_back(it.row(), it.col(), it.value());
  for (int k = 0; k < B.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(B, k); it; ++it) {
      t.emplace_back(n + it.row(), it.col(), it.value());
      t.emplace_back(it.col(), n + it.row(), it.value());
    }
  for (int k = 0; k < C.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(C, k); it; ++it) t.emplace_back(n + it.row(), n + it.col(), -it.value());
  SparseMatrix K(n + m, n + m);
  K.setFromTriplets(t.begin(), t.end());
  return K;
}

Vector BlockSystem::full_rhs() const {
  Vector r(num_primal() + num_multiplier());
  r << rhs_primal, rhs_multiplier;
  return r;
}

// ---------------------------------------------------------------------------
// Discretization

Discretization::Discretization(const PolyMesh& mesh, PhysicalParameters params, ProblemData data, AssemblyOptions options)
    : mesh_(&mesh),
      params_(params),
      data_(std::move(data)),
      options_(options),
      dofs_(mesh, data_.mechanics_tags, data_.diffusion_tags) {
  params_.validate();
  if (!(options_.stab_scale_elasticity > 0) || !(options_.stab_scale_flux > 0))
    throw ConstraintError("stabilisation scales must be positive");

  // Prescribed displacement: point values at vertices/edge midpoints, face
  // means on clamped faces.
  u_lift_ = Vector::Zero(dofs_.num_displacement());
  if (data_.displacement) {
    const BoundaryTags& tags = dofs_.mechanics_tags();
    for (int f = 0; f < mesh.num_faces(); ++f) {
      if (tags[f] != FaceTag::dirichlet) continue;
      const Face& face = mesh.face(f);
      for (int v : face.vertices) u_lift_.segment<3>(3 * dofs_.vertex_slot(v)) = data_.displacement(mesh.vertex(v));
      for (int e : face.edges) u_lift_.segment<3>(3 * dofs_.edge_slot(e)) = data_.displacement(mesh.edge(e).midpoint);
      const QuadratureRule q = face_quadrature(mesh, f, options_.data_order);
      Vec3 sum = Vec3::Zero();
      for (std::size_t i = 0; i < q.size(); ++i) sum += q.weights[i] * data_.displacement(q.points[i]);
      u_lift_.segment<3>(3 * dofs_.face_slot(f)) = sum / face.area;
    }
  }

  // Prescribed normal flux: face moments of zeta . n_f (n_f = outward here).
  z_lift_ = Vector::Zero(dofs_.num_flux());
  if (data_.normal_flux) {
    const BoundaryTags& tags = dofs_.diffusion_tags();
    for (int f = 0; f < mesh.num_faces(); ++f) {
      if (tags[f] != FaceTag::neumann) continue;
      const FaceBasis fb = face_basis(mesh, f, 1);
      const QuadratureRule q = face_quadrature(mesh, f, options_.data_order);
      Vector mom = Vector::Zero(3);
      for (std::size_t i = 0; i < q.size(); ++i) mom += q.weights[i] * data_.normal_flux(q.points[i], mesh.face(f).normal) * fb.eval(q.points[i]);
      z_lift_.segment<3>(dofs_.flux_face_dof(f, 0)) = mom / mesh.face(f).area;
    }
  }
}

void Discretization::build_elasticity_cache() {
  const PolyMesh& mesh = *mesh_;
  const int nc = mesh.num_cells();
  const int nfree = dofs_.num_free_displacement();
  const int np = dofs_.num_pressure();
  if (dofs_.constrained_displacement().empty())
    throw ConstraintError("elasticity needs a clamped boundary part (no mechanics Dirichlet face)");

  elas_pi_.assign(nc, Matrix());
  p_moments_.assign(nc, Eigen::Vector4d::Zero());
  elas_c_.assign(nc, Matrix());
  elas_A_ = SparseMatrix(nfree, nfree);
  elas_B_ = SparseMatrix(np, nfree);
  elas_rhs_u_ = Vector::Zero(nfree);
  elas_rhs_p_base_ = Vector::Zero(np);

  const BoundaryTags& tags = dofs_.mechanics_tags();
  Triplets ta, tb;
  for (int c = 0; c < nc; ++c) {
    const ElasticityElement el(mesh, c);
    const std::vector<int> g = dofs_.displacement_dofs(c);
    const int n = el.num_dofs();
    Matrix A = el.stiffness(params_.mu, options_.stab_scale_elasticity);
    A = (0.5 * (A + A.transpose())).eval();
    const Matrix B = el.coupling();
    elas_c_[c] = el.pressure_mass() / params_.lambda;
    elas_pi_[c] = el.energy_projection();
    for (int a = 0; a < 4; ++a) p_moments_[c][a] = el.moments()[a];

    Vector f = Vector::Zero(n);
    if (data_.body_force) f += el.load(data_.body_force, options_.data_order);
    if (data_.traction) {
      const Cell& cell = mesh.cell(c);
      for (std::size_t lf = 0; lf < cell.faces.size(); ++lf)
        if (tags[cell.faces[lf]] == FaceTag::neumann) {
          const Vec3 n = outward_normal(mesh, c, static_cast<int>(lf));
          f += el.traction(static_cast<int>(lf), [&](const Vec3& x) { return data_.traction(x, n); }, options_.data_order);
        }
    }
    Vector ubar(n);
    for (int i = 0; i < n; ++i) ubar[i] = u_lift_[g[i]];
    const bool lifted = ubar.squaredNorm() > 0;
    if (lifted) f -= A * ubar;
    const Vector gp = lifted ? Vector(-B * ubar) : Vector::Zero(4);

    for (int i = 0; i < n; ++i) {
      const int fi = dofs_.free_displacement(g[i]);
      if (fi < 0) continue;
      elas_rhs_u_[fi] += f[i];
      for (int j = 0; j < n; ++j) {
        const int fj = dofs_.free_displacement(g[j]);
        if (fj >= 0 && A(i, j) != 0.0) ta.emplace_back(fi, fj, A(i, j));
      }
      for (int a = 0; a < 4; ++a)
        if (B(a, i) != 0.0) tb.emplace_back(dofs_.pressure_dof(c, a), fi, B(a, i));
    }
    for (int a = 0; a < 4; ++a) elas_rhs_p_base_[dofs_.pressure_dof(c, a)] += gp[a];

    if ((c + 1) % kChunk == 0) {
      flush(elas_A_, ta, nfree, nfree);
      flush(elas_B_, tb, np, nfree);
    }
  }
  flush(elas_A_, ta, nfree, nfree);
  flush(elas_B_, tb, np, nfree);
  elas_A_.makeCompressed();
  elas_B_.makeCompressed();
  elas_ready_ = true;
  ++counters_.elasticity_matrix;
}

Vector Discretization::elasticity_multiplier_rhs(const MaterialLaw& law, const Vector& phi) {
  if (!elas_ready_) build_elasticity_cache();
  const int nc = mesh_->num_cells();
  if (phi.size() != nc) throw DimensionError("one concentration value per cell expected");
  Vector r = elas_rhs_p_base_;
  for (int c = 0; c < nc; ++c) {
    const double ell = law.eval_ell(phi[c]);
    for (int a = 0; a < 4; ++a) r[dofs_.pressure_dof(c, a)] -= ell * p_moments_[c][a] / params_.lambda;
  }
  ++counters_.elasticity_rhs;
  return r;
}

BlockSystem Discretization::assemble_elasticity(const MaterialLaw& law, const Vector& phi) {
  if (!elas_ready_) build_elasticity_cache();
  BlockSystem s;
  s.A = elas_A_;
  s.B = elas_B_;
  const int nc = mesh_->num_cells();
  Triplets tc;
  tc.reserve(16 * nc);
  for (int c = 0; c < nc; ++c) {
    s.c_blocks.push_back(elas_c_[c]);
    s.c_offsets.push_back(dofs_.pressure_dof(c, 0));
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) tc.emplace_back(dofs_.pressure_dof(c, a), dofs_.pressure_dof(c, b), elas_c_[c](a, b));
  }
  s.C = SparseMatrix(dofs_.num_pressure(), dofs_.num_pressure());
  s.C.setFromTriplets(tc.begin(), tc.end());
  s.rhs_primal = elas_rhs_u_;
  s.rhs_multiplier = elasticity_multiplier_rhs(law, phi);
  return s;
}

void Discretization::build_flux_cache() {
  const PolyMesh& mesh = *mesh_;
  const int nc = mesh.num_cells();
  const BoundaryTags& tags = dofs_.diffusion_tags();
  if (std::none_of(tags.begin(), tags.end(), [](FaceTag t) { return t == FaceTag::dirichlet; }))
    throw ConstraintError("diffusion needs a prescribed-concentration boundary part (no diffusion Dirichlet face)");
  flux_pi_.assign(nc, Matrix());
  flux_stab_.assign(nc, Matrix());
  flux_div_.assign(nc, Eigen::RowVectorXd());
  flux_bc_.assign(nc, Vector());
  source_int_ = Vector::Zero(nc);
  for (int c = 0; c < nc; ++c) {
    const FluxElement el(mesh, c);
    flux_pi_[c] = el.projection();
    flux_stab_[c] = el.stabilisation();
    flux_div_[c] = el.divergence_row();
    Vector bc = Vector::Zero(el.num_dofs());
    if (data_.concentration) {
      const Cell& cell = mesh.cell(c);
      for (int lf = 0; lf < el.num_faces(); ++lf)
        if (tags[cell.faces[lf]] == FaceTag::dirichlet) bc += el.boundary_rhs(lf, data_.concentration, options_.data_order);
    }
    flux_bc_[c] = std::move(bc);
    if (data_.source) {
      const QuadratureRule qd = cell_quadrature(mesh, c, options_.data_order);
      for (std::size_t k = 0; k < qd.size(); ++k) source_int_[c] += qd.weights[k] * data_.source(qd.points[k]);
    }
  }
  flux_ready_ = true;
}

const Matrix& Discretization::elasticity_projection(int cell) {
  if (!elas_ready_) build_elasticity_cache();
  return elas_pi_[cell];
}

const Matrix& Discretization::flux_projection(int cell) {
  if (!flux_ready_) build_flux_cache();
  return flux_pi_[cell];
}

const Eigen::RowVectorXd& Discretization::flux_divergence_row(int cell) {
  if (!flux_ready_) build_flux_cache();
  return flux_div_[cell];
}

double Discretization::pressure_at(const SolutionState& state, int cell, const Vec3& x) const {
  const MonomialBasis b = cell_basis(*mesh_, cell, 1);
  return state.p.segment<4>(4 * cell).dot(b.eval(x));
}

Mat3 Discretization::minv_at(const MaterialLaw& law, const SolutionState& state, int cell, const Vec3& x) const {
  const MonomialBasis b = cell_basis(*mesh_, cell, 2);
  const Matrix g = b.eval_grad(x);
  const Vector& co = state.u_projection[cell];
  Mat3 grad;
  for (int k = 0; k < 3; ++k) grad.row(k) = co.segment<10>(10 * k).transpose() * g;
  const Mat3 eps = 0.5 * (grad + grad.transpose());
  return law.eval_Minv(eps, pressure_at(state, cell, x), x);
}

BlockSystem Discretization::assemble_diffusion(const MaterialLaw& law, const SolutionState& state) {
  if (!flux_ready_) build_flux_cache();
  const PolyMesh& mesh = *mesh_;
  const int nc = mesh.num_cells();
  if (static_cast<int>(state.u_projection.size()) != nc || state.p.size() != dofs_.num_pressure())
    throw DimensionError("diffusion assembly needs the elasticity state of every cell");
  const int nfree = dofs_.num_free_flux();

  BlockSystem s;
  s.A = SparseMatrix(nfree, nfree);
  s.B = SparseMatrix(nc, nfree);
  s.rhs_primal = Vector::Zero(nfree);
  s.rhs_multiplier = Vector::Zero(nc);
  minv_range_.min_eigenvalue = std::numeric_limits<double>::infinity();
  minv_range_.max_eigenvalue = -std::numeric_limits<double>::infinity();

  Triplets ta, tb, tc;
  for (int c = 0; c < nc; ++c) {
    const QuadratureRule q = cell_quadrature(mesh, c, options_.weighted_mass_order);
    const MonomialBasis b1 = cell_basis(mesh, c, 1);
    std::vector<Mat3> minv(q.size());
    for (std::size_t k = 0; k < q.size(); ++k) {
      minv[k] = minv_at(law, state, c, q.points[k]);
      try {
        check_spd(minv[k]);
      } catch (const NonSPDError& e) {
        throw NonSPDError(std::string(e.what()) + " in cell " + std::to_string(c));
      }
      const Eigen::Vector3d ev = Eigen::SelfAdjointEigenSolver<Mat3>(minv[k], Eigen::EigenvaluesOnly).eigenvalues();
      minv_range_.min_eigenvalue = std::min(minv_range_.min_eigenvalue, ev[0]);
      minv_range_.max_eigenvalue = std::max(minv_range_.max_eigenvalue, ev[2]);
    }
    const double scale = minv_at(law, state, c, mesh.cell(c).centroid).trace() / 3.0;
    const Matrix& pi = flux_pi_[c];
    Matrix A = pi.transpose() * flux_weighted_gram(b1, q, minv) * pi + options_.stab_scale_flux * scale * flux_stab_[c];
    A = (0.5 * (A + A.transpose())).eval();
    const Eigen::RowVectorXd& B = flux_div_[c];
    const std::vector<int> g = dofs_.flux_dofs(c);
    const int n = static_cast<int>(g.size());

    Vector f = flux_bc_[c];
    Vector zbar(n);
    for (int i = 0; i < n; ++i) zbar[i] = z_lift_[g[i]];
    double gq = 0.0;
    if (zbar.squaredNorm() > 0) {
      f -= A * zbar;
      gq -= B.dot(zbar);
    }
    s.rhs_multiplier[c] = gq - source_int_[c];

    for (int i = 0; i < n; ++i) {
      const int fi = dofs_.free_flux(g[i]);
      if (fi < 0) continue;
      s.rhs_primal[fi] += f[i];
      for (int j = 0; j < n; ++j) {
        const int fj = dofs_.free_flux(g[j]);
        if (fj >= 0 && A(i, j) != 0.0) ta.emplace_back(fi, fj, A(i, j));
      }
      if (B[i] != 0.0) tb.emplace_back(c, fi, B[i]);
    }
    const double cc = params_.theta * mesh.cell(c).volume;
    s.c_blocks.push_back(Matrix::Constant(1, 1, cc));
    s.c_offsets.push_back(c);
    if (cc != 0.0) tc.emplace_back(c, c, cc);

    if ((c + 1) % kChunk == 0) flush(s.A, ta, nfree, nfree);
  }
  flush(s.A, ta, nfree, nfree);
  s.A.makeCompressed();
  s.B.setFromTriplets(tb.begin(), tb.end());
  s.C = SparseMatrix(nc, nc);
  s.C.setFromTriplets(tc.begin(), tc.end());
  ++counters_.diffusion;
  return s;
}

void Discretization::apply_elasticity_solution(const Vector& x, const Vector& y, SolutionState& state) const {
  if (x.size() != dofs_.num_free_displacement() || y.size() != dofs_.num_pressure())
    throw DimensionError("elasticity solution has the wrong size");
  if (!elas_ready_) throw ConstraintError("elasticity operators have not been assembled");
  state.u = u_lift_;
  const auto& free = dofs_.free_displacement_list();
  for (std::size_t i = 0; i < free.size(); ++i) state.u[free[i]] = x[i];
  state.p = y;
  const int nc = mesh_->num_cells();
  state.u_projection.assign(nc, Vector());
  for (int c = 0; c < nc; ++c) {
    const std::vector<int> g = dofs_.displacement_dofs(c);
    Vector loc(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) loc[i] = state.u[g[i]];
    state.u_projection[c] = elas_pi_[c] * loc;
  }
}

void Discretization::apply_diffusion_solution(const Vector& x, const Vector& y, SolutionState& state) const {
  if (x.size() != dofs_.num_free_flux() || y.size() != dofs_.num_concentration())
    throw DimensionError("diffusion solution has the wrong size");
  if (!flux_ready_) throw ConstraintError("diffusion operators have not been assembled");
  state.zeta = z_lift_;
  const auto& free = dofs_.free_flux_list();
  for (std::size_t i = 0; i < free.size(); ++i) state.zeta[free[i]] = x[i];
  state.phi = y;
  const int nc = mesh_->num_cells();
  state.zeta_projection.assign(nc, Vector());
  for (int c = 0; c < nc; ++c) {
    const std::vector<int> g = dofs_.flux_dofs(c);
    Vector loc(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) loc[i] = state.zeta[g[i]];
    state.zeta_projection[c] = flux_pi_[c] * loc;
  }
}

Vector Discretization::interpolate_displacement(const VectorField& u) const {
  const PolyMesh& mesh = *mesh_;
  const int order = options_.data_order;
  Vector out = Vector::Zero(dofs_.num_displacement());
  for (int v = 0; v < mesh.num_vertices(); ++v) out.segment<3>(3 * dofs_.vertex_slot(v)) = u(mesh.vertex(v));
  for (int e = 0; e < mesh.num_edges(); ++e) out.segment<3>(3 * dofs_.edge_slot(e)) = u(mesh.edge(e).midpoint);
  for (int f = 0; f < mesh.num_faces(); ++f) {
    const QuadratureRule q = face_quadrature(mesh, f, order);
    Vec3 sum = Vec3::Zero();
    for (std::size_t i = 0; i < q.size(); ++i) sum += q.weights[i] * u(q.points[i]);
    out.segment<3>(3 * dofs_.face_slot(f)) = sum / mesh.face(f).area;
  }
  // (h/|P|) int_P div u xhat_i = (h/|P|) (sum_f int_f (u.n) xhat_i - (1/h) int_P u_i)
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const Cell& cell = mesh.cell(c);
    const MonomialBasis b = cell_basis(mesh, c, 1);
    Vec3 bnd = Vec3::Zero();
    for (std::size_t lf = 0; lf < cell.faces.size(); ++lf) {
      const Vec3 n = outward_normal(mesh, c, static_cast<int>(lf));
      const QuadratureRule q = face_quadrature(mesh, cell.faces[lf], order);
      for (std::size_t i = 0; i < q.size(); ++i) bnd += q.weights[i] * u(q.points[i]).dot(n) * b.local(q.points[i]);
    }
    const QuadratureRule q = cell_quadrature(mesh, c, order);
    Vec3 integral = Vec3::Zero();
    for (std::size_t i = 0; i < q.size(); ++i) integral += q.weights[i] * u(q.points[i]);
    const Vec3 d = (b.scale / cell.volume) * (bnd - integral / b.scale);
    for (int i = 0; i < 3; ++i) out[dofs_.divergence_dof(c, i)] = d[i];
  }
  return out;
}

Vector Discretization::interpolate_flux(const VectorField& zeta) const {
  const PolyMesh& mesh = *mesh_;
  const int order = options_.data_order;
  Vector out = Vector::Zero(dofs_.num_flux());
  for (int f = 0; f < mesh.num_faces(); ++f) {
    const Face& face = mesh.face(f);
    const FaceBasis fb = face_basis(mesh, f, 1);
    const QuadratureRule q = face_quadrature(mesh, f, order);
    Vector mom = Vector::Zero(3);
    for (std::size_t i = 0; i < q.size(); ++i) mom += q.weights[i] * zeta(q.points[i]).dot(face.normal) * fb.eval(q.points[i]);
    out.segment<3>(dofs_.flux_face_dof(f, 0)) = mom / face.area;
  }
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const MonomialBasis b = cell_basis(mesh, c, 1);
    const QuadratureRule q = cell_quadrature(mesh, c, order);
    Vec3 m = Vec3::Zero();
    for (std::size_t k = 0; k < q.size(); ++k) {
      const Vec3 v = zeta(q.points[k]);
      const Vec3 xhat = b.local(q.points[k]);
      for (int i = 0; i < 3; ++i) m[i] += q.weights[k] * v.dot(xhat.cross(Vec3::Unit(i)));
    }
    for (int i = 0; i < 3; ++i) out[dofs_.flux_interior_dof(c, i)] = m[i] / mesh.cell(c).volume;
  }
  return out;
}

}  // namespace vemsad
