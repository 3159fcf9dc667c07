#include "vemsad/solver.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#ifdef VEMSAD_HAVE_SUITESPARSE
#include <Eigen/CholmodSupport>
#include <Eigen/UmfPackSupport>
#endif

#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

namespace vemsad {

namespace {

#ifdef VEMSAD_HAVE_SUITESPARSE
using Cholesky = Eigen::CholmodSupernodalLLT<SparseMatrix, Eigen::Lower>;
using LU = Eigen::UmfPackLU<SparseMatrix>;
#else
using Cholesky = Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower>;
using LU = Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>>;
#endif

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

struct SaddlePointSolver::Impl {
  LinearSolverKind kind = LinearSolverKind::automatic;
  bool schur = false;
  bool ready = false;
  SparseMatrix B, Cinv;
  SparseMatrix K;  // UmfPackLU keeps a reference to the factored matrix
  Cholesky chol;
  LU lu;
  int n = 0, m = 0;
};

SaddlePointSolver::SaddlePointSolver(LinearSolverKind kind) : impl_(std::make_unique<Impl>()) { impl_->kind = kind; }
SaddlePointSolver::~SaddlePointSolver() = default;
SaddlePointSolver::SaddlePointSolver(SaddlePointSolver&&) noexcept = default;
SaddlePointSolver& SaddlePointSolver::operator=(SaddlePointSolver&&) noexcept = default;

bool SaddlePointSolver::factored() const { return impl_->ready; }
std::string SaddlePointSolver::method() const { return impl_->schur ? "schur-cholesky" : "lu"; }

void SaddlePointSolver::factor(const BlockSystem& s) {
  Impl& im = *impl_;
  im.ready = false;
  im.n = s.num_primal();
  im.m = s.num_multiplier();
  if (s.B.rows() != im.m || s.B.cols() != im.n) throw DimensionError("saddle system blocks do not match");

  // Invert the diagonal blocks of C when they are all SPD.
  bool invertible = im.kind == LinearSolverKind::automatic && !s.c_blocks.empty() &&
                    s.c_blocks.size() == s.c_offsets.size();
  std::vector<Eigen::Triplet<double>> t;
  for (std::size_t k = 0; invertible && k < s.c_blocks.size(); ++k) {
    const Matrix& blk = s.c_blocks[k];
    Eigen::LLT<Matrix> llt(blk);
    if (llt.info() != Eigen::Success || !(blk.diagonal().minCoeff() > 0)) {
      invertible = false;
      break;
    }
    const Matrix inv = llt.solve(Matrix::Identity(blk.rows(), blk.cols()));
    const Matrix sym = 0.5 * (inv + inv.transpose());
    for (int i = 0; i < blk.rows(); ++i)
      for (int j = 0; j < blk.cols(); ++j) t.emplace_back(s.c_offsets[k] + i, s.c_offsets[k] + j, sym(i, j));
  }

  if (invertible) {
    im.schur = true;
    im.B = s.B;
    im.Cinv = SparseMatrix(im.m, im.m);
    im.Cinv.setFromTriplets(t.begin(), t.end());
    const SparseMatrix CB = im.Cinv * im.B;
    SparseMatrix S = s.A + SparseMatrix(im.B.transpose()) * CB;
    S.makeCompressed();
    im.chol.compute(S);
    if (im.chol.info() != Eigen::Success) throw SolverError("Cholesky factorization of the Schur complement failed");
  } else {
    im.schur = false;
    im.K = s.full_matrix();
    im.K.makeCompressed();
    im.lu.compute(im.K);
    if (im.lu.info() != Eigen::Success) throw SolverError("LU factorization of the saddle-point matrix failed");
  }
  im.ready = true;
}

void SaddlePointSolver::solve(const Vector& f, const Vector& g, Vector& x, Vector& y) const {
  const Impl& im = *impl_;
  if (!im.ready) throw SolverError("solve called before factor");
  if (f.size() != im.n || g.size() != im.m) throw DimensionError("right side does not match the factored system");
  if (im.schur) {
    const Vector cg = im.Cinv * g;
    x = im.chol.solve(f + im.B.transpose() * cg);
    y = im.Cinv * (im.B * x) - cg;
  } else {
    Vector r(im.n + im.m);
    r << f, g;
    const Vector z = const_cast<LU&>(im.lu).solve(r);
    x = z.head(im.n);
    y = z.tail(im.m);
  }
  if (!x.allFinite() || !y.allFinite()) throw SolverError("linear solve produced non-finite values");
}

double relative_residual(const BlockSystem& s, const Vector& f, const Vector& g, const Vector& x, const Vector& y) {
  const Vector r1 = s.A * x + s.B.transpose() * y - f;
  const Vector r2 = s.B * x - s.C * y - g;
  const double num = std::sqrt(r1.squaredNorm() + r2.squaredNorm());
  const double den = std::sqrt(f.squaredNorm() + g.squaredNorm());
  return den > 0 ? num / den : num;
}

void FixedPointConfig::validate() const {
  if (!(tolerance > 0)) throw ConstraintError("fixed-point tolerance must be positive");
  if (max_iterations < 1) throw ConstraintError("fixed-point max_iterations must be at least 1");
  if (!(damping > 0) || damping > 1) throw ConstraintError("fixed-point damping must lie in (0, 1]");
  if (!(floor >= 0)) throw ConstraintError("fixed-point floor must be non-negative");
}

std::vector<double> IterationTrace::increments() const {
  std::vector<double> out;
  for (const auto& r : records) out.push_back(r.increment);
  return out;
}

double FieldNorms::total() const { return std::sqrt(u * u + p * p + zeta * zeta + phi * phi); }

double phi_norm(const Discretization& disc, const Vector& phi) {
  const PolyMesh& mesh = disc.mesh();
  double s = 0.0;
  for (int c = 0; c < mesh.num_cells(); ++c) s += mesh.cell(c).volume * phi[c] * phi[c];
  const PhysicalParameters& k = disc.params();
  return std::sqrt((1.0 / k.M + k.theta) * s);
}

FieldNorms discrete_norms(Discretization& disc, const MaterialLaw& law, const SolutionState& d,
                          const SolutionState& minv_state) {
  const PolyMesh& mesh = disc.mesh();
  const PhysicalParameters& k = disc.params();
  FieldNorms out;
  double su = 0, sp = 0, sz = 0, sd = 0;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const MonomialBasis b2 = cell_basis(mesh, c, 2);
    const QuadratureRule q = cell_quadrature(mesh, c, disc.options().weighted_mass_order);
    const bool has_u = !d.u_projection.empty(), has_z = !d.zeta_projection.empty();
    for (std::size_t i = 0; i < q.size(); ++i) {
      const Vec3& x = q.points[i];
      const Vector m = b2.eval(x);
      if (has_u) {
        const Matrix g = b2.eval_grad(x);
        Mat3 grad;
        for (int r = 0; r < 3; ++r) grad.row(r) = d.u_projection[c].segment<10>(10 * r).transpose() * g;
        const Mat3 eps = 0.5 * (grad + grad.transpose());
        su += q.weights[i] * eps.squaredNorm();
      }
      if (d.p.size()) {
        const double p = d.p.segment<4>(4 * c).dot(m.head(4));
        sp += q.weights[i] * p * p;
      }
      if (has_z) {
        const Vector& z = d.zeta_projection[c];
        const Vec3 v(z.segment<4>(0).dot(m.head(4)), z.segment<4>(4).dot(m.head(4)), z.segment<4>(8).dot(m.head(4)));
        sz += q.weights[i] * v.dot(disc.minv_at(law, minv_state, c, x) * v);
      }
    }
    if (d.zeta.size()) {
      const std::vector<int> g = disc.dofs().flux_dofs(c);
      const Eigen::RowVectorXd& row = disc.flux_divergence_row(c);
      double div = 0;
      for (std::size_t i = 0; i < g.size(); ++i) div += row[i] * d.zeta[g[i]];
      sd += div * div / mesh.cell(c).volume;
    }
  }
  out.u = std::sqrt(2 * k.mu * su);
  out.p = std::sqrt((1 / (2 * k.mu) + 1 / k.lambda) * sp);
  out.zeta = std::sqrt(sz + k.M * sd);
  if (d.phi.size()) out.phi = phi_norm(disc, d.phi);
  return out;
}

namespace {

SolutionState difference(const SolutionState& a, const SolutionState& b) {
  SolutionState d;
  d.u = a.u - b.u;
  d.p = a.p - b.p;
  d.zeta = a.zeta - b.zeta;
  d.phi = a.phi - b.phi;
  d.u_projection.resize(a.u_projection.size());
  for (std::size_t c = 0; c < a.u_projection.size(); ++c) d.u_projection[c] = a.u_projection[c] - b.u_projection[c];
  d.zeta_projection.resize(a.zeta_projection.size());
  for (std::size_t c = 0; c < a.zeta_projection.size(); ++c)
    d.zeta_projection[c] = a.zeta_projection[c] - b.zeta_projection[c];
  return d;
}

}  // namespace

CoupledSolution solve_coupled(Discretization& disc, const MaterialLaw& law, const FixedPointConfig& config) {
  config.validate();
  const PolyMesh& mesh = disc.mesh();
  const int nc = mesh.num_cells();
  const int before = disc.counters().elasticity_matrix;

  CoupledSolution out;
  SolutionState& st = out.state;
  IterationTrace& trace = out.trace;
  st.phi = config.phi0.size() ? config.phi0 : Vector(Vector::Zero(nc));
  if (st.phi.size() != nc) throw DimensionError("initial concentration needs one value per cell");
  st.zeta = Vector::Zero(disc.dofs().num_flux());
  st.zeta_projection.assign(nc, Vector::Zero(FluxElement::kProjDim));

  auto t0 = std::chrono::steady_clock::now();
  const BlockSystem elas = disc.assemble_elasticity(law, st.phi);
  const double elas_assembly = seconds_since(t0);
  t0 = std::chrono::steady_clock::now();
  SaddlePointSolver elas_solver(config.linear_solver);
  elas_solver.factor(elas);
  const double elas_factor = seconds_since(t0);
  trace.elasticity_factorizations = 1;
  trace.elasticity_method = elas_solver.method();

  SaddlePointSolver diff_solver(config.linear_solver);
  for (int it = 1; it <= config.max_iterations; ++it) {
    IterationRecord rec;
    rec.iteration = it;
    const SolutionState prev = st;

    t0 = std::chrono::steady_clock::now();
    const Vector g = it == 1 ? elas.rhs_multiplier : disc.elasticity_multiplier_rhs(law, st.phi);
    rec.assembly_seconds += it == 1 ? elas_assembly : seconds_since(t0);
    if (it == 1) rec.factor_seconds += elas_factor;
    t0 = std::chrono::steady_clock::now();
    Vector x, y;
    elas_solver.solve(elas.rhs_primal, g, x, y);
    rec.solve_seconds += seconds_since(t0);
    rec.elasticity_residual = relative_residual(elas, elas.rhs_primal, g, x, y);
    disc.apply_elasticity_solution(x, y, st);

    t0 = std::chrono::steady_clock::now();
    const BlockSystem diff = disc.assemble_diffusion(law, st);
    rec.assembly_seconds += seconds_since(t0);
    rec.minv = disc.last_minv_range();
    t0 = std::chrono::steady_clock::now();
    diff_solver.factor(diff);
    rec.factor_seconds += seconds_since(t0);
    t0 = std::chrono::steady_clock::now();
    diff_solver.solve(diff.rhs_primal, diff.rhs_multiplier, x, y);
    rec.solve_seconds += seconds_since(t0);
    rec.diffusion_residual = relative_residual(diff, diff.rhs_primal, diff.rhs_multiplier, x, y);
    trace.diffusion_method = diff_solver.method();
    disc.apply_diffusion_solution(x, y, st);
    if (config.damping < 1.0) st.phi = config.damping * st.phi + (1.0 - config.damping) * prev.phi;

    rec.phi_increment = phi_norm(disc, st.phi - prev.phi);
    rec.phi_norm = phi_norm(disc, st.phi);
    double scale = rec.phi_norm;
    if (config.norm == IncrementNorm::combined) {
      rec.increment = it == 1 ? discrete_norms(disc, law, st, st).total()
                              : discrete_norms(disc, law, difference(st, prev), st).total();
      scale = discrete_norms(disc, law, st, st).total();
    } else {
      rec.increment = rec.phi_increment;
    }
    trace.records.push_back(rec);

    const double threshold = config.absolute ? config.tolerance : config.tolerance * std::max(config.floor, scale);
    if (rec.increment <= threshold) {
      trace.converged = true;
      break;
    }
  }
  trace.elasticity_matrix_assemblies = disc.counters().elasticity_matrix - before;
  trace.diffusion_assemblies = trace.iterations();
  if (!trace.converged) {
    std::ostringstream msg;
    msg << "fixed-point iteration did not converge in " << config.max_iterations << " iterations (last increment "
        << trace.records.back().increment << ")";
    throw NonConvergenceError(msg.str(), trace);
  }
  return out;
}

std::string ContractionReport::summary() const {
  std::ostringstream s;
  if (!sufficient_data) return "contraction: insufficient data (need at least 2 iterations)";
  s << "contraction ratio " << ratio << " (max " << max_ratio << ")";
  if (well_posedness_value) s << "; well-posedness smallness " << *well_posedness_value << (*well_posedness_value < 1 ? " < 1" : " >= 1");
  if (error_estimate_value)
    s << "; error-estimate smallness " << *error_estimate_value << (*error_estimate_value < 0.5 ? " < 1/2" : " >= 1/2");
  return s.str();
}

ContractionReport check_contraction_diagnostics(const IterationTrace& trace, const PhysicalParameters& params,
                                                const std::optional<LawDiagnostics>& law,
                                                const ContractionConstants& k) {
  ContractionReport r;
  const std::vector<double> inc = trace.increments();
  for (std::size_t i = 1; i < inc.size(); ++i)
    if (inc[i - 1] > 0) r.quotients.push_back(inc[i] / inc[i - 1]);
  r.sufficient_data = !r.quotients.empty();
  if (r.sufficient_data) {
    const std::size_t n = std::min<std::size_t>(3, r.quotients.size());
    double logsum = 0;
    bool zero = false;
    for (std::size_t i = r.quotients.size() - n; i < r.quotients.size(); ++i) {
      if (r.quotients[i] <= 0) zero = true;
      else logsum += std::log(r.quotients[i]);
    }
    r.ratio = zero ? 0.0 : std::exp(logsum / n);
    for (double q : r.quotients) r.max_ratio = std::max(r.max_ratio, q);
  }

  std::optional<double> lm = params.lipschitz_M, ll = params.lipschitz_ell;
  if (law) {
    if (!lm) lm = law->lipschitz_Minv;
    if (!ll) ll = law->lipschitz_ell;
  }
  if (k.C1 && k.C2 && k.data_norm && lm && ll) {
    const double M = params.M, tm = std::sqrt(2 * params.mu);
    r.well_posedness_value = *k.C1 * *ll * tm * M * M * *k.C2 * *k.C2 * *lm * *k.data_norm;
    r.error_estimate_value = *k.C1 * std::sqrt(M) * *ll + *k.C2 * *k.C2 * std::sqrt(M * M * M) * *lm * tm * *k.data_norm;
  }
  return r;
}

}  // namespace vemsad
