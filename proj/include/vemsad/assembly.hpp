#pragma once

#include "vemsad/coupling.hpp"
#include "vemsad/mesh.hpp"
#include "vemsad/space_elasticity.hpp"
#include "vemsad/space_hdiv.hpp"

#include <Eigen/Sparse>

#include <functional>
#include <optional>
#include <vector>

namespace vemsad {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Boundary data that depends on the outward unit normal of the face.
using BoundaryVectorField = std::function<Vec3(const Vec3& x, const Vec3& n)>;
using BoundaryScalarField = std::function<double(const Vec3& x, const Vec3& n)>;

/// Problem data. Null callables mean zero. Boundary conditions are per
/// field: `mechanics_tags` decides clamped (dirichlet) vs traction
/// (neumann) faces, `diffusion_tags` decides prescribed concentration
/// (dirichlet, natural) vs prescribed normal flux (neumann, essential).
/// Empty tag vectors fall back to the mesh tags.
struct ProblemData {
  VectorField body_force;
  ScalarField source;           // g
  VectorField displacement;     // u on mechanics Dirichlet faces
  BoundaryVectorField traction;  // on mechanics Neumann faces
  ScalarField concentration;    // phi_D on diffusion Dirichlet faces
  BoundaryScalarField normal_flux;  // zeta . n_out on diffusion Neumann faces
  BoundaryTags mechanics_tags;
  BoundaryTags diffusion_tags;
};

struct AssemblyOptions {
  double stab_scale_elasticity = 1.0;
  double stab_scale_flux = 1.0;
  int weighted_mass_order = 4;  // cell quadrature order for the Minv-weighted mass
  int data_order = 6;           // quadrature order for f, g, traction and boundary data
};

/// Global numbering.
///   displacement: 3*slot + c with slot = vertex, nV + edge, nV + nE + face,
///                 then 3 divergence DoFs per cell;
///   pressure:     4 per cell;
///   flux:         3 per face (global normal), then 3 interior per cell;
///   concentration: 1 per cell.
class DofMap {
 public:
  DofMap(const PolyMesh& mesh, const BoundaryTags& mechanics, const BoundaryTags& diffusion);

  int num_displacement() const { return nu_; }
  int num_pressure() const { return 4 * nc_; }
  int num_flux() const { return nz_; }
  int num_concentration() const { return nc_; }
  int num_free_displacement() const { return static_cast<int>(u_free_list_.size()); }
  int num_free_flux() const { return static_cast<int>(z_free_list_.size()); }

  /// Local-to-global maps in the element orderings.
  std::vector<int> displacement_dofs(int cell) const;
  std::vector<int> flux_dofs(int cell) const;
  int pressure_dof(int cell, int a) const { return 4 * cell + a; }

  /// Position among the free unknowns, or -1 when constrained.
  int free_displacement(int g) const { return u_free_[g]; }
  int free_flux(int g) const { return z_free_[g]; }
  const std::vector<int>& free_displacement_list() const { return u_free_list_; }
  const std::vector<int>& free_flux_list() const { return z_free_list_; }
  const std::vector<int>& constrained_displacement() const { return u_fixed_list_; }
  const std::vector<int>& constrained_flux() const { return z_fixed_list_; }

  int vertex_slot(int v) const { return v; }
  int edge_slot(int e) const { return nv_ + e; }
  int face_slot(int f) const { return nv_ + ne_ + f; }
  int divergence_dof(int cell, int i) const { return 3 * (nv_ + ne_ + nf_) + 3 * cell + i; }
  int flux_face_dof(int f, int b) const { return 3 * f + b; }
  int flux_interior_dof(int cell, int i) const { return 3 * nf_ + 3 * cell + i; }

  const BoundaryTags& mechanics_tags() const { return mech_; }
  const BoundaryTags& diffusion_tags() const { return diff_; }

 private:
  const PolyMesh* mesh_;
  int nv_, ne_, nf_, nc_, nu_, nz_;
  BoundaryTags mech_, diff_;
  std::vector<int> u_free_, z_free_;
  std::vector<int> u_free_list_, z_free_list_, u_fixed_list_, z_fixed_list_;
};

/// [[A, B^T], [B, -C]] with right side (f, g). C is block diagonal by cell.
struct BlockSystem {
  SparseMatrix A;
  SparseMatrix B;
  SparseMatrix C;
  std::vector<Matrix> c_blocks;   // one dense block per cell
  std::vector<int> c_offsets;     // first multiplier index of each block
  Vector rhs_primal;
  Vector rhs_multiplier;

  int num_primal() const { return static_cast<int>(A.rows()); }
  int num_multiplier() const { return static_cast<int>(C.rows()); }
  SparseMatrix full_matrix() const;
  Vector full_rhs() const;
};

/// Full per-field DoF vectors plus the cellwise projections needed by the
/// nonlinearity and the error norms.
struct SolutionState {
  Vector u;                          // all displacement DoFs
  Vector p;                          // 4 per cell
  Vector zeta;                       // all flux DoFs
  Vector phi;                        // 1 per cell
  std::vector<Vector> u_projection;  // Pi^eps u per cell, 30 coefficients
  std::vector<Vector> zeta_projection;  // Pi^0 zeta per cell, 12 coefficients
};

struct AssemblyCounters {
  int elasticity_matrix = 0;
  int elasticity_rhs = 0;
  int diffusion = 0;
};

struct MinvRange {
  double min_eigenvalue = 0.0;
  double max_eigenvalue = 0.0;
};

/// Owns the per-cell operators of both subproblems and assembles the two
/// block systems. Geometric operators are built once; only the diffusion
/// matrix depends on the iterate.
class Discretization {
 public:
  Discretization(const PolyMesh& mesh, PhysicalParameters params, ProblemData data, AssemblyOptions options = {});

  const PolyMesh& mesh() const { return *mesh_; }
  const DofMap& dofs() const { return dofs_; }
  const PhysicalParameters& params() const { return params_; }
  const ProblemData& data() const { return data_; }
  const AssemblyOptions& options() const { return options_; }
  const AssemblyCounters& counters() const { return counters_; }

  /// Elasticity block system; the multiplier right side uses ell(phi).
  /// Throws ConstraintError when no displacement DoF is clamped.
  BlockSystem assemble_elasticity(const MaterialLaw& law, const Vector& phi);
  /// Right side of the pressure equation only (the matrix is phi-independent).
  Vector elasticity_multiplier_rhs(const MaterialLaw& law, const Vector& phi);

  /// Diffusion block system with Minv evaluated on (Pi^eps u, p) of `state`.
  /// Throws NonSPDError when Minv fails the SPD check at a quadrature point
  /// and ConstraintError when the diffusion Dirichlet set is empty.
  BlockSystem assemble_diffusion(const MaterialLaw& law, const SolutionState& state);
  const MinvRange& last_minv_range() const { return minv_range_; }

  /// Scatter solved unknowns (and prescribed values) into `state`.
  void apply_elasticity_solution(const Vector& x, const Vector& y, SolutionState& state) const;
  void apply_diffusion_solution(const Vector& x, const Vector& y, SolutionState& state) const;

  /// Prescribed values of all constrained DoFs (zero elsewhere).
  const Vector& displacement_lifting() const { return u_lift_; }
  const Vector& flux_lifting() const { return z_lift_; }

  const Matrix& elasticity_projection(int cell);
  const Matrix& flux_projection(int cell);
  /// int_P div xi as a row over the local flux DoFs.
  const Eigen::RowVectorXd& flux_divergence_row(int cell);
  /// int_P m_a over M_1 (pressure basis moments).
  const Eigen::Vector4d& pressure_moments(int cell) const { return p_moments_[cell]; }
  /// Displacement DoFs of a smooth field (all cells, consistent on shared entities).
  Vector interpolate_displacement(const VectorField& u) const;
  /// Fortin interpolant of a smooth flux.
  Vector interpolate_flux(const VectorField& zeta) const;

  /// Minv at x in cell c from the state (strain of Pi^eps u, pressure p_h).
  Mat3 minv_at(const MaterialLaw& law, const SolutionState& state, int cell, const Vec3& x) const;
  double pressure_at(const SolutionState& state, int cell, const Vec3& x) const;

 private:
  void build_elasticity_cache();
  void build_flux_cache();

  const PolyMesh* mesh_;
  PhysicalParameters params_;
  ProblemData data_;
  AssemblyOptions options_;
  DofMap dofs_;
  AssemblyCounters counters_;
  MinvRange minv_range_;

  bool elas_ready_ = false;
  std::vector<Matrix> elas_pi_;
  std::vector<Eigen::Vector4d> p_moments_;
  Vector u_lift_;
  SparseMatrix elas_A_, elas_B_;
  std::vector<Matrix> elas_c_;
  Vector elas_rhs_u_, elas_rhs_p_base_;

  bool flux_ready_ = false;
  std::vector<Matrix> flux_pi_, flux_stab_;
  std::vector<Eigen::RowVectorXd> flux_div_;
  std::vector<Vector> flux_bc_;  // <phi_D, xi . n> per cell
  Vector source_int_;            // int_P g per cell
  Vector z_lift_;
};

/// Effective per-field tags: explicit ones or the mesh tags.
BoundaryTags effective_tags(const PolyMesh& mesh, const BoundaryTags& explicit_tags);

}  // namespace vemsad
