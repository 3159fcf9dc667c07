#pragma once

#include "vemsad/mesh.hpp"
#include "vemsad/poly.hpp"

#include <functional>
#include <vector>

namespace vemsad {

using VectorField = std::function<Vec3(const Vec3&)>;
using ScalarField = std::function<double(const Vec3&)>;

/// Degree-2 trace of an elasticity function on one face: the face Pi-nabla
/// projection, written as a map from the face's slot values (vertices,
/// edge midpoints, face mean) to 2D monomial coefficients.
struct FaceTrace {
  int face = -1;
  Vec3 outward = Vec3::Zero();  // unit normal pointing out of the owning cell
  FaceBasis basis;
  Matrix coeffs;                // 6 x slots.size()
  std::vector<int> slots;       // local cell slots touched by this face
  QuadratureRule quad;          // order 4 on the face

  /// Row vector r with (Pi_f v)(x) = r . v(slots) for one component.
  Eigen::RowVectorXd eval(const Vec3& x) const;
};

/// Local enhanced elasticity space at k = 2 on one polyhedron.
///
/// Local DoF ordering: index 3*slot + c for the scalar slots (vertices in
/// the order of Cell::vertices, then edges in the order of Cell::edges, then
/// faces in the order of Cell::faces), followed by the three divergence
/// moments (h_P/|P|) int_P div v m_i, m_i = xhat_i.
class ElasticityElement {
 public:
  static constexpr int kDegree = 2;
  static constexpr int kPolyDim = 10;  // dim P_2
  static constexpr int kProjDim = 30;  // dim (P_2)^3, index c*10 + alpha
  static constexpr int kPressureDim = 4;

  ElasticityElement(const PolyMesh& mesh, int cell);

  int cell() const { return cell_; }
  int num_slots() const { return nv_ + ne_ + nf_; }
  int num_dofs() const { return 3 * num_slots() + 3; }
  int div_offset() const { return 3 * num_slots(); }
  int vertex_slot(int lv) const { return lv; }
  int edge_slot(int le) const { return nv_ + le; }
  int face_slot(int lf) const { return nv_ + ne_ + lf; }

  const MonomialBasis& basis() const { return basis_; }
  const MomentTable& moments() const { return moments_; }
  const std::vector<FaceTrace>& face_traces() const { return traces_; }

  /// Pi^eps: DoFs -> (P_2)^3 coefficients (30 x N).
  const Matrix& energy_projection() const { return pi_; }
  /// DoF interpolant of the basis polynomials (N x 30).
  const Matrix& interpolation() const { return interp_; }
  /// int_P div v m_a for a in M_1 (4 x N).
  const Matrix& divergence_moments() const { return div_moments_; }
  /// P_1 coefficients of div v (4 x N).
  Matrix divergence_coefficients() const;
  /// int_P v (3 x N).
  const Matrix& mean_operator() const { return mean_; }
  /// int_P eps(m_i):eps(m_j) (30 x 30).
  const Matrix& strain_gram() const { return strain_gram_; }

  /// Pi^T K Pi, without the 2 mu factor.
  Matrix consistency() const;
  /// h_P (I - D Pi)^T (I - D Pi), without the 2 mu factor.
  Matrix stabilisation() const;
  /// 2 mu [consistency + stab_scale * stabilisation].
  Matrix stiffness(double mu, double stab_scale = 1.0) const;
  /// int_P m_a m_b over M_1 (4 x 4).
  Matrix pressure_mass() const;
  /// -int_P q div v as a (4 x N) block.
  Matrix coupling() const { return -div_moments_; }
  /// int_P fbar . v with fbar the cell mean of f.
  Vector load(const VectorField& f, int quad_order = 6) const;
  /// int_f t . Pi_f v over the local face lf.
  Vector traction(int lf, const VectorField& t, int quad_order = 6) const;
  /// Local DoFs of a smooth field (moments by quadrature).
  Vector interpolate(const VectorField& v, int quad_order = 6) const;

  /// Evaluate a (P_2)^3 coefficient vector and its strain.
  Vec3 displacement_at(const Vector& coeffs, const Vec3& x) const;
  Mat3 strain_at(const Vector& coeffs, const Vec3& x) const;

  const PolyMesh& mesh() const { return *mesh_; }

 private:
  void build_traces();
  void build_interpolation();
  void build_divergence_and_mean();
  void build_projection();

  const PolyMesh* mesh_;
  int cell_;
  int nv_ = 0, ne_ = 0, nf_ = 0;
  double h_ = 1.0;
  double vol_ = 1.0;
  MonomialBasis basis_;
  MomentTable moments_;
  QuadratureRule cell_quad_;
  std::vector<FaceTrace> traces_;
  Matrix pi_, interp_, div_moments_, mean_, strain_gram_;
};

/// (P_2)^3 coefficients of a vector polynomial given component-wise.
Vector pack_vector_polynomial(const VectorPolynomial& v);

}  // namespace vemsad
