#pragma once

#include "vemsad/mesh.hpp"
#include "vemsad/poly.hpp"
#include "vemsad/space_elasticity.hpp"

#include <vector>

namespace vemsad {

/// Local H(div) virtual element space at k = 1 on one polyhedron.
///
/// DoFs: for each local face lf, (1/|f|) int_f (xi . n_f) q_b with n_f the
/// global face normal and q_b the face monomials of degree <= 1 (index
/// 3*lf + b); then (1/|P|) int_P xi . (xhat ^ e_i), i = 0..2. Because the
/// global normal is used, local and global face DoFs coincide.
class FluxElement {
 public:
  static constexpr int kProjDim = 12;  // (P_1)^3, index c*4 + alpha

  FluxElement(const PolyMesh& mesh, int cell);

  int cell() const { return cell_; }
  int num_faces() const { return nf_; }
  int num_dofs() const { return 3 * nf_ + 3; }
  int interior_offset() const { return 3 * nf_; }
  /// +1 when the global face normal points out of this cell.
  int orientation(int lf) const { return mesh_->cell(cell_).orientation[lf]; }

  const MonomialBasis& basis() const { return basis_; }
  const QuadratureRule& cell_quadrature_rule() const { return quad_; }

  /// Pi^0_1: DoFs -> (P_1)^3 coefficients (12 x N).
  const Matrix& projection() const { return pi_; }
  /// DoFs of the basis fields m_alpha e_c (N x 12).
  const Matrix& interpolation() const { return interp_; }
  /// int_P div xi (1 x N); div xi itself is this divided by |P|.
  const Eigen::RowVectorXd& divergence_row() const { return div_row_; }

  /// int_P Minv m_i . m_j with Minv sampled at the points of `quad`.
  Matrix weighted_gram(const QuadratureRule& quad, const std::vector<Mat3>& minv) const;
  /// Pi^T (weighted gram) Pi.
  Matrix consistency(const QuadratureRule& quad, const std::vector<Mat3>& minv) const;
  /// |P| (I - D Pi)^T (I - D Pi).
  Matrix stabilisation() const;

  /// <phi_D, xi . n_out> over local face lf.
  Vector boundary_rhs(int lf, const ScalarField& phi, int quad_order = 6) const;
  /// Fortin interpolant of a smooth field (moments by quadrature).
  Vector interpolate(const VectorField& xi, int quad_order = 6) const;
  /// DoFs of face lf for a given normal flux g = xi . n_f.
  Vector face_moments(int lf, const ScalarField& normal_flux, int quad_order = 6) const;
  /// Coefficients (face basis of degree 1) of xi . n_f on local face lf.
  Vector normal_trace(int lf, const Vector& dofs) const;
  const FaceBasis& face_basis_of(int lf) const { return face_bases_[lf]; }

  Vec3 flux_at(const Vector& coeffs, const Vec3& x) const;

 private:
  const PolyMesh* mesh_;
  int cell_;
  int nf_ = 0;
  double vol_ = 1.0;
  MonomialBasis basis_;
  QuadratureRule quad_;
  std::vector<FaceBasis> face_bases_;
  std::vector<Matrix> face_mass_;  // int_f q_a q_b (3 x 3)
  Matrix pi_, interp_;
  Eigen::RowVectorXd div_row_;
};

/// int_P Minv m_i . m_j for the (P_1)^3 basis built on `b1` (degree >= 1).
Matrix flux_weighted_gram(const MonomialBasis& b1, const QuadratureRule& quad, const std::vector<Mat3>& minv);

}  // namespace vemsad
