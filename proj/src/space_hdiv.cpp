#include "vemsad/space_hdiv.hpp"

namespace vemsad {

FluxElement::FluxElement(const PolyMesh& mesh, int cell) : mesh_(&mesh), cell_(cell) {
  const Cell& c = mesh.cell(cell);
  nf_ = static_cast<int>(c.faces.size());
  vol_ = c.volume;
  basis_ = cell_basis(mesh, cell, 2);
  quad_ = cell_quadrature(mesh, cell, 4);
  const int N = num_dofs();

  div_row_ = Eigen::RowVectorXd::Zero(N);
  interp_ = Matrix::Zero(N, kProjDim);
  // Test functions: grad m_g (g = 1..9 in M_2) and xhat ^ e_i.
  Matrix w = Matrix::Zero(kProjDim, kProjDim);
  Matrix rhs = Matrix::Zero(kProjDim, N);

  for (int lf = 0; lf < nf_; ++lf) {
    const int f = c.faces[lf];
    const Face& face = mesh.face(f);
    const double s = c.orientation[lf];
    face_bases_.push_back(face_basis(mesh, f, 1));
    const FaceBasis& fb = face_bases_.back();
    const QuadratureRule fq = face_quadrature(mesh, f, 4);
    Matrix mf = Matrix::Zero(3, 3);
    for (std::size_t q = 0; q < fq.size(); ++q) {
      const Vector qv = fb.eval(fq.points[q]);
      mf += fq.weights[q] * qv * qv.transpose();
    }
    face_mass_.push_back(mf);
    div_row_[3 * lf] = s * face.area;

    // xi . n_f = q^T a with a = Mf^{-1} |f| dofs
    const Matrix trace = mf.ldlt().solve(face.area * Matrix::Identity(3, 3));
    for (std::size_t q = 0; q < fq.size(); ++q) {
      const Vec3& x = fq.points[q];
      const Vector qv = fb.eval(x);
      const Vector m = basis_.eval(x);
      const Eigen::RowVectorXd tr = qv.transpose() * trace;
      for (int g = 1; g < 10; ++g) rhs.block(g - 1, 3 * lf, 1, 3) += fq.weights[q] * s * m[g] * tr;
      for (int cc = 0; cc < 3; ++cc)
        for (int a = 0; a < 4; ++a)
          interp_.block(3 * lf, cc * 4 + a, 3, 1) += fq.weights[q] * m[a] * face.normal[cc] * qv / face.area;
    }
  }

  for (std::size_t q = 0; q < quad_.size(); ++q) {
    const Vec3& x = quad_.points[q];
    const double wq = quad_.weights[q];
    const Vector m = basis_.eval(x);
    const auto g = basis_.eval_grad(x);
    const Vec3 xhat = basis_.local(x);
    for (int cc = 0; cc < 3; ++cc)
      for (int a = 0; a < 4; ++a) {
        const int j = cc * 4 + a;
        for (int k = 1; k < 10; ++k) w(k - 1, j) += wq * g(k, cc) * m[a];
        for (int i = 0; i < 3; ++i) {
          const Vec3 t = xhat.cross(Vec3::Unit(i));
          w(9 + i, j) += wq * t[cc] * m[a];
          interp_(interior_offset() + i, j) += wq * t[cc] * m[a] / vol_;
        }
      }
    // -div xi int_P m_g
    for (int k = 1; k < 10; ++k) rhs.row(k - 1) -= wq * m[k] / vol_ * div_row_;
  }
  for (int i = 0; i < 3; ++i) rhs(9 + i, interior_offset() + i) = vol_;

  Eigen::FullPivLU<Matrix> lu(w);
  if (!lu.isInvertible()) throw SingularProjectionError("flux projection system is singular");
  pi_ = lu.solve(rhs);
}

Matrix flux_weighted_gram(const MonomialBasis& b1, const QuadratureRule& quad, const std::vector<Mat3>& minv) {
  if (minv.size() != quad.size()) throw DimensionError("one Minv value per quadrature point expected");
  Matrix g = Matrix::Zero(FluxElement::kProjDim, FluxElement::kProjDim);
  for (std::size_t q = 0; q < quad.size(); ++q) {
    const Vector m = b1.eval(quad.points[q]).head(4);
    const Matrix mm = quad.weights[q] * m * m.transpose();
    for (int c = 0; c < 3; ++c)
      for (int d = 0; d < 3; ++d) g.block(c * 4, d * 4, 4, 4) += minv[q](c, d) * mm;
  }
  return 0.5 * (g + g.transpose());
}

Matrix FluxElement::weighted_gram(const QuadratureRule& quad, const std::vector<Mat3>& minv) const {
  return flux_weighted_gram(basis_, quad, minv);
}

Matrix FluxElement::consistency(const QuadratureRule& quad, const std::vector<Mat3>& minv) const {
  Matrix a = pi_.transpose() * weighted_gram(quad, minv) * pi_;
  return 0.5 * (a + a.transpose());
}

Matrix FluxElement::stabilisation() const {
  const Matrix r = Matrix::Identity(num_dofs(), num_dofs()) - interp_ * pi_;
  Matrix s = vol_ * r.transpose() * r;
  return 0.5 * (s + s.transpose());
}

Vector FluxElement::boundary_rhs(int lf, const ScalarField& phi, int quad_order) const {
  const int f = mesh_->cell(cell_).faces[lf];
  const QuadratureRule fq = face_quadrature(*mesh_, f, quad_order);
  Vector mom = Vector::Zero(3);
  for (std::size_t q = 0; q < fq.size(); ++q) mom += fq.weights[q] * phi(fq.points[q]) * face_bases_[lf].eval(fq.points[q]);
  Vector out = Vector::Zero(num_dofs());
  out.segment<3>(3 * lf) = orientation(lf) * mesh_->face(f).area * face_mass_[lf].ldlt().solve(mom);
  return out;
}

Vector FluxElement::face_moments(int lf, const ScalarField& normal_flux, int quad_order) const {
  const int f = mesh_->cell(cell_).faces[lf];
  const QuadratureRule fq = face_quadrature(*mesh_, f, quad_order);
  Vector mom = Vector::Zero(3);
  for (std::size_t q = 0; q < fq.size(); ++q)
    mom += fq.weights[q] * normal_flux(fq.points[q]) * face_bases_[lf].eval(fq.points[q]);
  return mom / mesh_->face(f).area;
}

Vector FluxElement::interpolate(const VectorField& xi, int quad_order) const {
  const Cell& c = mesh_->cell(cell_);
  Vector dofs = Vector::Zero(num_dofs());
  for (int lf = 0; lf < nf_; ++lf) {
    const Vec3 n = mesh_->face(c.faces[lf]).normal;
    dofs.segment<3>(3 * lf) = face_moments(lf, [&](const Vec3& x) { return xi(x).dot(n); }, quad_order);
  }
  const QuadratureRule q = cell_quadrature(*mesh_, cell_, quad_order);
  for (std::size_t k = 0; k < q.size(); ++k) {
    const Vec3 v = xi(q.points[k]);
    const Vec3 xhat = basis_.local(q.points[k]);
    for (int i = 0; i < 3; ++i) dofs[interior_offset() + i] += q.weights[k] * v.dot(xhat.cross(Vec3::Unit(i))) / vol_;
  }
  return dofs;
}

Vector FluxElement::normal_trace(int lf, const Vector& dofs) const {
  const double area = mesh_->face(mesh_->cell(cell_).faces[lf]).area;
  return face_mass_[lf].ldlt().solve(area * dofs.segment<3>(3 * lf));
}

Vec3 FluxElement::flux_at(const Vector& coeffs, const Vec3& x) const {
  const Vector m = basis_.eval(x).head(4);
  return Vec3(coeffs.segment<4>(0).dot(m), coeffs.segment<4>(4).dot(m), coeffs.segment<4>(8).dot(m));
}

}  // namespace vemsad
