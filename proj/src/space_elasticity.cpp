#include "vemsad/space_elasticity.hpp"

#include <algorithm>

namespace vemsad {

namespace {

int local_index(const std::vector<int>& sorted, int global) {
  auto it = std::lower_bound(sorted.begin(), sorted.end(), global);
  if (it == sorted.end() || *it != global) throw TopologyError("entity not found in cell");
  return static_cast<int>(it - sorted.begin());
}

Matrix face_grad3(const FaceBasis& fb, const Vec3& x) {
  const auto g = fb.eval_grad(x);
  Matrix out(g.rows(), 3);
  for (int i = 0; i < g.rows(); ++i) out.row(i) = (g(i, 0) * fb.frame.t1 + g(i, 1) * fb.frame.t2).transpose();
  return out;
}

// Constant 2D Laplacian of a degree <= 2 face monomial.
double face_laplacian(const FaceBasis& fb, int idx) {
  const auto& a = multi_indices_2d(fb.degree)[idx].a;
  const double h2 = fb.frame.scale * fb.frame.scale;
  return ((a[0] == 2 ? 2.0 : 0.0) + (a[1] == 2 ? 2.0 : 0.0)) / h2;
}

Vec3 rigid_mode(int k, const Vec3& xhat) {
  if (k < 3) return Vec3::Unit(k);
  return xhat.cross(Vec3::Unit(k - 3));
}

}  // namespace

Eigen::RowVectorXd FaceTrace::eval(const Vec3& x) const { return basis.eval(x).transpose() * coeffs; }

ElasticityElement::ElasticityElement(const PolyMesh& mesh, int cell) : mesh_(&mesh), cell_(cell) {
  const Cell& c = mesh.cell(cell);
  nv_ = static_cast<int>(c.vertices.size());
  ne_ = static_cast<int>(c.edges.size());
  nf_ = static_cast<int>(c.faces.size());
  h_ = c.diameter;
  vol_ = c.volume;
  basis_ = cell_basis(mesh, cell, kDegree);
  moments_ = integrate_monomials(mesh, cell, 2 * kDegree);
  cell_quad_ = cell_quadrature(mesh, cell, 2 * kDegree);
  build_traces();
  build_interpolation();
  build_divergence_and_mean();
  build_projection();
}

void ElasticityElement::build_traces() {
  const Cell& c = mesh_->cell(cell_);
  traces_.resize(nf_);
  for (int lf = 0; lf < nf_; ++lf) {
    const int f = c.faces[lf];
    const Face& face = mesh_->face(f);
    const int n = static_cast<int>(face.vertices.size());
    FaceTrace& tr = traces_[lf];
    tr.face = f;
    tr.outward = c.orientation[lf] * face.normal;
    tr.basis = face_basis(*mesh_, f, kDegree);
    tr.quad = face_quadrature(*mesh_, f, 4);
    tr.slots.resize(2 * n + 1);
    for (int i = 0; i < n; ++i) {
      tr.slots[i] = vertex_slot(local_index(c.vertices, face.vertices[i]));
      tr.slots[n + i] = edge_slot(local_index(c.edges, face.edges[i]));
    }
    tr.slots[2 * n] = face_slot(lf);

    const int nb = tr.basis.size();
    Matrix G = Matrix::Zero(nb, nb);
    for (std::size_t q = 0; q < tr.quad.size(); ++q) {
      const Vector m = tr.basis.eval(tr.quad.points[q]);
      const Matrix g = face_grad3(tr.basis, tr.quad.points[q]);
      G.row(0) += tr.quad.weights[q] * m.transpose();
      G.bottomRows(nb - 1) += tr.quad.weights[q] * g.bottomRows(nb - 1) * g.transpose();
    }
    Matrix rhs = Matrix::Zero(nb, 2 * n + 1);
    rhs(0, 2 * n) = face.area;
    for (int a = 1; a < nb; ++a) rhs(a, 2 * n) = -face_laplacian(tr.basis, a) * face.area;
    for (int i = 0; i < n; ++i) {
      const Vec3& xa = mesh_->vertex(face.vertices[i]);
      const Vec3& xb = mesh_->vertex(face.vertices[(i + 1) % n]);
      const Vec3& xm = mesh_->edge(face.edges[i]).midpoint;
      const double len = (xb - xa).norm();
      const Vec3 ne = (xb - xa).cross(face.normal) / len;
      const Vector ga = face_grad3(tr.basis, xa) * ne;
      const Vector gb = face_grad3(tr.basis, xb) * ne;
      const Vector gm = face_grad3(tr.basis, xm) * ne;
      for (int a = 1; a < nb; ++a) {
        rhs(a, i) += len / 6.0 * ga[a];
        rhs(a, (i + 1) % n) += len / 6.0 * gb[a];
        rhs(a, n + i) += 4.0 * len / 6.0 * gm[a];
      }
    }
    Eigen::FullPivLU<Matrix> lu(G);
    if (!lu.isInvertible()) throw SingularProjectionError("face projection is singular");
    tr.coeffs = lu.solve(rhs);
  }
}

void ElasticityElement::build_interpolation() {
  const Cell& c = mesh_->cell(cell_);
  const int N = num_dofs();
  interp_ = Matrix::Zero(N, kProjDim);
  auto put = [&](int slot, const Vector& vals) {
    for (int comp = 0; comp < 3; ++comp)
      interp_.block(3 * slot + comp, comp * kPolyDim, 1, kPolyDim) = vals.transpose();
  };
  for (int lv = 0; lv < nv_; ++lv) put(vertex_slot(lv), basis_.eval(mesh_->vertex(c.vertices[lv])));
  for (int le = 0; le < ne_; ++le) put(edge_slot(le), basis_.eval(mesh_->edge(c.edges[le]).midpoint));
  for (int lf = 0; lf < nf_; ++lf) {
    const FaceTrace& tr = traces_[lf];
    Vector mean = Vector::Zero(kPolyDim);
    for (std::size_t q = 0; q < tr.quad.size(); ++q) mean += tr.quad.weights[q] * basis_.eval(tr.quad.points[q]);
    put(face_slot(lf), mean / mesh_->face(tr.face).area);
  }
  // (h/|P|) int_P d_c m_alpha xhat_i
  for (std::size_t q = 0; q < cell_quad_.size(); ++q) {
    const Vec3& x = cell_quad_.points[q];
    const auto g = basis_.eval_grad(x);
    const Vec3 xhat = basis_.local(x);
    for (int i = 0; i < 3; ++i)
      for (int comp = 0; comp < 3; ++comp)
        for (int a = 0; a < kPolyDim; ++a)
          interp_(div_offset() + i, comp * kPolyDim + a) += cell_quad_.weights[q] * g(a, comp) * xhat[i] * h_ / vol_;
  }
}

void ElasticityElement::build_divergence_and_mean() {
  const int N = num_dofs();
  div_moments_ = Matrix::Zero(4, N);
  for (int lf = 0; lf < nf_; ++lf) {
    const double area = mesh_->face(traces_[lf].face).area;
    for (int d = 0; d < 3; ++d) div_moments_(0, 3 * face_slot(lf) + d) += traces_[lf].outward[d] * area;
  }
  for (int i = 0; i < 3; ++i) div_moments_(1 + i, div_offset() + i) = vol_ / h_;

  mean_ = Matrix::Zero(3, N);
  for (int c = 0; c < 3; ++c) mean_.row(c) = -h_ * div_moments_.row(1 + c);
  const Vec3 xp = basis_.center;
  for (const FaceTrace& tr : traces_) {
    for (std::size_t q = 0; q < tr.quad.size(); ++q) {
      const Vec3& x = tr.quad.points[q];
      const Eigen::RowVectorXd e = tr.eval(x);
      for (int c = 0; c < 3; ++c)
        for (int d = 0; d < 3; ++d) {
          const double w = tr.quad.weights[q] * (x - xp)[c] * tr.outward[d];
          for (std::size_t s = 0; s < tr.slots.size(); ++s) mean_(c, 3 * tr.slots[s] + d) += w * e[s];
        }
    }
  }
}

void ElasticityElement::build_projection() {
  const int N = num_dofs();
  // int_P eps(m_i):eps(m_j), i = (c, alpha)
  strain_gram_ = Matrix::Zero(kProjDim, kProjDim);
  for (std::size_t q = 0; q < cell_quad_.size(); ++q) {
    const Matrix g = basis_.eval_grad(cell_quad_.points[q]);
    const Matrix gg = g * g.transpose();
    const double w = cell_quad_.weights[q];
    for (int c = 0; c < 3; ++c)
      for (int d = 0; d < 3; ++d)
        for (int a = 0; a < kPolyDim; ++a)
          for (int b = 0; b < kPolyDim; ++b)
            strain_gram_(c * kPolyDim + a, d * kPolyDim + b) +=
                w * 0.5 * ((c == d ? gg(a, b) : 0.0) + g(a, d) * g(b, c));
  }

  // Constant Hessians of the monomials give div eps(m_alpha e_c).
  std::vector<Mat3> hess(kPolyDim, Mat3::Zero());
  for (int a = 0; a < kPolyDim; ++a) {
    const Polynomial m = Polynomial::monomial(basis_, a);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) hess[a](i, j) = m.derivative(i).derivative(j)(basis_.center);
  }

  Matrix rhs = Matrix::Zero(kProjDim, N);
  for (int c = 0; c < 3; ++c)
    for (int a = 0; a < kPolyDim; ++a) {
      const int j = c * kPolyDim + a;
      for (int d = 0; d < 3; ++d) {
        const double divd = 0.5 * ((c == d ? hess[a].trace() : 0.0) + hess[a](c, d));
        rhs.row(j) -= divd * mean_.row(d);
      }
    }
  Matrix rbm = Matrix::Zero(6, kProjDim);
  Matrix rbm_rhs = Matrix::Zero(6, N);
  for (const FaceTrace& tr : traces_) {
    const Vec3& n = tr.outward;
    for (std::size_t q = 0; q < tr.quad.size(); ++q) {
      const Vec3& x = tr.quad.points[q];
      const double w = tr.quad.weights[q];
      const Eigen::RowVectorXd e = tr.eval(x);
      const Vector m = basis_.eval(x);
      const Matrix g = basis_.eval_grad(x);
      const Vec3 xhat = basis_.local(x);
      for (int c = 0; c < 3; ++c)
        for (int a = 0; a < kPolyDim; ++a) {
          const double gn = g.row(a).dot(n);
          for (int d = 0; d < 3; ++d) {
            const double en = 0.5 * ((c == d ? gn : 0.0) + g(a, d) * n[c]);
            if (en == 0.0) continue;
            for (std::size_t s = 0; s < tr.slots.size(); ++s) rhs(c * kPolyDim + a, 3 * tr.slots[s] + d) += w * en * e[s];
          }
        }
      for (int k = 0; k < 6; ++k) {
        const Vec3 r = rigid_mode(k, xhat);
        for (int c = 0; c < 3; ++c) {
          if (r[c] == 0.0) continue;
          rbm.block(k, c * kPolyDim, 1, kPolyDim) += w * r[c] * m.transpose();
          for (std::size_t s = 0; s < tr.slots.size(); ++s) rbm_rhs(k, 3 * tr.slots[s] + c) += w * r[c] * e[s];
        }
      }
    }
  }

  // Scale the constraint rows to the magnitude of the stiffness rows.
  const double kscale = strain_gram_.cwiseAbs().maxCoeff();
  const double rscale = kscale / std::max(rbm.cwiseAbs().maxCoeff(), 1e-300);
  Matrix kkt = Matrix::Zero(kProjDim + 6, kProjDim + 6);
  kkt.topLeftCorner(kProjDim, kProjDim) = strain_gram_;
  kkt.topRightCorner(kProjDim, 6) = rscale * rbm.transpose();
  kkt.bottomLeftCorner(6, kProjDim) = rscale * rbm;
  Matrix full_rhs(kProjDim + 6, N);
  full_rhs << rhs, rscale * rbm_rhs;
  Eigen::FullPivLU<Matrix> lu(kkt);
  if (!lu.isInvertible()) throw SingularProjectionError("energy projection system is rank deficient");
  pi_ = lu.solve(full_rhs).topRows(kProjDim);
}

Matrix ElasticityElement::divergence_coefficients() const {
  return moments_.gram(1).llt().solve(div_moments_);
}

Matrix ElasticityElement::consistency() const { return pi_.transpose() * strain_gram_ * pi_; }

Matrix ElasticityElement::stabilisation() const {
  const Matrix r = Matrix::Identity(num_dofs(), num_dofs()) - interp_ * pi_;
  return h_ * r.transpose() * r;
}

Matrix ElasticityElement::stiffness(double mu, double stab_scale) const {
  Matrix a = 2.0 * mu * (consistency() + stab_scale * stabilisation());
  return 0.5 * (a + a.transpose());
}

Matrix ElasticityElement::pressure_mass() const { return moments_.gram(1); }

Vector ElasticityElement::load(const VectorField& f, int quad_order) const {
  const QuadratureRule q = quad_order == 2 * kDegree ? cell_quad_ : cell_quadrature(*mesh_, cell_, quad_order);
  Vec3 fbar = Vec3::Zero();
  for (std::size_t i = 0; i < q.size(); ++i) fbar += q.weights[i] * f(q.points[i]);
  fbar /= vol_;
  return mean_.transpose() * fbar;
}

Vector ElasticityElement::traction(int lf, const VectorField& t, int quad_order) const {
  const FaceTrace& tr = traces_[lf];
  const QuadratureRule q = face_quadrature(*mesh_, tr.face, quad_order);
  Vector out = Vector::Zero(num_dofs());
  for (std::size_t i = 0; i < q.size(); ++i) {
    const Vec3 tv = q.weights[i] * t(q.points[i]);
    const Eigen::RowVectorXd e = tr.eval(q.points[i]);
    for (std::size_t s = 0; s < tr.slots.size(); ++s)
      for (int d = 0; d < 3; ++d) out[3 * tr.slots[s] + d] += tv[d] * e[s];
  }
  return out;
}

Vector ElasticityElement::interpolate(const VectorField& v, int quad_order) const {
  const Cell& c = mesh_->cell(cell_);
  Vector dofs = Vector::Zero(num_dofs());
  for (int lv = 0; lv < nv_; ++lv) dofs.segment<3>(3 * vertex_slot(lv)) = v(mesh_->vertex(c.vertices[lv]));
  for (int le = 0; le < ne_; ++le) dofs.segment<3>(3 * edge_slot(le)) = v(mesh_->edge(c.edges[le]).midpoint);
  Vec3 boundary_moment = Vec3::Zero();  // sum_f int_f (v.n) xhat
  for (int lf = 0; lf < nf_; ++lf) {
    const int f = c.faces[lf];
    const QuadratureRule q = face_quadrature(*mesh_, f, quad_order);
    Vec3 sum = Vec3::Zero();
    for (std::size_t i = 0; i < q.size(); ++i) {
      const Vec3 val = v(q.points[i]);
      sum += q.weights[i] * val;
      boundary_moment += q.weights[i] * val.dot(traces_[lf].outward) * basis_.local(q.points[i]);
    }
    dofs.segment<3>(3 * face_slot(lf)) = sum / mesh_->face(f).area;
  }
  const QuadratureRule q = cell_quadrature(*mesh_, cell_, quad_order);
  Vec3 integral = Vec3::Zero();
  for (std::size_t i = 0; i < q.size(); ++i) integral += q.weights[i] * v(q.points[i]);
  dofs.segment<3>(div_offset()) = (h_ / vol_) * (boundary_moment - integral / h_);
  return dofs;
}

Vec3 ElasticityElement::displacement_at(const Vector& coeffs, const Vec3& x) const {
  const Vector m = basis_.eval(x);
  Vec3 out;
  for (int c = 0; c < 3; ++c) out[c] = coeffs.segment<kPolyDim>(c * kPolyDim).dot(m);
  return out;
}

Mat3 ElasticityElement::strain_at(const Vector& coeffs, const Vec3& x) const {
  const Matrix g = basis_.eval_grad(x);
  Mat3 grad;
  for (int c = 0; c < 3; ++c) grad.row(c) = coeffs.segment<kPolyDim>(c * kPolyDim).transpose() * g;
  return 0.5 * (grad + grad.transpose());
}

Vector pack_vector_polynomial(const VectorPolynomial& v) {
  Vector out = Vector::Zero(ElasticityElement::kProjDim);
  for (int c = 0; c < 3; ++c) {
    const Polynomial p = v[c].raised(ElasticityElement::kDegree);
    if (p.coefficients().size() != ElasticityElement::kPolyDim) throw DimensionError("vector polynomial exceeds degree 2");
    out.segment<ElasticityElement::kPolyDim>(c * ElasticityElement::kPolyDim) = p.coefficients();
  }
  return out;
}

}  // namespace vemsad
