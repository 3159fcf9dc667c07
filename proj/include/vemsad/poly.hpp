#pragma once

#include "vemsad/mesh.hpp"
#include "vemsad/types.hpp"

#include <array>
#include <span>
#include <vector>

namespace vemsad {

// ---------------------------------------------------------------------------
// Multi-indices and scaled monomials
// ---------------------------------------------------------------------------

struct MultiIndex {
  std::array<int, 3> a{};
  int degree() const { return a[0] + a[1] + a[2]; }
  friend bool operator==(const MultiIndex&, const MultiIndex&) = default;
};

/// Graded-lexicographic list of all 3D multi-indices with |alpha| <= k.
const std::vector<MultiIndex>& multi_indices(int k);
/// Same for 2D (third entry always 0).
const std::vector<MultiIndex>& multi_indices_2d(int k);
/// Position of alpha in the graded list (independent of k).
int monomial_index(const MultiIndex& alpha);
int monomial_index_2d(int a, int b);

constexpr int poly_dim3(int k) { return k < 0 ? 0 : (k + 1) * (k + 2) * (k + 3) / 6; }
constexpr int poly_dim2(int k) { return k < 0 ? 0 : (k + 1) * (k + 2) / 2; }

/// Scaled monomials ((x - center)/scale)^alpha, |alpha| <= degree.
struct MonomialBasis {
  Vec3 center = Vec3::Zero();
  double scale = 1.0;
  int degree = 0;

  int size() const { return poly_dim3(degree); }
  Vec3 local(const Vec3& x) const { return (x - center) / scale; }
  /// Values of every basis function at x, written to out[0..size()).
  void eval(const Vec3& x, std::span<double> out) const;
  Vector eval(const Vec3& x) const;
  /// Gradients, one row per basis function.
  Eigen::Matrix<double, Eigen::Dynamic, 3> eval_grad(const Vec3& x) const;
};

MonomialBasis cell_basis(const PolyMesh& mesh, int cell, int k);

/// Orthonormal in-plane frame of a face, origin at its centroid.
struct FaceFrame {
  Vec3 origin = Vec3::Zero();
  Vec3 t1 = Vec3::UnitX();
  Vec3 t2 = Vec3::UnitY();
  Vec3 normal = Vec3::UnitZ();
  double scale = 1.0;

  Vec2 local(const Vec3& x) const { return Vec2((x - origin).dot(t1), (x - origin).dot(t2)) / scale; }
  Vec3 global(const Vec2& xi) const { return origin + scale * (xi.x() * t1 + xi.y() * t2); }
};

FaceFrame face_frame(const PolyMesh& mesh, int face);

/// 2D scaled monomials on a face frame.
struct FaceBasis {
  FaceFrame frame;
  int degree = 0;

  int size() const { return poly_dim2(degree); }
  void eval(const Vec3& x, std::span<double> out) const;
  Vector eval(const Vec3& x) const;
  /// In-plane gradients (frame coordinates, already divided by the scale).
  Eigen::Matrix<double, Eigen::Dynamic, 2> eval_grad(const Vec3& x) const;
};

FaceBasis face_basis(const PolyMesh& mesh, int face, int k);

// ---------------------------------------------------------------------------
// Polynomials in a scaled monomial basis and their calculus
// ---------------------------------------------------------------------------

class Polynomial {
 public:
  Polynomial() = default;
  Polynomial(const MonomialBasis& basis);
  Polynomial(const MonomialBasis& basis, Vector coefficients);
  static Polynomial monomial(const MonomialBasis& basis, int index);

  const MonomialBasis& basis() const { return basis_; }
  const Vector& coefficients() const { return coeffs_; }
  Vector& coefficients() { return coeffs_; }
  int degree() const { return basis_.degree; }

  double operator()(const Vec3& x) const;
  /// d/dx_dir; same center/scale, degree lowered by one (not below 0).
  Polynomial derivative(int dir) const;
  /// Re-expressed in a basis of (at least) the given degree.
  Polynomial raised(int degree) const;

  Polynomial& operator+=(const Polynomial& other);
  Polynomial& operator-=(const Polynomial& other);
  Polynomial& operator*=(double s);
  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
  friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
  friend Polynomial operator*(double s, Polynomial a) { return a *= s; }
  friend Polynomial operator*(const Polynomial& a, const Polynomial& b);

 private:
  MonomialBasis basis_;
  Vector coeffs_;
};

using VectorPolynomial = std::array<Polynomial, 3>;
using TensorPolynomial = std::array<std::array<Polynomial, 3>, 3>;

VectorPolynomial grad(const Polynomial& p);
Polynomial div(const VectorPolynomial& v);
VectorPolynomial curl(const VectorPolynomial& v);
TensorPolynomial sym_grad(const VectorPolynomial& v);
VectorPolynomial div_sym_grad(const VectorPolynomial& v);
Polynomial laplacian(const Polynomial& p);
Vec3 eval(const VectorPolynomial& v, const Vec3& x);
/// The polynomial vector field (x - center)/scale.
VectorPolynomial scaled_position(const MonomialBasis& basis);
VectorPolynomial cross(const VectorPolynomial& a, const VectorPolynomial& b);

// ---------------------------------------------------------------------------
// Quadrature
// ---------------------------------------------------------------------------

struct QuadratureRule {
  std::vector<Vec3> points;
  std::vector<double> weights;

  std::size_t size() const { return points.size(); }
  double total_weight() const;
  void append(const QuadratureRule& other);
};

/// Gauss-Legendre nodes/weights on [0, 1].
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

/// Collapsed (Duffy) product rules exact for polynomials of degree `order`.
QuadratureRule triangle_rule(const Vec3& a, const Vec3& b, const Vec3& c, int order);
QuadratureRule tetrahedron_rule(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d, int order);

/// Fan of each face from its centroid, coned to the cell centroid.
QuadratureRule cell_quadrature(const PolyMesh& mesh, int cell, int order);
/// Fan of the face from its centroid.
QuadratureRule face_quadrature(const PolyMesh& mesh, int face, int order);

/// Moments int_P m_alpha of the scaled monomials of a cell.
struct MomentTable {
  MonomialBasis basis;
  Vector moments;

  double operator[](int i) const { return moments[i]; }
  /// int_P m_a m_b for two indices whose sum lies within the table degree.
  double product(int a, int b) const;
  /// Gram matrix of the first poly_dim3(k) monomials (needs 2k <= degree).
  Matrix gram(int k) const;
};

MomentTable integrate_monomials(const PolyMesh& mesh, int cell, int k);

// ---------------------------------------------------------------------------
// Vector polynomial decompositions
// ---------------------------------------------------------------------------

/// grad M_{k+1} without the zero field; spans the gradient space G_k.
std::vector<VectorPolynomial> gradient_basis(const MonomialBasis& basis, int k);
/// xhat ^ (M_{k-1})^3, reduced to a linearly independent set; spans G_k^+.
std::vector<VectorPolynomial> gradient_complement_basis(const MonomialBasis& basis, int k);
/// curl (M_{k+1})^3 reduced to an independent set; spans R_k.
std::vector<VectorPolynomial> curl_basis(const MonomialBasis& basis, int k);
/// xhat M_{k-1}; spans R_k^+.
std::vector<VectorPolynomial> curl_complement_basis(const MonomialBasis& basis, int k);

/// L2(P) Gram matrix of a list of vector polynomials.
Matrix vector_gram(const PolyMesh& mesh, int cell, const std::vector<VectorPolynomial>& fields);

}  // namespace vemsad
