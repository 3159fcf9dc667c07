#include "vemsad/poly.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace vemsad {

namespace {

constexpr int kMaxDegree = 12;

std::vector<std::vector<MultiIndex>> build_indices_3d() {
  std::vector<std::vector<MultiIndex>> all(kMaxDegree + 1);
  std::vector<MultiIndex> list;
  for (int k = 0; k <= kMaxDegree; ++k) {
    for (int a1 = k; a1 >= 0; --a1)
      for (int a2 = k - a1; a2 >= 0; --a2) list.push_back({{a1, a2, k - a1 - a2}});
    all[k] = list;
  }
  return all;
}

std::vector<std::vector<MultiIndex>> build_indices_2d() {
  std::vector<std::vector<MultiIndex>> all(kMaxDegree + 1);
  std::vector<MultiIndex> list;
  for (int k = 0; k <= kMaxDegree; ++k) {
    for (int a = k; a >= 0; --a) list.push_back({{a, k - a, 0}});
    all[k] = list;
  }
  return all;
}

void check_degree(int k) {
  if (k < 0 || k > kMaxDegree) throw DimensionError("monomial degree out of supported range");
}

bool same_basis_frame(const MonomialBasis& a, const MonomialBasis& b) {
  return a.center == b.center && a.scale == b.scale;
}

// Greedy extraction of linearly independent coefficient vectors.
std::vector<VectorPolynomial> independent_subset(const std::vector<VectorPolynomial>& candidates) {
  std::vector<VectorPolynomial> kept;
  std::vector<Vector> ortho;
  for (const auto& v : candidates) {
    Vector flat = Vector::Zero(3 * poly_dim3(kMaxDegree));
    for (int c = 0; c < 3; ++c) {
      const Vector& co = v[c].coefficients();
      flat.segment(c * poly_dim3(kMaxDegree), co.size()) = co;
    }
    const double norm0 = flat.norm();
    if (norm0 == 0.0) continue;
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& q : ortho) flat -= q.dot(flat) * q;
    if (flat.norm() > 1e-10 * norm0) {
      ortho.push_back(flat / flat.norm());
      kept.push_back(v);
    }
  }
  return kept;
}

}  // namespace

const std::vector<MultiIndex>& multi_indices(int k) {
  static const auto table = build_indices_3d();
  check_degree(k);
  return table[k];
}

const std::vector<MultiIndex>& multi_indices_2d(int k) {
  static const auto table = build_indices_2d();
  check_degree(k);
  return table[k];
}

int monomial_index(const MultiIndex& alpha) {
  const int d = alpha.degree();
  const int r = d - alpha.a[0];
  return poly_dim3(d - 1) + r * (r + 1) / 2 + (r - alpha.a[1]);
}

int monomial_index_2d(int a, int b) {
  const int d = a + b;
  return poly_dim2(d - 1) + (d - a);
}

// ---------------------------------------------------------------------------

void MonomialBasis::eval(const Vec3& x, std::span<double> out) const {
  const Vec3 xh = local(x);
  double pw[3][kMaxDegree + 1];
  for (int i = 0; i < 3; ++i) {
    pw[i][0] = 1.0;
    for (int e = 1; e <= degree; ++e) pw[i][e] = pw[i][e - 1] * xh[i];
  }
  const auto& idx = multi_indices(degree);
  for (std::size_t j = 0; j < idx.size(); ++j) {
    const auto& a = idx[j].a;
    out[j] = pw[0][a[0]] * pw[1][a[1]] * pw[2][a[2]];
  }
}

Vector MonomialBasis::eval(const Vec3& x) const {
  Vector v(size());
  eval(x, std::span<double>(v.data(), static_cast<std::size_t>(v.size())));
  return v;
}

Eigen::Matrix<double, Eigen::Dynamic, 3> MonomialBasis::eval_grad(const Vec3& x) const {
  const Vec3 xh = local(x);
  double pw[3][kMaxDegree + 1];
  for (int i = 0; i < 3; ++i) {
    pw[i][0] = 1.0;
    for (int e = 1; e <= degree; ++e) pw[i][e] = pw[i][e - 1] * xh[i];
  }
  const auto& idx = multi_indices(degree);
  Eigen::Matrix<double, Eigen::Dynamic, 3> g(size(), 3);
  for (std::size_t j = 0; j < idx.size(); ++j) {
    const auto& a = idx[j].a;
    g(j, 0) = a[0] > 0 ? a[0] * pw[0][a[0] - 1] * pw[1][a[1]] * pw[2][a[2]] / scale : 0.0;
    g(j, 1) = a[1] > 0 ? a[1] * pw[0][a[0]] * pw[1][a[1] - 1] * pw[2][a[2]] / scale : 0.0;
    g(j, 2) = a[2] > 0 ? a[2] * pw[0][a[0]] * pw[1][a[1]] * pw[2][a[2] - 1] / scale : 0.0;
  }
  return g;
}

MonomialBasis cell_basis(const PolyMesh& mesh, int cell, int k) {
  check_degree(k);
  const Cell& c = mesh.cell(cell);
  return MonomialBasis{c.centroid, c.diameter, k};
}

FaceFrame face_frame(const PolyMesh& mesh, int face) {
  const Face& f = mesh.face(face);
  FaceFrame frame;
  frame.origin = f.centroid;
  frame.normal = f.normal;
  Vec3 t = mesh.vertex(f.vertices[1]) - mesh.vertex(f.vertices[0]);
  t -= t.dot(f.normal) * f.normal;
  frame.t1 = t.normalized();
  frame.t2 = f.normal.cross(frame.t1);
  frame.scale = f.diameter;
  return frame;
}

void FaceBasis::eval(const Vec3& x, std::span<double> out) const {
  const Vec2 xi = frame.local(x);
  const auto& idx = multi_indices_2d(degree);
  double pw[2][kMaxDegree + 1];
  for (int i = 0; i < 2; ++i) {
    pw[i][0] = 1.0;
    for (int e = 1; e <= degree; ++e) pw[i][e] = pw[i][e - 1] * xi[i];
  }
  for (std::size_t j = 0; j < idx.size(); ++j) out[j] = pw[0][idx[j].a[0]] * pw[1][idx[j].a[1]];
}

Vector FaceBasis::eval(const Vec3& x) const {
  Vector v(size());
  eval(x, std::span<double>(v.data(), static_cast<std::size_t>(v.size())));
  return v;
}

Eigen::Matrix<double, Eigen::Dynamic, 2> FaceBasis::eval_grad(const Vec3& x) const {
  const Vec2 xi = frame.local(x);
  const auto& idx = multi_indices_2d(degree);
  double pw[2][kMaxDegree + 1];
  for (int i = 0; i < 2; ++i) {
    pw[i][0] = 1.0;
    for (int e = 1; e <= degree; ++e) pw[i][e] = pw[i][e - 1] * xi[i];
  }
  Eigen::Matrix<double, Eigen::Dynamic, 2> g(size(), 2);
  for (std::size_t j = 0; j < idx.size(); ++j) {
    const int a = idx[j].a[0];
    const int b = idx[j].a[1];
    g(j, 0) = a > 0 ? a * pw[0][a - 1] * pw[1][b] / frame.scale : 0.0;
    g(j, 1) = b > 0 ? b * pw[0][a] * pw[1][b - 1] / frame.scale : 0.0;
  }
  return g;
}

FaceBasis face_basis(const PolyMesh& mesh, int face, int k) {
  check_degree(k);
  return FaceBasis{face_frame(mesh, face), k};
}

// ---------------------------------------------------------------------------

Polynomial::Polynomial(const MonomialBasis& basis) : basis_(basis), coeffs_(Vector::Zero(basis.size())) {}

Polynomial::Polynomial(const MonomialBasis& basis, Vector coefficients)
    : basis_(basis), coeffs_(std::move(coefficients)) {
  if (coeffs_.size() != basis_.size()) throw DimensionError("polynomial coefficient count mismatch");
}

Polynomial Polynomial::monomial(const MonomialBasis& basis, int index) {
  Polynomial p(basis);
  p.coeffs_[index] = 1.0;
  return p;
}

double Polynomial::operator()(const Vec3& x) const {
  Vector m = basis_.eval(x);
  return m.dot(coeffs_);
}

Polynomial Polynomial::derivative(int dir) const {
  MonomialBasis b = basis_;
  b.degree = std::max(basis_.degree - 1, 0);
  Polynomial out(b);
  const auto& idx = multi_indices(basis_.degree);
  for (std::size_t j = 0; j < idx.size(); ++j) {
    MultiIndex a = idx[j];
    if (a.a[dir] == 0 || coeffs_[j] == 0.0) continue;
    const double factor = a.a[dir] / basis_.scale;
    a.a[dir] -= 1;
    out.coeffs_[monomial_index(a)] += factor * coeffs_[j];
  }
  return out;
}

Polynomial Polynomial::raised(int degree) const {
  if (degree <= basis_.degree) return *this;
  MonomialBasis b = basis_;
  b.degree = degree;
  Polynomial out(b);
  out.coeffs_.head(coeffs_.size()) = coeffs_;
  return out;
}

Polynomial& Polynomial::operator+=(const Polynomial& other) {
  if (coeffs_.size() == 0) return *this = other;
  if (!same_basis_frame(basis_, other.basis_)) throw DimensionError("polynomials live in different frames");
  if (other.degree() > degree()) *this = raised(other.degree());
  coeffs_.head(other.coeffs_.size()) += other.coeffs_;
  return *this;
}

Polynomial& Polynomial::operator-=(const Polynomial& other) {
  if (coeffs_.size() == 0) {
    *this = other;
    coeffs_ = -coeffs_;
    return *this;
  }
  if (!same_basis_frame(basis_, other.basis_)) throw DimensionError("polynomials live in different frames");
  if (other.degree() > degree()) *this = raised(other.degree());
  coeffs_.head(other.coeffs_.size()) -= other.coeffs_;
  return *this;
}

Polynomial& Polynomial::operator*=(double s) {
  coeffs_ *= s;
  return *this;
}

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
  if (!same_basis_frame(a.basis(), b.basis())) throw DimensionError("polynomials live in different frames");
  MonomialBasis basis = a.basis();
  basis.degree = a.degree() + b.degree();
  Polynomial out(basis);
  const auto& ia = multi_indices(a.degree());
  const auto& ib = multi_indices(b.degree());
  for (std::size_t i = 0; i < ia.size(); ++i) {
    if (a.coefficients()[i] == 0.0) continue;
    for (std::size_t j = 0; j < ib.size(); ++j) {
      if (b.coefficients()[j] == 0.0) continue;
      MultiIndex s{{ia[i].a[0] + ib[j].a[0], ia[i].a[1] + ib[j].a[1], ia[i].a[2] + ib[j].a[2]}};
      out.coefficients()[monomial_index(s)] += a.coefficients()[i] * b.coefficients()[j];
    }
  }
  return out;
}

VectorPolynomial grad(const Polynomial& p) { return {p.derivative(0), p.derivative(1), p.derivative(2)}; }

Polynomial div(const VectorPolynomial& v) {
  Polynomial out = v[0].derivative(0);
  out += v[1].derivative(1);
  out += v[2].derivative(2);
  return out;
}

VectorPolynomial curl(const VectorPolynomial& v) {
  return {v[2].derivative(1) - v[1].derivative(2), v[0].derivative(2) - v[2].derivative(0),
          v[1].derivative(0) - v[0].derivative(1)};
}

TensorPolynomial sym_grad(const VectorPolynomial& v) {
  TensorPolynomial e;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) e[i][j] = 0.5 * (v[i].derivative(j) + v[j].derivative(i));
  return e;
}

VectorPolynomial div_sym_grad(const VectorPolynomial& v) {
  const TensorPolynomial e = sym_grad(v);
  VectorPolynomial out;
  for (int i = 0; i < 3; ++i) {
    out[i] = e[i][0].derivative(0);
    out[i] += e[i][1].derivative(1);
    out[i] += e[i][2].derivative(2);
  }
  return out;
}

Polynomial laplacian(const Polynomial& p) {
  Polynomial out = p.derivative(0).derivative(0);
  out += p.derivative(1).derivative(1);
  out += p.derivative(2).derivative(2);
  return out;
}

Vec3 eval(const VectorPolynomial& v, const Vec3& x) { return Vec3(v[0](x), v[1](x), v[2](x)); }

VectorPolynomial scaled_position(const MonomialBasis& basis) {
  MonomialBasis b = basis;
  b.degree = 1;
  return {Polynomial::monomial(b, 1), Polynomial::monomial(b, 2), Polynomial::monomial(b, 3)};
}

VectorPolynomial cross(const VectorPolynomial& a, const VectorPolynomial& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

// ---------------------------------------------------------------------------

double QuadratureRule::total_weight() const {
  double s = 0.0;
  for (double w : weights) s += w;
  return s;
}

void QuadratureRule::append(const QuadratureRule& other) {
  points.insert(points.end(), other.points.begin(), other.points.end());
  weights.insert(weights.end(), other.weights.begin(), other.weights.end());
}

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  if (n < 1) throw QuadratureError("Gauss-Legendre rule needs at least one point");
  nodes.resize(n);
  weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    double p0 = 1.0;
    double p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    nodes[i] = 0.5 * (1.0 - x);
    weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);
  }
}

QuadratureRule triangle_rule(const Vec3& a, const Vec3& b, const Vec3& c, int order) {
  const int n = std::max(1, (order + 3) / 2);
  std::vector<double> x;
  std::vector<double> w;
  gauss_legendre(n, x, w);
  const Vec3 e1 = b - a;
  const Vec3 e2 = c - a;
  const double jac = e1.cross(e2).norm();
  QuadratureRule rule;
  rule.points.reserve(n * n);
  rule.weights.reserve(n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double r = x[i];
      const double s = x[j];
      rule.points.push_back(a + r * ((1.0 - s) * e1 + s * e2));
      rule.weights.push_back(jac * r * w[i] * w[j]);
    }
  return rule;
}

namespace {

// Grundmann-Moeller rule of degree 2s+1 on the reference tetrahedron, in
// barycentric coordinates with weights summing to one.
struct BarycentricRule {
  std::vector<std::array<double, 4>> points;
  std::vector<double> weights;
};

BarycentricRule grundmann_moeller(int s) {
  BarycentricRule r;
  const int n = 3, d = 2 * s + 1;
  for (int i = 0; i <= s; ++i) {
    const int m = s - i;
    const double denom = d + n - 2 * i;
    double w = std::pow(2.0, -2 * s) * std::pow(denom, d) / (std::tgamma(i + 1.0) * std::tgamma(d + n - i + 1.0));
    if (i % 2) w = -w;
    for (int b0 = 0; b0 <= m; ++b0)
      for (int b1 = 0; b0 + b1 <= m; ++b1)
        for (int b2 = 0; b0 + b1 + b2 <= m; ++b2) {
          const int b3 = m - b0 - b1 - b2;
          r.points.push_back({(2 * b0 + 1) / denom, (2 * b1 + 1) / denom, (2 * b2 + 1) / denom, (2 * b3 + 1) / denom});
          r.weights.push_back(w);
        }
  }
  double sum = 0.0;
  for (double w : r.weights) sum += w;
  for (double& w : r.weights) w /= sum;
  return r;
}

const BarycentricRule& gm_rule(int s) {
  static const std::array<BarycentricRule, 4> rules{grundmann_moeller(0), grundmann_moeller(1), grundmann_moeller(2),
                                                    grundmann_moeller(3)};
  return rules[s];
}

}  // namespace

QuadratureRule tetrahedron_rule(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d, int order) {
  const Vec3 e1 = b - a;
  const Vec3 e2 = c - a;
  const Vec3 e3 = d - a;
  const double jac = std::abs(e1.dot(e2.cross(e3)));
  QuadratureRule rule;

  // Low orders: Grundmann-Moeller (few points, a few negative weights).
  if (order <= 7) {
    const BarycentricRule& g = gm_rule(std::max(0, order / 2));
    rule.points.reserve(g.points.size());
    rule.weights.reserve(g.points.size());
    for (std::size_t k = 0; k < g.points.size(); ++k) {
      const auto& l = g.points[k];
      rule.points.push_back(l[0] * a + l[1] * b + l[2] * c + l[3] * d);
      rule.weights.push_back(g.weights[k] * jac / 6.0);
    }
    return rule;
  }

  // Collapsed Gauss product rule.
  const int n = std::max(1, (order + 4) / 2);
  std::vector<double> x;
  std::vector<double> w;
  gauss_legendre(n, x, w);
  rule.points.reserve(n * n * n);
  rule.weights.reserve(n * n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        const double r = x[i];
        const double s = x[j];
        const double t = x[k];
        rule.points.push_back(a + r * ((1.0 - s) * e1 + s * ((1.0 - t) * e2 + t * e3)));
        rule.weights.push_back(jac * r * r * s * w[i] * w[j] * w[k]);
      }
  return rule;
}

QuadratureRule cell_quadrature(const PolyMesh& mesh, int cell, int order) {
  const Cell& c = mesh.cell(cell);
  const double h3 = c.diameter * c.diameter * c.diameter;
  QuadratureRule rule;
  for (std::size_t lf = 0; lf < c.faces.size(); ++lf) {
    const Face& f = mesh.face(c.faces[lf]);
    const auto n = f.vertices.size();
    for (std::size_t i = 0; i < n; ++i) {
      Vec3 a = mesh.vertex(f.vertices[i]);
      Vec3 b = mesh.vertex(f.vertices[(i + 1) % n]);
      if (c.orientation[lf] < 0) std::swap(a, b);
      const double vol = (f.centroid - c.centroid).dot((a - c.centroid).cross(b - c.centroid)) / 6.0;
      if (!(vol > 1e-14 * h3))
        throw DegenerateCellError("cell " + std::to_string(cell) + " is not star-shaped about its centroid");
      rule.append(tetrahedron_rule(c.centroid, f.centroid, a, b, order));
    }
  }
  return rule;
}

QuadratureRule face_quadrature(const PolyMesh& mesh, int face, int order) {
  const Face& f = mesh.face(face);
  const auto n = f.vertices.size();
  QuadratureRule rule;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3& a = mesh.vertex(f.vertices[i]);
    const Vec3& b = mesh.vertex(f.vertices[(i + 1) % n]);
    const double area2 = (a - f.centroid).cross(b - f.centroid).dot(f.normal);
    if (!(area2 > 1e-14 * f.diameter * f.diameter))
      throw DegenerateFaceError("face " + std::to_string(face) + " is not star-shaped about its centroid");
    rule.append(triangle_rule(f.centroid, a, b, order));
  }
  return rule;
}

double MomentTable::product(int a, int b) const {
  const auto& idx = multi_indices(basis.degree);
  MultiIndex s{{idx[a].a[0] + idx[b].a[0], idx[a].a[1] + idx[b].a[1], idx[a].a[2] + idx[b].a[2]}};
  if (s.degree() > basis.degree) throw DimensionError("moment table degree too small for product");
  return moments[monomial_index(s)];
}

Matrix MomentTable::gram(int k) const {
  const int n = poly_dim3(k);
  Matrix g(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g(i, j) = product(i, j);
  return g;
}

MomentTable integrate_monomials(const PolyMesh& mesh, int cell, int k) {
  MomentTable table;
  table.basis = cell_basis(mesh, cell, k);
  table.moments = Vector::Zero(table.basis.size());
  const QuadratureRule q = cell_quadrature(mesh, cell, k);
  Vector m(table.basis.size());
  for (std::size_t i = 0; i < q.size(); ++i) {
    table.basis.eval(q.points[i], std::span<double>(m.data(), static_cast<std::size_t>(m.size())));
    table.moments += q.weights[i] * m;
  }
  return table;
}

// ---------------------------------------------------------------------------

std::vector<VectorPolynomial> gradient_basis(const MonomialBasis& basis, int k) {
  MonomialBasis b = basis;
  b.degree = k + 1;
  std::vector<VectorPolynomial> out;
  for (int j = 1; j < b.size(); ++j) out.push_back(grad(Polynomial::monomial(b, j)));
  return out;
}

std::vector<VectorPolynomial> gradient_complement_basis(const MonomialBasis& basis, int k) {
  if (k < 1) return {};
  MonomialBasis b = basis;
  b.degree = k - 1;
  const VectorPolynomial xh = scaled_position(basis);
  std::vector<VectorPolynomial> candidates;
  for (int j = 0; j < b.size(); ++j)
    for (int c = 0; c < 3; ++c) {
      VectorPolynomial e{Polynomial(b), Polynomial(b), Polynomial(b)};
      e[c] = Polynomial::monomial(b, j);
      candidates.push_back(cross(xh, e));
    }
  return independent_subset(candidates);
}

std::vector<VectorPolynomial> curl_basis(const MonomialBasis& basis, int k) {
  MonomialBasis b = basis;
  b.degree = k + 1;
  std::vector<VectorPolynomial> candidates;
  for (int j = 0; j < b.size(); ++j)
    for (int c = 0; c < 3; ++c) {
      VectorPolynomial e{Polynomial(b), Polynomial(b), Polynomial(b)};
      e[c] = Polynomial::monomial(b, j);
      candidates.push_back(curl(e));
    }
  return independent_subset(candidates);
}

std::vector<VectorPolynomial> curl_complement_basis(const MonomialBasis& basis, int k) {
  if (k < 1) return {};
  MonomialBasis b = basis;
  b.degree = k - 1;
  const VectorPolynomial xh = scaled_position(basis);
  std::vector<VectorPolynomial> out;
  for (int j = 0; j < b.size(); ++j) {
    const Polynomial m = Polynomial::monomial(b, j);
    out.push_back({xh[0] * m, xh[1] * m, xh[2] * m});
  }
  return out;
}

Matrix vector_gram(const PolyMesh& mesh, int cell, const std::vector<VectorPolynomial>& fields) {
  int deg = 0;
  for (const auto& v : fields)
    for (const auto& c : v) deg = std::max(deg, c.degree());
  const QuadratureRule q = cell_quadrature(mesh, cell, 2 * deg);
  const auto n = static_cast<int>(fields.size());
  Matrix values(q.size() * 3, n);
  for (int j = 0; j < n; ++j)
    for (std::size_t i = 0; i < q.size(); ++i) values.block<3, 1>(3 * i, j) = eval(fields[j], q.points[i]);
  Matrix g = Matrix::Zero(n, n);
  for (std::size_t i = 0; i < q.size(); ++i) {
    const auto rows = values.middleRows(3 * i, 3);
    g += q.weights[i] * rows.transpose() * rows;
  }
  return g;
}

}  // namespace vemsad
