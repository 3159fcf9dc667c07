#pragma once

#include "vemsad/assembly.hpp"
#include "vemsad/coupling.hpp"
#include "vemsad/jet.hpp"
#include "vemsad/mesh.hpp"
#include "vemsad/solver.hpp"

#include <array>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <type_traits>
#include <vector>

namespace vemsad {

using JetVectorField = std::function<JetVec(const JetVec&)>;
using JetScalarField = std::function<Jet(const JetVec&)>;

/// Exact fields of a manufactured solution, with the derivatives the error
/// norms need.
struct ExactSolution {
  VectorField u;
  std::function<Mat3(const Vec3&)> grad_u;
  ScalarField p;
  VectorField zeta;
  ScalarField div_zeta;
  ScalarField phi;
};

/// Closed-form u and phi plus everything derived from them through the
/// strong form: p = -lambda div u + ell(phi), zeta = M grad phi,
/// f = -div(2 mu eps(u) - p I), g = theta phi - div zeta.
class ManufacturedCase {
 public:
  ManufacturedCase(std::string name, std::shared_ptr<const MaterialLaw> law, JetVectorField u, JetScalarField phi,
                   BoundaryPredicate mechanics, BoundaryPredicate diffusion);

  const std::string& name() const { return name_; }
  const MaterialLaw& law() const { return *law_; }
  std::shared_ptr<const MaterialLaw> law_ptr() const { return law_; }
  const PhysicalParameters& params() const { return law_->params(); }
  const ExactSolution& exact() const { return exact_; }

  /// Derived data at a point.
  Vec3 body_force(const Vec3& x) const;
  double source(const Vec3& x) const;
  Mat3 stress(const Vec3& x) const;
  /// M(eps(u), p) at x (the inverse of the law's Minv).
  Mat3 mobility(const Vec3& x) const;

  /// Callables and per-field tags for `mesh`.
  ProblemData problem_data(const PolyMesh& mesh) const;

 private:
  struct Point {
    Mat3 grad_u;
    std::array<Mat3, 3> hess_u;  // per component
    Vec3 lap_u, grad_div_u;
    double p;
    Vec3 grad_p;
    Jet phi;
  };
  Point point(const Vec3& x) const;

  std::string name_;
  std::shared_ptr<const MaterialLaw> law_;
  JetVectorField u_;
  JetScalarField phi_;
  BoundaryPredicate mech_, diff_;
  ExactSolution exact_;
};

/// Example 1 on the unit cube: Gamma_N = {x = 1, y = 1, z = 1} and Gamma_D
/// the rest, for both fields.
ManufacturedCase example1_case(StressReading reading = StressReading::matrix);

/// Unit-cube predicate: faces on x = 1, y = 1 or z = 1 -> neumann, else dirichlet.
FaceTag unit_cube_example1_tag(const Vec3& centroid);

/// Residuals of the four strong-form equations at random interior points,
/// computed by Richardson-extrapolated finite differences of the closed
/// forms (independent of the jets used to derive f and g). Relative to the
/// magnitude of the largest term of each equation.
struct ResidualReport {
  double momentum = 0.0;   // -div sigma = f
  double pressure = 0.0;   // p + lambda div u - ell(phi) = 0
  double flux = 0.0;       // zeta - M grad phi = 0
  double mass = 0.0;       // theta phi - div zeta = g
  double max() const;
};
ResidualReport manufactured_residuals(const ManufacturedCase& c, int points = 100, unsigned seed = 7,
                                      const Box& box = {});

/// Richardson-extrapolated central difference of F along direction `dir`.
template <class F>
auto richardson_derivative(const F& fn, const Vec3& x, int dir, double h) {
  using T = std::decay_t<decltype(fn(x))>;  // evaluated, never an expression template
  auto central = [&](double s) -> T {
    Vec3 a = x, b = x;
    a[dir] += s;
    b[dir] -= s;
    return (fn(a) - fn(b)) / (2 * s);
  };
  const T d1 = central(h), d2 = central(h / 2), d3 = central(h / 4);
  const T r1 = (4.0 * d2 - d1) / 3.0;
  const T r2 = (4.0 * d3 - d2) / 3.0;
  return T((16.0 * r2 - r1) / 15.0);
}

/// Weighted errors against the projected discrete fields:
///   u: sqrt(2 mu) ||eps(u) - eps(Pi u_h)||, p: ((2mu)^-1 + lambda^-1)^1/2 ||p - p_h||,
///   zeta: (||zeta - Pi zeta_h||^2_Minv + M ||div zeta - div zeta_h||^2)^1/2 with
///   Minv at the exact (eps(u), p), phi: (M^-1 + theta)^1/2 ||phi - phi_h||.
FieldNorms compute_errors(Discretization& disc, const MaterialLaw& law, const SolutionState& state,
                          const ExactSolution& exact, int quad_order = 6);

struct LevelResult {
  std::string label;
  int cells = 0;
  double h = 0.0;
  FieldNorms errors;
  int iterations = 0;
  double seconds = 0.0;
};

struct RateAnomalyWarning {
  std::string message;
};

struct ErrorReport {
  std::string case_name;
  std::string family;
  std::vector<LevelResult> levels;
  std::vector<double> rates;   // total error, consecutive levels
  double least_squares_rate = 0.0;
  std::vector<RateAnomalyWarning> warnings;

  void write_text(std::ostream& os) const;
  void write_csv(std::ostream& os) const;
  /// Whitespace-separated columns for gnuplot/pgfplots.
  void write_plot_data(std::ostream& os) const;
};

/// log(e_i / e_{i+1}) / log(h_i / h_{i+1}).
std::vector<double> observed_rates(const std::vector<double>& h, const std::vector<double>& e);
/// Slope of log e against log h.
double least_squares_rate(const std::vector<double>& h, const std::vector<double>& e);

struct ConvergenceConfig {
  FixedPointConfig fixed_point;
  AssemblyOptions assembly;
  int error_order = 6;
  std::function<void(const LevelResult&)> on_level;  // progress callback
};

/// Meshes should get finer in h; labels default to the cell count.
ErrorReport run_convergence(const ManufacturedCase& c, const std::vector<PolyMesh>& meshes, const std::string& family,
                            const ConvergenceConfig& config = {});

/// Uniform hex or prism meshes of the unit cube for each n.
std::vector<PolyMesh> structured_family(StructuredKind kind, const std::vector<int>& ns);

// ---------------------------------------------------------------------------
// Example 2

struct LithiationConfig {
  std::string law = "example2";  // LawRegistry name
  bool clamped = false;  // clamp the top and bottom bases
  StressReading reading = StressReading::matrix;
  double boundary_concentration = Example2Constants{}.boundary_concentration;  // on the outer surface
  double traction = Example2Constants{}.traction;  // times the outward normal, outer surface only
  // phi is O(1e-14) here, so the stopping rule is purely relative.
  FixedPointConfig fixed_point = [] {
    FixedPointConfig c;
    c.floor = 0.0;
    return c;
  }();
  AssemblyOptions assembly;
};

struct LithiationResult {
  SolutionState state;
  IterationTrace trace;
  double max_displacement = 0.0;        // over vertex DoFs
  double max_outer_displacement = 0.0;  // over vertices on the outer circumference
  double max_abs_neumann_flux = 0.0;    // flux DoFs on diffusion Neumann faces
  bool finite = true;
};

/// Per-field tags on a perforated cylinder with axis z: faces whose normal
/// points towards the axis are inner, away from it outer, |n_z| > 0.5 bases.
struct CylinderTags {
  BoundaryTags mechanics, diffusion;
  std::vector<int> inner, outer, bases;
};
CylinderTags cylinder_tags(const PolyMesh& mesh, bool clamped);

LithiationResult run_lithiation(const PolyMesh& mesh, const LithiationConfig& config,
                                const std::filesystem::path& vtk_out = {});
LithiationResult run_lithiation(const std::filesystem::path& mesh_path, const LithiationConfig& config,
                                const std::filesystem::path& vtk_out = {});

/// Polyhedral VTU: cell data p, phi, div zeta, flux (Pi zeta at the cell
/// centroid), flux magnitude and Pi u at the centroid; point data
/// displacement (the vertex DoFs).
void export_vtk(Discretization& disc, const SolutionState& state, const std::filesystem::path& path);

}  // namespace vemsad
