#pragma once

#include "vemsad/assembly.hpp"
#include "vemsad/coupling.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace vemsad {

enum class LinearSolverKind { automatic, lu };

/// Direct solver for [[A, B^T], [B, -C]]. When every diagonal block of C is
/// invertible the Schur complement A + B^T C^{-1} B (SPD) is factored by
/// Cholesky; otherwise (or when asked to) the full saddle matrix goes to a
/// sparse LU.
class SaddlePointSolver {
 public:
  explicit SaddlePointSolver(LinearSolverKind kind = LinearSolverKind::automatic);
  ~SaddlePointSolver();
  SaddlePointSolver(SaddlePointSolver&&) noexcept;
  SaddlePointSolver& operator=(SaddlePointSolver&&) noexcept;

  /// Throws SolverError if the factorization fails.
  void factor(const BlockSystem& system);
  /// Solves with new right sides (f, g); the matrix is the last factored one.
  void solve(const Vector& f, const Vector& g, Vector& x, Vector& y) const;
  bool factored() const;
  /// "schur-cholesky" or "lu".
  std::string method() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// || K [x; y] - [f; g] || / max(||[f; g]||, tiny).
double relative_residual(const BlockSystem& s, const Vector& f, const Vector& g, const Vector& x, const Vector& y);

enum class IncrementNorm { phi, combined };

struct FixedPointConfig {
  double tolerance = 1e-5;
  int max_iterations = 50;
  IncrementNorm norm = IncrementNorm::phi;
  double damping = 1.0;  // phi <- damping * phi_new + (1 - damping) * phi_old
  bool absolute = false; // stop on increment <= tolerance instead of the relative rule
  double floor = 1.0;    // relative rule: increment <= tolerance * max(floor, ||phi||)
  Vector phi0;           // empty -> zero field
  LinearSolverKind linear_solver = LinearSolverKind::automatic;

  /// Throws ConstraintError on tolerance <= 0, max_iterations < 1 or damping outside (0, 1].
  void validate() const;
};

struct IterationRecord {
  int iteration = 0;
  double increment = 0.0;        // the norm used by the stopping rule
  double phi_increment = 0.0;    // ||phi^{n+1} - phi^n||_{Q2}
  double phi_norm = 0.0;         // ||phi^{n+1}||_{Q2}
  double elasticity_residual = 0.0;
  double diffusion_residual = 0.0;
  double assembly_seconds = 0.0;
  double factor_seconds = 0.0;
  double solve_seconds = 0.0;
  MinvRange minv;
};

struct IterationTrace {
  std::vector<IterationRecord> records;
  bool converged = false;
  int elasticity_matrix_assemblies = 0;
  int elasticity_factorizations = 0;
  int diffusion_assemblies = 0;
  std::string elasticity_method, diffusion_method;

  int iterations() const { return static_cast<int>(records.size()); }
  std::vector<double> increments() const;
};

class NonConvergenceError : public SolverError {
 public:
  NonConvergenceError(const std::string& what, IterationTrace trace) : SolverError(what), trace_(std::move(trace)) {}
  const IterationTrace& trace() const { return trace_; }

 private:
  IterationTrace trace_;
};

struct CoupledSolution {
  SolutionState state;
  IterationTrace trace;
};

/// Picard iteration, elasticity first: given phi^n solve for (u, p) with
/// ell(phi^n), then for (zeta, phi) with Minv(eps(Pi u), p). The elasticity
/// matrix is assembled and factored once. Throws NonConvergenceError.
CoupledSolution solve_coupled(Discretization& disc, const MaterialLaw& law, const FixedPointConfig& config = {});

/// Weighted norms of a discrete state (used for increments):
///   ||u||^2 = 2 mu ||eps(Pi u)||^2, ||p||^2 = (1/(2 mu) + 1/lambda) ||p||^2,
///   ||zeta||^2 = ||Pi zeta||^2_Minv + M ||div zeta||^2, ||phi||^2 = (1/M + theta) ||phi||^2.
struct FieldNorms {
  double u = 0.0, p = 0.0, zeta = 0.0, phi = 0.0;
  double total() const;
};

/// `minv_state` supplies the Minv weight (pass the current iterate).
FieldNorms discrete_norms(Discretization& disc, const MaterialLaw& law, const SolutionState& diff,
                          const SolutionState& minv_state);
double phi_norm(const Discretization& disc, const Vector& phi);

struct ContractionConstants {
  std::optional<double> C1, C2;   // stability constants of the two subproblems
  std::optional<double> data_norm; // ||phi_D||_{1/2} + ||g||_0
};

struct ContractionReport {
  bool sufficient_data = false;
  double ratio = 0.0;             // geometric mean of the last successive quotients
  double max_ratio = 0.0;
  std::vector<double> quotients;
  std::optional<double> well_posedness_value;  // must be < 1
  std::optional<double> error_estimate_value;  // must be < 1/2
  std::string summary() const;
};

/// Informational only; never throws.
ContractionReport check_contraction_diagnostics(const IterationTrace& trace, const PhysicalParameters& params,
                                                const std::optional<LawDiagnostics>& law = std::nullopt,
                                                const ContractionConstants& constants = {});

}  // namespace vemsad
