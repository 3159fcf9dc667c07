#pragma once

#include "vemsad/types.hpp"

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace vemsad {

struct PhysicalParameters {
  double mu = 1.0;
  double lambda = 1.0;
  double theta = 0.0;
  double M = 1.0;  // diffusivity bound, used in norms and diagnostics only
  std::optional<double> lipschitz_M;
  std::optional<double> lipschitz_ell;

  /// Throws ConstraintError unless mu, lambda, M > 0 and theta >= 0.
  void validate() const;
};

/// How the ill-typed "(2 mu eps - p) I" in the published laws is read.
///   matrix: the Cauchy stress sigma = 2 mu eps - p I (default);
///   scalar: the scalar s = 2 mu tr(eps) - p times the identity.
enum class StressReading { matrix, scalar };

class MaterialLaw {
 public:
  virtual ~MaterialLaw() = default;
  /// Inverse mobility Minv(eps, p) at x; must be symmetric positive definite.
  virtual Mat3 eval_Minv(const Mat3& strain, double pressure, const Vec3& x) const = 0;
  virtual double eval_ell(double phi) const = 0;
  /// d ell / d phi (used by manufactured data and diagnostics).
  virtual double eval_dell(double phi) const;
  virtual std::string label() const = 0;

  const PhysicalParameters& params() const { return params_; }
  /// Cauchy stress 2 mu eps - p I.
  Mat3 stress(const Mat3& strain, double pressure) const;

 protected:
  explicit MaterialLaw(PhysicalParameters params);
  PhysicalParameters params_;
};

/// Minv = 1e3 exp(1e-4 t) I with t = tr(sigma) (matrix) or 3 s (scalar);
/// ell = 1 + phi^2 / (1 + phi^2).
std::unique_ptr<MaterialLaw> example1_law(StressReading reading = StressReading::matrix);
PhysicalParameters example1_parameters();

/// M = m0 (I + m0 m1 sigma^2) (or s^2 I), ell = K0 phi.
std::unique_ptr<MaterialLaw> example2_law(StressReading reading = StressReading::matrix);
PhysicalParameters example2_parameters();

struct Example2Constants {
  double E = 1e-2;
  double nu = 0.3;
  double m0 = 1e2;
  double m1 = 1e3;
  double molar_volume = 3.497e12;
  double boundary_concentration = 2.29e-14;
  double traction = -2e-4;
  double K0() const;
};

/// Minv constant, ell = a + b phi.
std::unique_ptr<MaterialLaw> constant_law(PhysicalParameters params, const Mat3& Minv, double a, double b);

/// Fully user-defined law from callables.
std::unique_ptr<MaterialLaw> function_law(PhysicalParameters params, std::string label,
                                          std::function<Mat3(const Mat3&, double, const Vec3&)> minv,
                                          std::function<double(double)> ell,
                                          std::function<double(double)> dell = nullptr);

struct LawOptions {
  StressReading reading = StressReading::matrix;
  std::optional<double> mu, lambda, theta, M;
};

using LawFactory = std::function<std::unique_ptr<MaterialLaw>(const LawOptions&)>;

/// Name -> factory. Ships with "example1", "example2" and "linear".
class LawRegistry {
 public:
  static LawRegistry& instance();
  void add(const std::string& name, LawFactory factory);
  bool contains(const std::string& name) const;
  std::unique_ptr<MaterialLaw> make(const std::string& name, const LawOptions& options = {}) const;
  std::vector<std::string> names() const;

 private:
  LawRegistry();
  std::map<std::string, LawFactory> factories_;
};

/// Throws NonSPDError if A is not symmetric (1e-12 relative) or its smallest
/// eigenvalue is not positive (1e-12 relative to the largest).
void check_spd(const Mat3& A);

struct LawSample {
  Mat3 strain = Mat3::Zero();
  double pressure = 0.0;
  double phi = 0.0;
  Vec3 x = Vec3::Zero();
};

struct LawDiagnostics {
  bool spd_ok = true;
  double min_eigenvalue = 0.0;
  double max_eigenvalue = 0.0;
  double max_symmetry_residual = 0.0;
  double lipschitz_Minv = 0.0;  // finite-difference estimate over the samples
  double lipschitz_ell = 0.0;
};

LawDiagnostics law_diagnostics(const MaterialLaw& law, const std::vector<LawSample>& samples);

}  // namespace vemsad
