#include "vemsad/coupling.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>

namespace vemsad {

void PhysicalParameters::validate() const {
  if (!(mu > 0) || !(lambda > 0) || !(M > 0) || !(theta >= 0))
    throw ConstraintError("physical parameters need mu, lambda, M > 0 and theta >= 0");
}

MaterialLaw::MaterialLaw(PhysicalParameters params) : params_(params) { params_.validate(); }

Mat3 MaterialLaw::stress(const Mat3& strain, double pressure) const {
  return 2.0 * params_.mu * strain - pressure * Mat3::Identity();
}

double MaterialLaw::eval_dell(double phi) const {
  const double h = 1e-6 * std::max(1.0, std::abs(phi));
  return (eval_ell(phi + h) - eval_ell(phi - h)) / (2 * h);
}

namespace {

class Example1Law final : public MaterialLaw {
 public:
  Example1Law(PhysicalParameters p, StressReading r) : MaterialLaw(p), reading_(r) {}
  Mat3 eval_Minv(const Mat3& strain, double pressure, const Vec3&) const override {
    const double two_mu_tr = 2.0 * params_.mu * strain.trace();
    const double t = reading_ == StressReading::matrix ? two_mu_tr - 3.0 * pressure : 3.0 * (two_mu_tr - pressure);
    return 1e3 * std::exp(1e-4 * t) * Mat3::Identity();
  }
  double eval_ell(double phi) const override { return 1.0 + phi * phi / (1.0 + phi * phi); }
  double eval_dell(double phi) const override { return 2.0 * phi / ((1.0 + phi * phi) * (1.0 + phi * phi)); }
  std::string label() const override { return "example1"; }

 private:
  StressReading reading_;
};

class Example2Law final : public MaterialLaw {
 public:
  Example2Law(PhysicalParameters p, StressReading r, Example2Constants k) : MaterialLaw(p), reading_(r), k_(k) {}
  Mat3 eval_Minv(const Mat3& strain, double pressure, const Vec3&) const override {
    Mat3 sq;
    if (reading_ == StressReading::matrix) {
      const Mat3 s = stress(strain, pressure);
      sq = s * s;
    } else {
      const double s = 2.0 * params_.mu * strain.trace() - pressure;
      sq = s * s * Mat3::Identity();
    }
    const Mat3 m = k_.m0 * (Mat3::Identity() + k_.m0 * k_.m1 * sq);
    Mat3 inv = m.inverse();
    return 0.5 * (inv + inv.transpose());
  }
  double eval_ell(double phi) const override { return k_.K0() * phi; }
  double eval_dell(double) const override { return k_.K0(); }
  std::string label() const override { return "example2"; }

 private:
  StressReading reading_;
  Example2Constants k_;
};

class ConstantLaw final : public MaterialLaw {
 public:
  ConstantLaw(PhysicalParameters p, const Mat3& minv, double a, double b) : MaterialLaw(p), minv_(minv), a_(a), b_(b) {}
  Mat3 eval_Minv(const Mat3&, double, const Vec3&) const override { return minv_; }
  double eval_ell(double phi) const override { return a_ + b_ * phi; }
  double eval_dell(double) const override { return b_; }
  std::string label() const override { return "linear"; }

 private:
  Mat3 minv_;
  double a_, b_;
};

class FunctionLaw final : public MaterialLaw {
 public:
  FunctionLaw(PhysicalParameters p, std::string label, std::function<Mat3(const Mat3&, double, const Vec3&)> minv,
              std::function<double(double)> ell, std::function<double(double)> dell)
      : MaterialLaw(p), label_(std::move(label)), minv_(std::move(minv)), ell_(std::move(ell)), dell_(std::move(dell)) {}
  Mat3 eval_Minv(const Mat3& e, double p, const Vec3& x) const override { return minv_(e, p, x); }
  double eval_ell(double phi) const override { return ell_(phi); }
  double eval_dell(double phi) const override { return dell_ ? dell_(phi) : MaterialLaw::eval_dell(phi); }
  std::string label() const override { return label_; }

 private:
  std::string label_;
  std::function<Mat3(const Mat3&, double, const Vec3&)> minv_;
  std::function<double(double)> ell_, dell_;
};

PhysicalParameters apply(PhysicalParameters p, const LawOptions& o) {
  if (o.mu) p.mu = *o.mu;
  if (o.lambda) p.lambda = *o.lambda;
  if (o.theta) p.theta = *o.theta;
  if (o.M) p.M = *o.M;
  return p;
}

}  // namespace

double Example2Constants::K0() const {
  const double mu = E / (2.0 * (1.0 + nu));
  const double lambda = E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
  return molar_volume * (2.0 * mu + 3.0 * lambda) / 3.0;
}

PhysicalParameters example1_parameters() {
  PhysicalParameters p;
  p.mu = 1e2;
  p.lambda = 1e3;
  p.theta = 1e-3;
  p.M = 20.0;
  return p;
}

PhysicalParameters example2_parameters() {
  const Example2Constants k;
  PhysicalParameters p;
  p.mu = k.E / (2.0 * (1.0 + k.nu));
  p.lambda = k.E * k.nu / ((1.0 + k.nu) * (1.0 - 2.0 * k.nu));
  p.theta = 1.0;
  p.M = 1.0;
  return p;
}

std::unique_ptr<MaterialLaw> example1_law(StressReading reading) {
  return std::make_unique<Example1Law>(example1_parameters(), reading);
}

std::unique_ptr<MaterialLaw> example2_law(StressReading reading) {
  return std::make_unique<Example2Law>(example2_parameters(), reading, Example2Constants{});
}

std::unique_ptr<MaterialLaw> constant_law(PhysicalParameters params, const Mat3& Minv, double a, double b) {
  return std::make_unique<ConstantLaw>(params, Minv, a, b);
}

std::unique_ptr<MaterialLaw> function_law(PhysicalParameters params, std::string label,
                                          std::function<Mat3(const Mat3&, double, const Vec3&)> minv,
                                          std::function<double(double)> ell, std::function<double(double)> dell) {
  return std::make_unique<FunctionLaw>(params, std::move(label), std::move(minv), std::move(ell), std::move(dell));
}

LawRegistry::LawRegistry() {
  add("example1", [](const LawOptions& o) -> std::unique_ptr<MaterialLaw> {
    return std::make_unique<Example1Law>(apply(example1_parameters(), o), o.reading);
  });
  add("example2", [](const LawOptions& o) -> std::unique_ptr<MaterialLaw> {
    return std::make_unique<Example2Law>(apply(example2_parameters(), o), o.reading, Example2Constants{});
  });
  add("linear", [](const LawOptions& o) -> std::unique_ptr<MaterialLaw> {
    return constant_law(apply(PhysicalParameters{}, o), Mat3::Identity(), 0.0, 1.0);
  });
}

LawRegistry& LawRegistry::instance() {
  static LawRegistry registry;
  return registry;
}

void LawRegistry::add(const std::string& name, LawFactory factory) { factories_[name] = std::move(factory); }

bool LawRegistry::contains(const std::string& name) const { return factories_.count(name) > 0; }

std::unique_ptr<MaterialLaw> LawRegistry::make(const std::string& name, const LawOptions& options) const {
  auto it = factories_.find(name);
  if (it == factories_.end()) throw ConstraintError("unknown material law '" + name + "'");
  return it->second(options);
}

std::vector<std::string> LawRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : factories_) out.push_back(name);
  return out;
}

void check_spd(const Mat3& A) {
  if (!A.allFinite()) throw NonSPDError("Minv has non-finite entries");
  const double scale = A.norm();
  if ((A - A.transpose()).norm() > 1e-12 * scale) throw NonSPDError("Minv is not symmetric");
  const Eigen::Vector3d ev = Eigen::SelfAdjointEigenSolver<Mat3>(0.5 * (A + A.transpose()), Eigen::EigenvaluesOnly).eigenvalues();
  if (!(ev[0] > 1e-12 * std::abs(ev[2]))) throw NonSPDError("Minv is not positive definite");
}

LawDiagnostics law_diagnostics(const MaterialLaw& law, const std::vector<LawSample>& samples) {
  LawDiagnostics d;
  if (samples.empty()) throw DimensionError("law_diagnostics needs at least one sample");
  d.min_eigenvalue = std::numeric_limits<double>::infinity();
  d.max_eigenvalue = -std::numeric_limits<double>::infinity();
  std::mt19937 rng(12345);
  std::normal_distribution<double> normal;
  for (const LawSample& s : samples) {
    const Mat3 a = law.eval_Minv(s.strain, s.pressure, s.x);
    const double asym = (a - a.transpose()).norm() / std::max(a.norm(), 1e-300);
    d.max_symmetry_residual = std::max(d.max_symmetry_residual, asym);
    const Eigen::Vector3d ev = Eigen::SelfAdjointEigenSolver<Mat3>(0.5 * (a + a.transpose()), Eigen::EigenvaluesOnly).eigenvalues();
    d.min_eigenvalue = std::min(d.min_eigenvalue, ev[0]);
    d.max_eigenvalue = std::max(d.max_eigenvalue, ev[2]);
    try {
      check_spd(a);
    } catch (const NonSPDError&) {
      d.spd_ok = false;
    }

    // central differences along a random unit direction in (eps, p)
    Mat3 de;
    for (int i = 0; i < 3; ++i)
      for (int j = i; j < 3; ++j) de(i, j) = de(j, i) = normal(rng);
    double dp = normal(rng);
    const double len = std::sqrt(de.squaredNorm() + dp * dp);
    de /= len;
    dp /= len;
    const double h = 1e-6 * std::max(1.0, std::sqrt(s.strain.squaredNorm() + s.pressure * s.pressure));
    const Mat3 plus = law.eval_Minv(s.strain + h * de, s.pressure + h * dp, s.x);
    const Mat3 minus = law.eval_Minv(s.strain - h * de, s.pressure - h * dp, s.x);
    d.lipschitz_Minv = std::max(d.lipschitz_Minv, (plus - minus).norm() / (2 * h));
    const double hphi = 1e-6 * std::max(1.0, std::abs(s.phi));
    d.lipschitz_ell =
        std::max(d.lipschitz_ell, std::abs(law.eval_ell(s.phi + hphi) - law.eval_ell(s.phi - hphi)) / (2 * hphi));
  }
  return d;
}

}  // namespace vemsad
