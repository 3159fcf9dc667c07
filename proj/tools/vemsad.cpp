// vemsad: convergence studies on manufactured solutions and the lithiation
// demo. Exit codes: 0 success, 2 fixed point not converged, 3 bad input.

#include "vemsad/harness.hpp"
#include "vemsad/mesh_io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <string>

namespace fs = std::filesystem;
using namespace vemsad;

namespace {

constexpr int kExitNotConverged = 2;
constexpr int kExitInput = 3;

// Flat JSON object -> CLI11 config items; keys are long flag names, with
// '_' accepted for '-'.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
    nlohmann::json j;
    for (const CLI::Option* opt : app->get_options({})) {
      if (opt->get_lnames().empty() || opt->get_lnames().front() == "config" || !opt->get_configurable()) continue;
      const std::string name = opt->get_lnames().front();
      if (opt->count() > 0)
        j[name] = opt->as<std::string>();
      else if (default_also && !opt->get_default_str().empty())
        j[name] = opt->get_default_str();
    }
    return j.dump(2) + "\n";
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& in) const override {
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw CLI::ConversionError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw CLI::ConversionError("config must be a JSON object");
    std::vector<CLI::ConfigItem> items;
    for (const auto& [key, value] : j.items()) {
      CLI::ConfigItem item;
      item.name = key;
      std::replace(item.name.begin(), item.name.end(), '_', '-');
      if (value.is_string())
        item.inputs = {value.get<std::string>()};
      else if (value.is_boolean())
        item.inputs = {value.get<bool>() ? "true" : "false"};
      else if (value.is_number())
        item.inputs = {value.dump()};
      else
        throw CLI::ConversionError("config value for '" + key + "' must be a string, number or boolean");
      items.push_back(std::move(item));
    }
    return items;
  }
};

struct Options {
  // converge
  std::string case_name = "example1";
  std::string family = "hex";
  int levels = 4;
  int error_order = 6;
  // run
  std::string mesh;
  std::string law = "example2";
  bool clamped = false;
  double boundary_concentration = Example2Constants{}.boundary_concentration;
  double traction = Example2Constants{}.traction;
  // shared
  std::string out;
  StressReading reading = StressReading::matrix;
  double fp_tol = 1e-5;
  int fp_max_iter = 50;
  IncrementNorm fp_norm = IncrementNorm::phi;
  double fp_damping = 1.0;
  bool fp_absolute = false;
  double fp_floor = -1.0;  // < 0: the command's default
  LinearSolverKind linear_solver = LinearSolverKind::automatic;
  AssemblyOptions assembly;
};

FixedPointConfig fixed_point_config(const Options& o, FixedPointConfig c) {
  c.tolerance = o.fp_tol;
  c.max_iterations = o.fp_max_iter;
  c.norm = o.fp_norm;
  c.damping = o.fp_damping;
  c.absolute = o.fp_absolute;
  if (o.fp_floor >= 0) c.floor = o.fp_floor;
  c.linear_solver = o.linear_solver;
  c.validate();
  return c;
}

void print_trace(std::ostream& os, const IterationTrace& tr) {
  os << "  it   increment   phi-incr     ||phi||\n";
  for (const auto& r : tr.records)
    os << "  " << std::setw(2) << r.iteration << "  " << std::scientific << std::setprecision(3) << r.increment << "  "
       << r.phi_increment << "  " << r.phi_norm << std::defaultfloat << "\n";
}

int run_converge(const Options& o) {
  if (o.case_name != "example1") throw ConstraintError("unknown case '" + o.case_name + "' (available: example1)");
  if (o.levels < 1 || o.levels > 6) throw ConstraintError("--levels must be in 1..6");
  const StructuredKind kind = o.family == "prism" ? StructuredKind::prism : StructuredKind::hex;
  std::vector<int> ns;
  for (int l = 1; l <= o.levels; ++l) ns.push_back(1 << l);

  ConvergenceConfig cfg;
  cfg.fixed_point = fixed_point_config(o, {});
  cfg.assembly = o.assembly;
  cfg.error_order = o.error_order;
  cfg.on_level = [](const LevelResult& lv) {
    std::cerr << "level " << lv.label << ": e_total " << lv.errors.total() << ", " << lv.iterations << " iterations, "
              << lv.seconds << " s" << std::endl;
  };
  const ManufacturedCase mc = example1_case(o.reading);
  const ErrorReport rep = run_convergence(mc, structured_family(kind, ns), o.family, cfg);

  rep.write_text(std::cout);
  if (!o.out.empty()) {
    fs::create_directories(o.out);
    std::ofstream txt(fs::path(o.out) / "report.txt"), csv(fs::path(o.out) / "report.csv"),
        dat(fs::path(o.out) / "report.dat");
    if (!txt || !csv || !dat) throw IOError("cannot write to " + o.out);
    rep.write_text(txt);
    rep.write_csv(csv);
    rep.write_plot_data(dat);
  }
  for (const auto& w : rep.warnings) std::cerr << "warning: " << w.message << "\n";
  return 0;
}

int run_demo(const Options& o) {
  if (o.mesh.empty()) throw ConstraintError("run needs --mesh");
  if (!LawRegistry::instance().contains(o.law)) throw ConstraintError("unknown law '" + o.law + "'");
  LithiationConfig cfg;
  cfg.law = o.law;
  cfg.clamped = o.clamped;
  cfg.reading = o.reading;
  cfg.boundary_concentration = o.boundary_concentration;
  cfg.traction = o.traction;
  cfg.fixed_point = fixed_point_config(o, cfg.fixed_point);
  cfg.assembly = o.assembly;

  fs::path vtu;
  if (!o.out.empty()) {
    fs::create_directories(o.out);
    vtu = fs::path(o.out) / "fields.vtu";
  }
  const PolyMesh mesh = load_mesh(o.mesh);
  const LithiationResult r = run_lithiation(mesh, cfg, vtu);

  std::cout << "mesh " << o.mesh << ": " << mesh.num_cells() << " cells, law " << o.law << ", "
            << (o.clamped ? "clamped" : "unclamped") << "\n";
  print_trace(std::cout, r.trace);
  std::cout << "max |u| " << r.max_displacement << " (outer surface " << r.max_outer_displacement
            << "), max |Neumann flux DoF| " << r.max_abs_neumann_flux << ", fields finite: " << std::boolalpha
            << r.finite << "\n";
  if (!o.out.empty()) {
    nlohmann::json s;
    s["mesh"] = o.mesh;
    s["law"] = o.law;
    s["clamped"] = o.clamped;
    s["cells"] = mesh.num_cells();
    s["iterations"] = r.trace.iterations();
    s["converged"] = r.trace.converged;
    s["increments"] = r.trace.increments();
    s["max_displacement"] = r.max_displacement;
    s["max_outer_displacement"] = r.max_outer_displacement;
    s["max_abs_neumann_flux"] = r.max_abs_neumann_flux;
    s["finite"] = r.finite;
    std::ofstream js(fs::path(o.out) / "summary.json");
    if (!js) throw IOError("cannot write to " + o.out);
    js << s.dump(2) << "\n";
    std::cout << "wrote " << vtu.string() << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stress-assisted diffusion with polyhedral virtual elements"};
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON file whose keys mirror the long flags");
  app.require_subcommand(1, 1);
  Options o;

  const std::map<std::string, StressReading> readings{{"matrix", StressReading::matrix},
                                                      {"scalar", StressReading::scalar}};
  const std::map<std::string, IncrementNorm> norms{{"phi", IncrementNorm::phi}, {"combined", IncrementNorm::combined}};
  const std::map<std::string, LinearSolverKind> solvers{{"auto", LinearSolverKind::automatic},
                                                        {"lu", LinearSolverKind::lu}};

  app.add_option("--out", o.out, "output directory");
  app.add_option("--stress-reading", o.reading, "stress argument of the mobility")
      ->transform(CLI::CheckedTransformer(readings));
  app.add_option("--fp-tol", o.fp_tol, "fixed-point tolerance")->capture_default_str();
  app.add_option("--fp-max-iter", o.fp_max_iter, "fixed-point iteration limit")->capture_default_str();
  app.add_option("--fp-norm", o.fp_norm, "increment measured in phi only or in all fields")
      ->transform(CLI::CheckedTransformer(norms));
  app.add_option("--fp-damping", o.fp_damping, "relaxation of phi in (0, 1]")->capture_default_str();
  app.add_option("--fp-absolute", o.fp_absolute, "stop on the absolute increment");
  app.add_option("--fp-floor", o.fp_floor, "relative rule uses max(floor, ||phi||)");
  app.add_option("--linear-solver", o.linear_solver, "auto (Schur/Cholesky when possible) or lu")
      ->transform(CLI::CheckedTransformer(solvers));
  app.add_option("--stab-scale-elasticity", o.assembly.stab_scale_elasticity)->capture_default_str();
  app.add_option("--stab-scale-flux", o.assembly.stab_scale_flux)->capture_default_str();
  app.add_option("--quad-order", o.assembly.data_order, "quadrature order for load and boundary data")
      ->capture_default_str();
  app.add_option("--mass-quad-order", o.assembly.weighted_mass_order, "quadrature order of the mobility mass")
      ->capture_default_str();
  app.add_option("--case", o.case_name, "manufactured case (converge)")->capture_default_str();
  app.add_option("--mesh-family", o.family, "hex or prism (converge)")
      ->check(CLI::IsMember({"hex", "prism"}))
      ->capture_default_str();
  app.add_option("--levels", o.levels, "meshes n = 2, 4, ..., 2^levels (converge)")->capture_default_str();
  app.add_option("--error-order", o.error_order, "quadrature order of the error norms (converge)")
      ->capture_default_str();
  app.add_option("--mesh", o.mesh, "mesh file: .vtu, .off or .json (run)");
  app.add_option("--law", o.law, "material law (run)")->capture_default_str();
  app.add_option("--clamped", o.clamped, "clamp the top and bottom bases (run)");
  app.add_option("--boundary-concentration", o.boundary_concentration, "phi on the outer surface (run)")
      ->capture_default_str();
  app.add_option("--traction", o.traction, "normal traction on the outer surface (run)")->capture_default_str();

  CLI::App* converge = app.add_subcommand("converge", "convergence study on a manufactured solution");
  CLI::App* run = app.add_subcommand("run", "lithiation of a perforated cylinder");
  converge->fallthrough();
  run->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    return converge->parsed() ? run_converge(o) : run_demo(o);
  } catch (const NonConvergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    print_trace(std::cerr, e.trace());
    return kExitNotConverged;
  } catch (const Error& e) {
    const bool input = dynamic_cast<const ParseError*>(&e) || dynamic_cast<const IOError*>(&e) ||
                       dynamic_cast<const ConstraintError*>(&e) || dynamic_cast<const TopologyError*>(&e) ||
                       dynamic_cast<const GeometryError*>(&e) || dynamic_cast<const EmptyDirichletError*>(&e);
    std::cerr << (input ? "input error: " : "error: ") << e.what() << "\n";
    return input ? kExitInput : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
