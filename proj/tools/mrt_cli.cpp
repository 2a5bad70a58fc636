// mrt: command-line front end for the moment-based Radon inversion toolkit.
#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mrt/mollifier.hpp"
#include "mrt/momentsys.hpp"
#include "mrt/pipeline.hpp"
#include "mrt/reconstruct.hpp"

namespace fs = std::filesystem;
using namespace mrt;
using num::Real;

namespace {

struct Globals {
  std::string config;
  std::optional<int> precision_bits;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool least_squares = false;
  bool serial = false;
};

cli::PipelineConfig base_config(const Globals& g) {
  cli::PipelineConfig c;
  if (!g.config.empty()) c = cli::read_config(g.config);
  if (g.precision_bits) c.precision_bits = *g.precision_bits;
  if (g.seed) c.noise.seed = *g.seed;
  if (g.least_squares) c.solver = momentsys::SolveMode::least_squares;
  if (g.serial) c.execution = Execution::serial;
  return c;
}

// Precision for a command that reads `input`: an explicit flag or config
// wins (and a mismatch with the file then fails on read); otherwise adopt
// the file's own precision.
int precision_for(const Globals& g, const cli::PipelineConfig& c, const fs::path& input) {
  if (g.precision_bits || !g.config.empty()) return c.precision_bits;
  try {
    const fs::path meta = input.extension() == ".json" ? input : io::sidecar_path(input);
    const auto j = io::read_json(meta);
    if (j.contains("precision_bits")) return j["precision_bits"].get<int>();
  } catch (const Error&) {
    // the real read reports the problem
  }
  return c.precision_bits;
}

// theta = 0 is not in the open interval; nudge it with a warning.
std::vector<std::string> snap_angles(std::vector<std::string> list) {
  for (auto& a : list) {
    if (Real::from_string(a).is_zero()) {
      std::cerr << "warning: theta = 0 replaced by 1e-9\n";
      a = "1e-9";
    }
  }
  return list;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  for (char ch : text) {
    if (ch == ',') {
      out.push_back(item);
      item.clear();
    } else if (ch != ' ') {
      item += ch;
    }
  }
  if (!item.empty()) out.push_back(item);
  return out;
}

std::string out_or(const Globals& g, const std::string& fallback) { return g.out.empty() ? fallback : g.out; }

void report_stages(const cli::PipelineResult& r) {
  for (const auto& s : r.stages) {
    std::printf("%-12s %-8s %10.1f ms  %s\n", s.name.c_str(), s.status.c_str(), s.wall_ms, s.detail.c_str());
  }
}

std::string schema_footer() {
  std::string text = "Schemas:";
  for (const auto& s : cli::schema_versions()) text += " " + s;
  text += "\nExit codes: 0 success, 1 stage failure, 2 usage error.";
  return text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mrt " + std::string(cli::kToolVersion) +
               ": density reconstruction from Radon data through mollified moments"};
  app.footer(schema_footer());
  // long form only: --h is the mollifier half-width
  app.set_help_flag("--help", "Print this help message and exit");
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--precision-bits", g.precision_bits, "Working precision in bits (>= 64)");
  app.add_option("--seed", g.seed, "Noise seed");
  app.add_option("--out", g.out, "Output file or directory");
  app.add_flag("--least-squares", g.least_squares, "Solve angle systems by least squares over all angles");
  app.add_flag("--serial", g.serial, "Run kernels on one thread");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Sample the Radon transform of a density");
  std::string sim_density;
  std::optional<int> sim_angles, sim_offsets;
  std::string sim_theta, sim_pad;
  sim->add_option("--density", sim_density, "Density id, e.g. xy, poly-demo, grid:<csv>");
  sim->add_option("--angles", sim_angles, "Total angle count, placed at (i+1/2)pi/N");
  sim->add_option("--theta", sim_theta, "Explicit comma-separated angles in radians");
  sim->add_option("--offsets", sim_offsets, "Offset count M");
  sim->add_option("--pad", sim_pad, "Offset padding beyond sqrt(2)");

  // noise
  auto* noi = app.add_subcommand("noise", "Add seeded noise to a sinogram");
  std::string noi_in, noi_model = "gaussian";
  double noi_amp = -1, noi_freq = 1;
  noi->add_option("--in", noi_in, "Input sinogram CSV")->required()->check(CLI::ExistingFile);
  noi->add_option("--model", noi_model, "gaussian, uniform or sinusoidal")
      ->check(CLI::IsMember({"gaussian", "uniform", "sinusoidal"}));
  noi->add_option("--sigma,--amplitude", noi_amp, "Noise level")->required();
  noi->add_option("--frequency", noi_freq, "Sinusoid frequency");

  // mollify
  auto* mol = app.add_subcommand("mollify", "Convolve every sinogram row with a mollifier");
  std::string mol_in, mol_family, mol_h;
  mol->add_option("--in", mol_in, "Input sinogram CSV")->required()->check(CLI::ExistingFile);
  mol->add_option("--family", mol_family, "bump or truncated-gaussian");
  mol->add_option("--h", mol_h, "Half-width h");

  // moments
  auto* mom = app.add_subcommand("moments", "Offset moments b^(k)(theta) of a sinogram");
  std::string mom_in, mom_quad;
  std::optional<int> mom_k;
  mom->add_option("--in", mom_in, "Input sinogram CSV")->required()->check(CLI::ExistingFile);
  mom->add_option("--K", mom_k, "Highest order");
  mom->add_option("--quadrature", mom_quad, "auto, grid or continuous");

  // recover
  auto* rec = app.add_subcommand("recover", "Moments b (or hat-b) to the density moment triangle");
  std::string rec_in, rec_b_out;
  std::optional<int> rec_k;
  rec->add_option("--in", rec_in, "Moment set JSON")->required()->check(CLI::ExistingFile);
  rec->add_option("--K", rec_k, "Highest order to recover (default: all)");
  rec->add_option("--b-out", rec_b_out, "Also write the unmollified moments here");

  // reconstruct
  auto* rcn = app.add_subcommand("reconstruct", "Evaluate the moment-based approximation on a grid");
  std::string rcn_in, rcn_density;
  std::optional<int> rcn_m, rcn_n;
  std::vector<int> rcn_res;
  rcn->add_option("--in", rcn_in, "Triangle JSON")->required()->check(CLI::ExistingFile);
  rcn->add_option("--m", rcn_m, "Order in x1");
  rcn->add_option("--n", rcn_n, "Order in x2");
  rcn->add_option("--resolution", rcn_res, "Grid size G or G1 G2")->expected(1, 2);
  rcn->add_option("--density", rcn_density, "Report the sup error against this density");

  // pipeline
  auto* pip = app.add_subcommand("pipeline", "Run every stage from a config");

  // study
  auto* stu = app.add_subcommand("study", "Sup error against n for m = n");
  std::string stu_orders = "8,16,32";
  stu->add_option("--orders", stu_orders, "Comma-separated n values");

  // validate
  auto* val = app.add_subcommand("validate", "Synthesis and homogeneity checks on a moment file");
  std::string val_in, val_family = "bump", val_h = "1", val_theta;
  double val_tol = 1e-12, val_hom_tol = 1e-8;
  std::optional<int> val_k;
  val->add_option("--in", val_in, "Moment set or triangle JSON")->required()->check(CLI::ExistingFile);
  val->add_option("--family", val_family, "Mollifier family for the synthesis check");
  val->add_option("--h", val_h, "Mollifier half-width for the synthesis check");
  val->add_option("--theta", val_theta, "Comma-separated angles (default pi/6, pi/3, 2pi/3)");
  val->add_option("--max-order", val_k, "Highest order checked (default: all, at most 6 for synthesis)");
  val->add_option("--tolerance", val_tol, "Synthesis residual threshold");
  val->add_option("--homogeneity-tolerance", val_hom_tol, "Relative homogeneity residual threshold");

  for (auto* sub : {sim, noi, mol, mom, rec, rcn, pip, stu, val}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    cli::PipelineConfig cfg = base_config(g);
    if (cfg.angles) cfg.angles = snap_angles(*cfg.angles);

    if (*sim) {
      if (!sim_density.empty()) {
        cfg.density = sim_density;
        cfg.input_sinogram.reset();
      }
      if (!cfg.density) throw ValidationError("simulate needs --density");
      if (sim_angles) {
        if (*sim_angles < 1) throw ValidationError("--angles must be positive");
        cfg.angles.reset();
      }
      if (!sim_theta.empty()) cfg.angles = snap_angles(split_list(sim_theta));
      if (sim_offsets) cfg.offsets = *sim_offsets;
      if (!sim_pad.empty()) cfg.pad = sim_pad;
      cfg.validate();
      num::PrecisionScope scope(cfg.precision_bits);
      const auto d = density::make_density(*cfg.density);
      std::vector<Real> angles;
      std::string placement = "midpoint";
      if (cfg.angles) {
        for (const auto& a : *cfg.angles) angles.push_back(Real::from_string(a));
        placement = "explicit";
      } else {
        angles = radon::default_angles(sim_angles ? *sim_angles : 4 * cfg.angles_per_quadrant);
      }
      auto s = radon::make_sinogram(d, angles, cfg.offsets, Real::from_string(cfg.pad), cfg.execution);
      s.meta.angle_placement = placement;
      const auto out = out_or(g, "sinogram.csv");
      radon::write_sinogram(s, out);
      std::printf("wrote %s (%zu angles x %zu offsets)\n", out.c_str(), s.angle_count(), s.offset_count());
      return 0;
    }

    if (*noi) {
      num::PrecisionScope scope(precision_for(g, cfg, noi_in));
      radon::NoiseSpec spec;
      spec.kind = noi_model == "gaussian"  ? radon::NoiseSpec::Kind::gaussian
                  : noi_model == "uniform" ? radon::NoiseSpec::Kind::uniform
                                           : radon::NoiseSpec::Kind::sinusoidal;
      spec.amplitude = noi_amp;
      spec.frequency = noi_freq;
      spec.seed = cfg.noise.seed;
      auto s = radon::add_noise(radon::read_sinogram(noi_in), spec);
      const auto out = out_or(g, "sinogram_noisy.csv");
      radon::write_sinogram(s, out);
      std::printf("wrote %s\n", out.c_str());
      return 0;
    }

    if (*mol) {
      num::PrecisionScope scope(precision_for(g, cfg, mol_in));
      cli::MollifierRequest req = cfg.mollifier.value_or(cli::MollifierRequest{});
      if (!mol_family.empty()) req.family = mol_family;
      if (!mol_h.empty()) req.h = mol_h;
      if (req.automatic()) throw ValidationError("mollify needs an explicit h");
      const auto s = radon::read_sinogram(mol_in);
      mollifier::MollifierSpec m(mollifier::parse_family(req.family), Real::from_string(req.h),
                                 std::max(64, cfg.max_order));
      auto out_s = mollifier::mollify_sinogram(s, m, cfg.execution);
      const auto out = out_or(g, "sinogram_mollified.csv");
      radon::write_sinogram(out_s, out);
      std::printf("wrote %s (h = %s)\n", out.c_str(), m.h().str(17).c_str());
      return 0;
    }

    if (*mom) {
      num::PrecisionScope scope(precision_for(g, cfg, mom_in));
      if (mom_k) cfg.max_order = *mom_k;
      if (!mom_quad.empty()) cfg.moment_quadrature = momentsys::parse_moment_quadrature(mom_quad);
      const auto s = radon::read_sinogram(mom_in);
      const auto ms = momentsys::extract_moments(s, cfg.max_order, cfg.moment_quadrature, cfg.execution);
      const auto out = out_or(g, ms.kind == momentsys::MomentSet::Kind::raw ? "moments_b.json" : "moments_hatb.json");
      momentsys::write_moment_set(ms, out);
      std::printf("wrote %s (%s moments to order %d, %s path)\n", out.c_str(),
                  momentsys::kind_name(ms.kind).c_str(), ms.max_order,
                  momentsys::continuous_available(s) && cfg.moment_quadrature != momentsys::MomentQuadrature::grid
                      ? "continuous"
                      : "grid");
      return 0;
    }

    if (*rec) {
      num::PrecisionScope scope(precision_for(g, cfg, rec_in));
      auto ms = momentsys::read_moment_set(rec_in);
      if (ms.kind == momentsys::MomentSet::Kind::mollified) {
        std::optional<mollifier::MollifierSpec> spec;
        if (ms.mollifier) {
          spec.emplace(mollifier::MollifierSpec::from_descriptor(*ms.mollifier, std::max(64, ms.max_order)));
        } else if (cfg.mollifier && !cfg.mollifier->automatic()) {
          spec.emplace(mollifier::parse_family(cfg.mollifier->family), Real::from_string(cfg.mollifier->h),
                       std::max(64, ms.max_order));
        } else {
          throw ValidationError("mollified moments without a mollifier descriptor; pass --config");
        }
        ms = momentsys::hatb_to_b(ms, *spec);
        if (!rec_b_out.empty()) momentsys::write_moment_set(ms, rec_b_out);
      }
      const int k = rec_k.value_or(ms.max_order);
      const auto r = momentsys::recover_triangle(ms, k, cfg.solver, cfg.execution);
      const auto out = out_or(g, "triangle.json");
      momentsys::write_triangle(r.triangle, out);
      std::printf("wrote %s (K = %d, worst condition %.3g)\n", out.c_str(), k,
                  r.conditions.empty() ? 0.0
                                       : std::max_element(r.conditions.begin(), r.conditions.end(),
                                                          [](const Real& a, const Real& b) { return a < b; })
                                             ->to_double());
      return 0;
    }

    if (*rcn) {
      num::PrecisionScope scope(precision_for(g, cfg, rcn_in));
      const auto t = momentsys::read_triangle(rcn_in);
      const auto req = cfg.reconstruction.value_or(cli::ReconstructionRequest{});
      const int m = rcn_m.value_or(req.m);
      const int n = rcn_n.value_or(req.n);
      int g1 = req.resolution1, g2 = req.resolution2;
      if (rcn_res.size() == 1) g1 = g2 = rcn_res[0];
      if (rcn_res.size() == 2) {
        g1 = rcn_res[0];
        g2 = rcn_res[1];
      }
      auto grid = reconstruct::reconstruct_grid(t, m, n, g1, g2, cfg.execution);
      const std::string dens = !rcn_density.empty() ? rcn_density : cfg.density.value_or("");
      if (!dens.empty()) grid.source = dens;
      if (cfg.mollifier && !cfg.mollifier->automatic()) grid.h = Real::from_string(cfg.mollifier->h);
      const auto out = out_or(g, "grid.csv");
      reconstruct::write_grid(grid, out);
      std::printf("wrote %s (m = %d, n = %d, %d x %d, %.1f digits lost)\n", out.c_str(), m, n, g1, g2,
                  grid.digits_lost.to_double());
      if (!dens.empty()) {
        std::printf("sup error vs %s: %.6g\n", dens.c_str(),
                    reconstruct::sup_error(grid, density::make_density(dens)).to_double());
      }
      return 0;
    }

    if (*pip) {
      if (g.config.empty()) throw ValidationError("pipeline needs --config");
      if (!g.out.empty()) cfg.output_dir = g.out;
      const auto r = cli::run_pipeline(cfg, true);
      report_stages(r);
      if (r.manifest.contains("sup_error")) {
        std::printf("sup error: %.6g\n", r.manifest["sup_error"].get<double>());
      }
      std::printf("manifest: %s\n", (cfg.output_dir / "manifest.json").string().c_str());
      return 0;
    }

    if (*stu) {
      if (g.config.empty()) throw ValidationError("study needs --config");
      std::vector<int> orders;
      for (const auto& s : split_list(stu_orders)) orders.push_back(std::stoi(s));
      const auto r = cli::convergence_study(cfg, orders);
      const auto out = out_or(g, "study.csv");
      cli::write_study(r, cfg, out);
      for (const auto& row : r.rows) {
        std::printf("n = %3d  sup error %.6g  slope %.4f  %.0f ms\n", row.n, row.sup_error, row.slope_estimate,
                    row.runtime_ms);
      }
      std::printf("fitted slope %.4f; wrote %s\n", r.fitted_slope, out.c_str());
      return 0;
    }

    if (*val) {
      num::PrecisionScope scope(precision_for(g, cfg, val_in));
      const auto j = io::read_json(val_in);
      io::check_precision(j, val_in);
      const auto schema = j.value("schema", std::string());
      io::json report;
      report["input"] = val_in;
      bool ok = true;
      density::MomentTriangle tri;
      if (schema == momentsys::kMomentSetSchema) {
        auto ms = momentsys::moment_set_from_json(j);
        if (ms.kind == momentsys::MomentSet::Kind::mollified) {
          if (!ms.mollifier) throw ValidationError("mollified moments without a mollifier descriptor");
          ms = momentsys::hatb_to_b(ms, mollifier::MollifierSpec::from_descriptor(*ms.mollifier,
                                                                                   std::max(64, ms.max_order)));
        }
        const int top = std::min(val_k.value_or(ms.max_order), ms.max_order);
        io::json hom = io::json::array();
        for (int k = 0; k <= top; ++k) {
          const double r = momentsys::homogeneity_residual(ms, k).to_double();
          hom.push_back({{"k", k}, {"relative_residual", r}});
          if (!(r <= val_hom_tol)) ok = false;
        }
        report["homogeneity"] = hom;
        tri = momentsys::recover_triangle(ms, top, cfg.solver, cfg.execution).triangle;
      } else if (schema == momentsys::kTriangleSchema) {
        tri = momentsys::triangle_from_json(j);
      } else {
        throw ValidationError(val_in + " is neither a moment set nor a triangle");
      }
      const int top = std::min({val_k.value_or(6), tri.max_order()});
      std::vector<Real> thetas;
      if (val_theta.empty()) {
        thetas = {num::pi() / Real(6), num::pi() / Real(3), Real(2) * num::pi() / Real(3)};
      } else {
        for (const auto& a : snap_angles(split_list(val_theta))) thetas.push_back(Real::from_string(a));
      }
      mollifier::MollifierSpec m(mollifier::parse_family(val_family), Real::from_string(val_h),
                                 std::max(64, 2 * top));
      io::json syn = io::json::array();
      for (const auto& th : thetas) {
        for (int k = 0; k <= top; ++k) {
          const double dir =
              momentsys::synthesis_residual(tri, m, th, k, momentsys::SynthesisForm::directional).to_double();
          const double lit =
              momentsys::synthesis_residual(tri, m, th, k, momentsys::SynthesisForm::literal).to_double();
          syn.push_back({{"theta", th.to_double()}, {"k", k}, {"directional", dir}, {"literal", lit}});
          if (!(std::fabs(dir) <= val_tol)) ok = false;
        }
      }
      report["synthesis"] = syn;
      report["status"] = ok ? "pass" : "fail";
      if (!g.out.empty()) io::write_json(g.out, report);
      std::cout << report.dump(2) << "\n";
      return ok ? 0 : 1;
    }
  } catch (const cli::StageError& e) {
    std::cerr << "error in stage " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
