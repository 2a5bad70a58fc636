#include "mrt/pipeline.hpp"

#include <gmp.h>
#include <mpfr.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>

#include "mrt/mollifier.hpp"
#include "mrt/quadrature.hpp"

namespace mrt::cli {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

// Reals may be written as JSON strings or numbers; keep the decimal text.
std::string decimal_of(const io::json& j, const std::string& what) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number()) return j.dump();
  throw ValidationError(what + " must be a number or a decimal string");
}

Real parse_real(const std::string& text, const std::string& what) {
  try {
    return Real::from_string(text);
  } catch (const Error&) {
    throw ValidationError(what + " is not a number: '" + text + "'");
  }
}

int int_of(const io::json& j, const std::string& what) {
  if (!j.is_number_integer()) throw ValidationError(what + " must be an integer");
  return j.get<int>();
}

void reject_unknown(const io::json& j, const std::set<std::string>& known, const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw ValidationError("unknown key '" + key + "' in " + where);
  }
}

std::string solver_name(momentsys::SolveMode m) {
  return m == momentsys::SolveMode::square ? "square" : "least-squares";
}

momentsys::SolveMode parse_solver(const std::string& s) {
  if (s == "square") return momentsys::SolveMode::square;
  if (s == "least-squares" || s == "least_squares") return momentsys::SolveMode::least_squares;
  throw ValidationError("solver must be square or least-squares, got '" + s + "'");
}

// Restores the process-wide quadrature tolerance on scope exit.
class ToleranceScope {
 public:
  explicit ToleranceScope(const std::optional<Real>& tol) { num::set_default_tolerance(tol); }
  ~ToleranceScope() { num::set_default_tolerance(std::nullopt); }
  ToleranceScope(const ToleranceScope&) = delete;
  ToleranceScope& operator=(const ToleranceScope&) = delete;
};

std::vector<Real> config_angles(const PipelineConfig& cfg) {
  if (cfg.angles) {
    std::vector<Real> out;
    for (const auto& a : *cfg.angles) out.push_back(parse_real(a, "angle"));
    radon::validate_angles(out);
    return out;
  }
  return radon::default_angles(4 * cfg.angles_per_quadrant);
}

class Runner {
 public:
  Runner(const PipelineConfig& cfg, bool write) : cfg_(cfg), write_(write) {}

  template <typename F>
  void stage(const std::string& name, F&& body) {
    StageRecord rec;
    rec.name = name;
    rec.status = "ok";
    const auto t0 = Clock::now();
    try {
      body(rec);
    } catch (const std::exception& e) {
      rec.status = "failed";
      rec.detail = e.what();
      rec.wall_ms = elapsed_ms(t0);
      stages_.push_back(rec);
      abort(name, e.what());
    }
    rec.wall_ms = elapsed_ms(t0);
    stages_.push_back(std::move(rec));
  }

  void skip(const std::string& name, const std::string& why) {
    stages_.push_back({name, "skipped", 0, {}, why});
  }

  fs::path path(const std::string& file) const { return cfg_.output_dir / file; }
  bool writing() const { return write_; }

  void wrote(StageRecord& rec, const fs::path& p, bool with_sidecar) {
    rec.artifacts.push_back(p.filename().string());
    written_.push_back(p);
    if (with_sidecar) {
      rec.artifacts.push_back(io::sidecar_path(p).filename().string());
      written_.push_back(io::sidecar_path(p));
    }
  }

  const std::vector<StageRecord>& stages() const { return stages_; }
  void set_manifest_builder(std::function<io::json(const std::string&)> f) { manifest_ = std::move(f); }

 private:
  [[noreturn]] void abort(const std::string& name, const std::string& cause) {
    if (write_) {
      for (const auto& p : written_) {
        std::error_code ec;
        fs::rename(p, fs::path(p.string() + ".partial"), ec);
      }
      if (manifest_) {
        try {
          io::write_json(path("manifest.json.partial"), manifest_("failed"));
        } catch (const std::exception&) {
          // the original failure matters more than the manifest
        }
      }
    }
    throw StageError(name, cause);
  }

  const PipelineConfig& cfg_;
  bool write_;
  std::vector<StageRecord> stages_;
  std::vector<fs::path> written_;
  std::function<io::json(const std::string&)> manifest_;
};

io::json stages_json(const std::vector<StageRecord>& stages) {
  io::json out = io::json::array();
  for (const auto& s : stages) {
    io::json j;
    j["name"] = s.name;
    j["status"] = s.status;
    j["wall_ms"] = s.wall_ms;
    j["artifacts"] = s.artifacts;
    if (!s.detail.empty()) j["detail"] = s.detail;
    out.push_back(j);
  }
  return out;
}

}  // namespace

PipelineConfig PipelineConfig::from_json(const io::json& j) {
  if (!j.is_object()) throw ValidationError("config must be a JSON object");
  reject_unknown(j,
                 {"schema", "density", "input_sinogram", "angles_per_quadrant", "angles", "offsets",
                  "pad", "mollifier", "noise", "seed", "K", "reconstruction", "precision_bits",
                  "quadrature_tol", "solver", "moment_quadrature", "output_dir", "execution"},
                 "config");
  if (j.contains("schema") && j["schema"] != kConfigSchema) {
    throw ValidationError("config schema must be " + std::string(kConfigSchema));
  }
  PipelineConfig c;
  if (j.contains("density") && !j["density"].is_null()) c.density = j["density"].get<std::string>();
  if (j.contains("input_sinogram") && !j["input_sinogram"].is_null()) {
    c.input_sinogram = j["input_sinogram"].get<std::string>();
  }
  if (j.contains("angles_per_quadrant")) c.angles_per_quadrant = int_of(j["angles_per_quadrant"], "angles_per_quadrant");
  if (j.contains("angles") && !j["angles"].is_null()) {
    std::vector<std::string> list;
    for (const auto& a : j["angles"]) list.push_back(decimal_of(a, "angle"));
    c.angles = list;
  }
  if (j.contains("offsets")) c.offsets = int_of(j["offsets"], "offsets");
  if (j.contains("pad")) c.pad = decimal_of(j["pad"], "pad");
  if (j.contains("mollifier") && !j["mollifier"].is_null()) {
    const auto& m = j["mollifier"];
    if (!m.is_object()) throw ValidationError("mollifier must be an object");
    reject_unknown(m, {"family", "h"}, "mollifier");
    MollifierRequest r;
    r.family = m.value("family", std::string("bump"));
    if (m.contains("h")) r.h = decimal_of(m["h"], "mollifier h");
    c.mollifier = r;
  }
  if (j.contains("noise")) c.noise = radon::NoiseSpec::from_json(j["noise"]);
  if (j.contains("seed")) c.noise.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("K")) c.max_order = int_of(j["K"], "K");
  if (j.contains("reconstruction") && !j["reconstruction"].is_null()) {
    const auto& r = j["reconstruction"];
    reject_unknown(r, {"m", "n", "resolution"}, "reconstruction");
    ReconstructionRequest rr;
    if (r.contains("m")) rr.m = int_of(r["m"], "m");
    if (r.contains("n")) rr.n = int_of(r["n"], "n");
    if (r.contains("resolution")) {
      const auto& res = r["resolution"];
      if (res.is_array()) {
        if (res.size() != 2) throw ValidationError("resolution must be an integer or a pair");
        rr.resolution1 = int_of(res[0], "resolution");
        rr.resolution2 = int_of(res[1], "resolution");
      } else {
        rr.resolution1 = rr.resolution2 = int_of(res, "resolution");
      }
    }
    c.reconstruction = rr;
  }
  if (j.contains("precision_bits")) c.precision_bits = int_of(j["precision_bits"], "precision_bits");
  if (j.contains("quadrature_tol") && !j["quadrature_tol"].is_null()) {
    c.quadrature_tol = decimal_of(j["quadrature_tol"], "quadrature_tol");
  }
  if (j.contains("solver")) c.solver = parse_solver(j["solver"].get<std::string>());
  if (j.contains("moment_quadrature")) {
    c.moment_quadrature = momentsys::parse_moment_quadrature(j["moment_quadrature"].get<std::string>());
  }
  if (j.contains("output_dir")) c.output_dir = j["output_dir"].get<std::string>();
  if (j.contains("execution")) {
    const auto e = j["execution"].get<std::string>();
    if (e == "serial") {
      c.execution = Execution::serial;
    } else if (e == "parallel") {
      c.execution = Execution::parallel;
    } else {
      throw ValidationError("execution must be serial or parallel");
    }
  }
  return c;
}

io::json PipelineConfig::to_json() const {
  io::json j;
  j["schema"] = kConfigSchema;
  j["density"] = density ? io::json(*density) : io::json(nullptr);
  j["input_sinogram"] = input_sinogram ? io::json(input_sinogram->string()) : io::json(nullptr);
  j["angles_per_quadrant"] = angles_per_quadrant;
  j["angles"] = angles ? io::json(*angles) : io::json(nullptr);
  j["offsets"] = offsets;
  j["pad"] = pad;
  if (mollifier) {
    j["mollifier"] = {{"family", mollifier->family}, {"h", mollifier->h}};
  } else {
    j["mollifier"] = nullptr;
  }
  j["noise"] = noise.to_json();
  j["K"] = max_order;
  if (reconstruction) {
    j["reconstruction"] = {{"m", reconstruction->m},
                           {"n", reconstruction->n},
                           {"resolution", {reconstruction->resolution1, reconstruction->resolution2}}};
  } else {
    j["reconstruction"] = nullptr;
  }
  j["precision_bits"] = precision_bits;
  j["quadrature_tol"] = quadrature_tol ? io::json(*quadrature_tol) : io::json(nullptr);
  j["solver"] = solver_name(solver);
  j["moment_quadrature"] = momentsys::moment_quadrature_name(moment_quadrature);
  j["output_dir"] = output_dir.string();
  j["execution"] = execution == Execution::serial ? "serial" : "parallel";
  return j;
}

void PipelineConfig::validate() const {
  if (density.has_value() == input_sinogram.has_value()) {
    throw ValidationError("config needs exactly one of density and input_sinogram");
  }
  if (precision_bits < 64) throw ValidationError("precision_bits must be at least 64");
  if (!angles && angles_per_quadrant < 1) throw ValidationError("angles_per_quadrant must be positive");
  if (offsets < 2) throw ValidationError("offsets must be at least 2");
  if (max_order < 0) throw ValidationError("K must be nonnegative");
  if (reconstruction) {
    const auto& r = *reconstruction;
    if (r.m < 0 || r.n < 0) throw ValidationError("reconstruction orders must be nonnegative");
    if (r.resolution1 < 1 || r.resolution2 < 1) throw ValidationError("resolution must be positive");
    if (max_order < r.m + r.n) {
      throw ValidationError("K = " + std::to_string(max_order) + " is below m + n = " +
                            std::to_string(r.m + r.n));
    }
  }
  if (noise.amplitude < 0 || !std::isfinite(noise.amplitude)) {
    throw ValidationError("noise amplitude must be finite and nonnegative");
  }
  num::PrecisionScope scope(precision_bits);
  if (parse_real(pad, "pad").sign() < 0) throw ValidationError("pad must be nonnegative");
  if (quadrature_tol && !(parse_real(*quadrature_tol, "quadrature_tol") > Real(0))) {
    throw ValidationError("quadrature_tol must be positive");
  }
  if (mollifier) {
    (void)mollifier::parse_family(mollifier->family);
    if (mollifier->automatic()) {
      if (!reconstruction) throw ValidationError("h = auto needs a reconstruction order n");
    } else if (!(parse_real(mollifier->h, "mollifier h") > Real(0))) {
      throw ValidationError("mollifier h must be positive");
    }
    // h <= pad is enforced by the mollify stage so the failure names it
  }
  if (angles) {
    std::vector<Real> list;
    for (const auto& a : *angles) list.push_back(parse_real(a, "angle"));
    radon::validate_angles(list);
  }
}

PipelineConfig read_config(const fs::path& path) { return PipelineConfig::from_json(io::read_json(path)); }

Real resolve_h(const MollifierRequest& req, const density::Density& d, int n) {
  if (!req.automatic()) return parse_real(req.h, "mollifier h");
  const auto norms = d.derivative_norms();
  if (!norms) throw ValidationError("h = auto needs derivative norms, which " + d.id() + " lacks");
  // sigma^2 of the unit-width profile, independent of h
  mollifier::MollifierSpec unit(mollifier::parse_family(req.family), Real(1), 2);
  const double c = reconstruct::rate_constant(*norms);
  const double c1 = reconstruct::smoothing_constant(*norms, unit.base_variance().to_double());
  return reconstruct::choose_h(n, c, c1);
}

io::json version_info() {
  io::json v;
  v["mrt"] = kToolVersion;
  v["mpfr"] = mpfr_get_version();
  v["gmp"] = gmp_version;
#ifdef __VERSION__
  v["compiler"] = __VERSION__;
#endif
#ifdef _OPENMP
  v["openmp"] = _OPENMP;
#endif
  return v;
}

std::vector<std::string> schema_versions() {
  return {kConfigSchema,        kManifestSchema,       kStudySchema,
          radon::kSinogramSchema, momentsys::kMomentSetSchema, momentsys::kTriangleSchema,
          reconstruct::kGridSchema};
}

PipelineResult run_pipeline(const PipelineConfig& cfg, bool write_files) {
  cfg.validate();
  num::PrecisionScope precision(cfg.precision_bits);
  std::optional<Real> tol;
  if (cfg.quadrature_tol) tol = parse_real(*cfg.quadrature_tol, "quadrature_tol");
  ToleranceScope tolerance(tol);

  PipelineResult res;
  Runner run(cfg, write_files);
  const Real pad_requested = parse_real(cfg.pad, "pad");
  Real pad = pad_requested;
  std::optional<density::Density> dens;
  if (cfg.density) dens = density::make_density(*cfg.density);

  auto manifest = [&](const std::string& status) {
    io::json m;
    m["schema"] = kManifestSchema;
    m["status"] = status;
    m["versions"] = version_info();
    m["precision_bits"] = cfg.precision_bits;
    m["threads"] = thread_count();
    m["config"] = cfg.to_json();
    m["stages"] = stages_json(run.stages());
    m["moment_quadrature"] = res.moment_path;
    m["h"] = res.h ? io::to_json(*res.h) : io::json(nullptr);
    m["pad"] = io::to_json(pad);
    io::json cond = io::json::array();
    for (const auto& c : res.recovery.conditions) cond.push_back(c.to_double());
    m["conditions"] = cond;
    if (res.grid) {
      m["cancellation"] = {{"max_term", io::to_json(res.grid->max_term)},
                           {"digits_lost", res.grid->digits_lost.to_double()}};
      if (dens) m["sup_error"] = reconstruct::sup_error(*res.grid, *dens).to_double();
    } else {
      m["cancellation"] = nullptr;
    }
    return m;
  };
  run.set_manifest_builder(manifest);

  if (write_files) fs::create_directories(cfg.output_dir);

  // The mollifier is resolved first so h = auto can widen the pad before
  // the offsets are laid out.
  std::optional<mollifier::MollifierSpec> spec;
  if (cfg.mollifier) {
    const int n = cfg.reconstruction ? cfg.reconstruction->n : 0;
    if (cfg.mollifier->automatic()) {
      if (!dens) throw StageError("mollify", "h = auto needs a registry density");
      res.h = resolve_h(*cfg.mollifier, *dens, n);
      if (pad < *res.h) pad = *res.h;
    } else {
      res.h = parse_real(cfg.mollifier->h, "mollifier h");
    }
  }

  radon::Sinogram sino;
  run.stage("simulate", [&](StageRecord& rec) {
    if (cfg.input_sinogram) {
      sino = radon::read_sinogram(*cfg.input_sinogram);
      rec.detail = "read " + cfg.input_sinogram->string();
      if (dens) return;
      try {
        dens = density::make_density(sino.meta.source);
      } catch (const Error&) {
        // external data: no reference density
      }
      return;
    }
    sino = radon::make_sinogram(*dens, config_angles(cfg), cfg.offsets, pad, cfg.execution);
    sino.meta.angle_placement = cfg.angles ? "explicit" : "midpoint";
    if (run.writing()) {
      radon::write_sinogram(sino, run.path("sinogram.csv"));
      run.wrote(rec, run.path("sinogram.csv"), true);
    }
  });

  if (cfg.noise.kind != radon::NoiseSpec::Kind::none) {
    run.stage("noise", [&](StageRecord& rec) {
      sino = radon::add_noise(sino, cfg.noise);
      if (run.writing()) {
        radon::write_sinogram(sino, run.path("sinogram_noisy.csv"));
        run.wrote(rec, run.path("sinogram_noisy.csv"), true);
      }
    });
  } else {
    run.skip("noise", "no noise model");
  }

  if (cfg.mollifier) {
    run.stage("mollify", [&](StageRecord& rec) {
      spec.emplace(mollifier::parse_family(cfg.mollifier->family), *res.h,
                   std::max(64, cfg.max_order));
      sino = mollifier::mollify_sinogram(sino, *spec, cfg.execution);
      rec.detail = "h = " + res.h->str(17);
      if (run.writing()) {
        radon::write_sinogram(sino, run.path("sinogram_mollified.csv"));
        run.wrote(rec, run.path("sinogram_mollified.csv"), true);
      }
    });
  } else if (sino.meta.mollifier) {
    // an input sinogram that was mollified elsewhere
    spec.emplace(mollifier::MollifierSpec::from_descriptor(*sino.meta.mollifier, std::max(64, cfg.max_order)));
    res.h = spec->h();
    run.skip("mollify", "input already mollified");
  } else {
    run.skip("mollify", "no mollifier");
  }

  momentsys::MomentSet moments;
  run.stage("moments", [&](StageRecord& rec) {
    const bool continuous =
        cfg.moment_quadrature == momentsys::MomentQuadrature::continuous ||
        (cfg.moment_quadrature == momentsys::MomentQuadrature::automatic &&
         momentsys::continuous_available(sino));
    res.moment_path = continuous ? "continuous" : "grid";
    rec.detail = res.moment_path;
    moments = momentsys::extract_moments(sino, cfg.max_order, cfg.moment_quadrature, cfg.execution);
    const std::string name = spec ? "moments_hatb.json" : "moments_b.json";
    if (run.writing()) {
      momentsys::write_moment_set(moments, run.path(name));
      run.wrote(rec, run.path(name), false);
    }
  });

  if (spec) {
    run.stage("hatb_to_b", [&](StageRecord& rec) {
      res.hatb = moments;
      res.b = momentsys::hatb_to_b(moments, *spec);
      if (run.writing()) {
        momentsys::write_moment_set(res.b, run.path("moments_b.json"));
        run.wrote(rec, run.path("moments_b.json"), false);
      }
    });
  } else {
    res.b = std::move(moments);
    run.skip("hatb_to_b", "raw moments");
  }

  run.stage("recover", [&](StageRecord& rec) {
    res.recovery = momentsys::recover_triangle(res.b, cfg.max_order, cfg.solver, cfg.execution);
    if (run.writing()) {
      momentsys::write_triangle(res.recovery.triangle, run.path("triangle.json"));
      run.wrote(rec, run.path("triangle.json"), false);
    }
  });

  if (cfg.reconstruction) {
    run.stage("reconstruct", [&](StageRecord& rec) {
      const auto& r = *cfg.reconstruction;
      auto g = reconstruct::reconstruct_grid(res.recovery.triangle, r.m, r.n, r.resolution1,
                                             r.resolution2, cfg.execution);
      g.source = sino.meta.source;
      g.h = res.h;
      rec.detail = "digits lost " + g.digits_lost.str(4);
      res.grid = std::move(g);
      if (run.writing()) {
        reconstruct::write_grid(*res.grid, run.path("grid.csv"));
        run.wrote(rec, run.path("grid.csv"), true);
      }
    });
  } else {
    run.skip("reconstruct", "no reconstruction requested");
  }

  res.sinogram = std::move(sino);
  res.stages = run.stages();
  res.manifest = manifest("ok");
  if (write_files) io::write_json(cfg.output_dir / "manifest.json", res.manifest);
  return res;
}

StudyResult convergence_study(const PipelineConfig& cfg, const std::vector<int>& orders) {
  if (orders.empty()) throw ValidationError("study needs at least one order");
  if (!cfg.density) throw ValidationError("study needs a registry density to measure the error");
  StudyResult out;
  std::vector<int> ns;
  std::vector<double> errs;
  for (int n : orders) {
    if (n < 1) throw ValidationError("study orders must be positive");
    PipelineConfig c = cfg;
    ReconstructionRequest r = cfg.reconstruction.value_or(ReconstructionRequest{});
    r.m = n;
    r.n = n;
    c.reconstruction = r;
    c.max_order = std::max(cfg.max_order, 2 * n);
    const auto t0 = Clock::now();
    auto res = run_pipeline(c, false);
    StudyRow row;
    row.n = n;
    {
      num::PrecisionScope scope(c.precision_bits);
      row.sup_error = reconstruct::sup_error(*res.grid, density::make_density(*cfg.density)).to_double();
    }
    row.runtime_ms = elapsed_ms(t0);
    ns.push_back(n);
    errs.push_back(row.sup_error);
    row.slope_estimate = reconstruct::fit_loglog_slope(ns, errs);
    out.rows.push_back(row);
  }
  out.fitted_slope = reconstruct::fit_loglog_slope(ns, errs);
  return out;
}

void write_study(const StudyResult& r, const PipelineConfig& cfg, const fs::path& csv) {
  std::string text = "n,sup_error,slope_estimate,runtime_ms\n";
  char buf[160];
  for (const auto& row : r.rows) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.3f\n", row.n, row.sup_error, row.slope_estimate,
                  row.runtime_ms);
    text += buf;
  }
  io::write_text(csv, text);
  io::json meta;
  meta["schema"] = kStudySchema;
  meta["precision_bits"] = cfg.precision_bits;
  meta["fitted_slope"] = r.fitted_slope;
  meta["config"] = cfg.to_json();
  meta["versions"] = version_info();
  io::write_json(io::sidecar_path(csv), meta);
}

}  // namespace mrt::cli
