#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mrt/errors.hpp"
#include "mrt/io.hpp"
#include "mrt/momentsys.hpp"
#include "mrt/parallel.hpp"
#include "mrt/radon.hpp"
#include "mrt/reconstruct.hpp"

namespace mrt::cli {

using num::Real;

inline constexpr const char* kConfigSchema = "mrt.config/1";
inline constexpr const char* kManifestSchema = "mrt.manifest/1";
inline constexpr const char* kStudySchema = "mrt.study/1";
inline constexpr const char* kToolVersion = "1.0.0";

struct ReconstructionRequest {
  int m = 10;
  int n = 10;
  int resolution1 = 51;
  int resolution2 = 51;
};

struct MollifierRequest {
  std::string family = "bump";
  // decimal string, or "auto" for choose_h with the density's derivative norms
  std::string h = "0.05";
  bool automatic() const { return h == "auto"; }
};

// Real-valued fields are kept as decimal strings and only turned into Reals
// once the run's precision is in force.
struct PipelineConfig {
  std::optional<std::string> density;
  std::optional<std::filesystem::path> input_sinogram;
  int angles_per_quadrant = 41;
  std::optional<std::vector<std::string>> angles;  // explicit list in radians
  int offsets = 2001;
  std::string pad = "0.2";
  std::optional<MollifierRequest> mollifier;
  radon::NoiseSpec noise;
  int max_order = 20;
  std::optional<ReconstructionRequest> reconstruction;
  int precision_bits = 256;
  std::optional<std::string> quadrature_tol;
  momentsys::SolveMode solver = momentsys::SolveMode::square;
  momentsys::MomentQuadrature moment_quadrature = momentsys::MomentQuadrature::automatic;
  std::filesystem::path output_dir = "mrt-out";
  Execution execution = Execution::parallel;

  static PipelineConfig from_json(const io::json& j);
  io::json to_json() const;
  // Throws ValidationError on a broken invariant.
  void validate() const;
};

PipelineConfig read_config(const std::filesystem::path& path);

// A stage failed; what() reads "<stage>: <cause>".
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& cause)
      : Error(stage + ": " + cause), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

struct StageRecord {
  std::string name;
  std::string status;  // "ok", "skipped" or "failed"
  double wall_ms = 0;
  std::vector<std::string> artifacts;
  std::string detail;
};

struct PipelineResult {
  std::optional<radon::Sinogram> sinogram;   // last sinogram produced
  std::optional<momentsys::MomentSet> hatb;  // only when mollified
  momentsys::MomentSet b;
  momentsys::Recovery recovery;
  std::optional<reconstruct::ReconstructionGrid> grid;
  std::optional<Real> h;  // mollifier bandwidth actually used
  std::string moment_path;
  std::vector<StageRecord> stages;
  io::json manifest;
};

// Runs simulate -> noise -> mollify -> moments -> hatb_to_b -> recover ->
// reconstruct at cfg.precision_bits. With write_files each stage writes its
// artifact under cfg.output_dir and a manifest.json closes the run. On a stage
// failure every artifact written so far (and the manifest) gets a ".partial"
// suffix and StageError is thrown.
PipelineResult run_pipeline(const PipelineConfig& cfg, bool write_files = true);

// The Reals of a mollifier request at the current precision.
Real resolve_h(const MollifierRequest& req, const density::Density& d, int n);

struct StudyRow {
  int n = 0;
  double sup_error = 0;
  double slope_estimate = 0;  // least-squares slope over rows up to this one
  double runtime_ms = 0;
};

struct StudyResult {
  std::vector<StudyRow> rows;
  double fitted_slope = 0;
};

// One pipeline per n with m = n and K = max(cfg K, 2n); the error is measured
// against the configured registry density.
StudyResult convergence_study(const PipelineConfig& cfg, const std::vector<int>& orders);

// CSV n,sup_error,slope_estimate,runtime_ms plus a sidecar with the fit.
void write_study(const StudyResult& r, const PipelineConfig& cfg, const std::filesystem::path& csv);

// Library/tool versions for manifests and --help.
io::json version_info();
std::vector<std::string> schema_versions();

}  // namespace mrt::cli
