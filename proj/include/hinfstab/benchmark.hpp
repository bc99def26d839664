#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hinfstab/synthesis.hpp"

namespace hinfstab {

struct BenchmarkRecord {
  std::string plant;
  Index order = 0;
  double gamma = kInf;
  bool controller_stable = false;
  bool closed_loop_stable = false;
  double wall_seconds = 0.0;
  std::uint64_t seed = 0;
  double epsilon = 0.0;  // epsilon of the winning run
  // Set once the persisted controller has been re-read and re-checked.
  bool verified = false;
  std::string error;

  bool ok() const { return verified && error.empty(); }

  friend bool operator==(const BenchmarkRecord&, const BenchmarkRecord&) = default;
};

struct BenchmarkOptions {
  // Where controllers are written as `<plant>_nK<order>.ctrl`. Without it the
  // controller text is kept in memory and re-parsed from there.
  std::optional<std::filesystem::path> out_dir;
  // Plants processed concurrently. Orders of one plant run in sequence.
  int workers = 1;
  // Start each order from the padded best controller of the previous one.
  bool warm_start = true;
};

/// Parses every plant first (ParseError / DimensionMismatch propagate), then
/// runs one synthesis per (plant, order). A failing record never aborts the
/// batch. Records come back in (plant path, ascending order) order.
std::vector<BenchmarkRecord> run_benchmark(const std::vector<std::filesystem::path>& plant_paths,
                                           const std::vector<Index>& orders,
                                           const SynthesisConfig& cfg,
                                           const BenchmarkOptions& opts = {});

struct VerifyOutcome {
  double gamma = kInf;
  bool controller_stable = false;
  bool closed_loop_stable = false;
};

/// Independent check of a controller against a plant.
VerifyOutcome verify_controller(const GeneralizedPlant& plant, const ControllerParams& K,
                                double norm_rtol = kDefaultNormRtol);

enum class ReportFormat { TextTable, Delimited };

/// Rows sorted by plant name, then descending order. The text table omits
/// wall time so equal syntheses give equal bytes.
std::string emit_report(std::vector<BenchmarkRecord> records, ReportFormat format);

/// Inverse of emit_report(..., Delimited).
std::vector<BenchmarkRecord> parse_delimited_report(std::string_view text);

}  // namespace hinfstab
