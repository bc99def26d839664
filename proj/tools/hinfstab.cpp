#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <iostream>
#include <string>
#include <vector>

#include "hinfstab/benchmark.hpp"
#include "hinfstab/plant_io.hpp"

using namespace hinfstab;

namespace {

constexpr int kExitVerifyFailed = 2;
constexpr int kExitParse = 3;

std::vector<Index> parse_order_range(const std::string& s) {
  const auto dots = s.find("..");
  if (dots == std::string::npos) throw CLI::ValidationError("--orders", "expected a..b");
  Index lo = 0, hi = 0;
  const auto a = std::from_chars(s.data(), s.data() + dots, lo);
  const auto b = std::from_chars(s.data() + dots + 2, s.data() + s.size(), hi);
  if (a.ec != std::errc() || a.ptr != s.data() + dots || b.ec != std::errc() ||
      b.ptr != s.data() + s.size() || lo < 0 || hi < lo) {
    throw CLI::ValidationError("--orders", "expected a..b with 0 <= a <= b");
  }
  std::vector<Index> out;
  for (Index k = lo; k <= hi; ++k) out.push_back(k);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fixed-order strong-stabilization Hinf controller synthesis"};
  app.require_subcommand(1);

  auto* bench = app.add_subcommand("bench", "Synthesize controllers for plant files and report");
  std::vector<std::string> plants;
  std::vector<Index> order_list;
  std::string order_range;
  std::vector<double> eps;
  int runs = 10;
  double cpumax = 300.0;
  std::uint64_t seed = 0;
  std::string out_dir;
  std::string format = "text";
  int workers = 1;
  bench->add_option("plants", plants, "Plant files")->required()->check(CLI::ExistingFile);
  auto* opt_order = bench->add_option("--order", order_list, "Controller order(s)");
  bench->add_option("--orders", order_range, "Inclusive order range a..b")->excludes(opt_order);
  bench->add_option("--eps", eps, "Epsilon sweep")->delimiter(',');
  bench->add_option("--runs", runs, "Random starts per epsilon")->check(CLI::NonNegativeNumber);
  bench->add_option("--cpumax", cpumax, "Seconds per (plant, order) synthesis")
      ->check(CLI::PositiveNumber);
  bench->add_option("--seed", seed, "Base seed");
  bench->add_option("--out", out_dir, "Directory for persisted controllers");
  bench->add_option("--format", format, "Report format")
      ->check(CLI::IsMember({"text", "delimited"}));
  bench->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);

  auto* verify = app.add_subcommand("verify", "Check a controller file against a plant file");
  std::string plant_path;
  std::string ctrl_path;
  verify->add_option("plant", plant_path, "Plant file")->required()->check(CLI::ExistingFile);
  verify->add_option("controller", ctrl_path, "Controller file")
      ->required()
      ->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*bench) {
      if (!order_range.empty()) order_list = parse_order_range(order_range);
      if (order_list.empty()) throw Error("bench: give --order or --orders");
      SynthesisConfig cfg;
      if (!eps.empty()) cfg.epsilons = eps;
      cfg.runs_per_epsilon = runs;
      cfg.cpumax = cpumax;
      cfg.seed = seed;
      cfg.workers = workers;
      cfg.validate();
      BenchmarkOptions opts;
      opts.workers = workers;
      if (!out_dir.empty()) opts.out_dir = out_dir;
      std::vector<std::filesystem::path> paths(plants.begin(), plants.end());
      const auto records = run_benchmark(paths, order_list, cfg, opts);
      if (records.empty()) return 0;
      std::cout << emit_report(records, format == "text" ? ReportFormat::TextTable
                                                         : ReportFormat::Delimited);
      for (const auto& r : records) {
        if (!r.ok()) {
          std::cerr << r.plant << " n_K=" << r.order << ": " << r.error << '\n';
        }
      }
      const bool all_ok =
          std::all_of(records.begin(), records.end(), [](const auto& r) { return r.ok(); });
      return all_ok ? 0 : kExitVerifyFailed;
    }
    const PlantFile pf = load_plant(plant_path);
    const ControllerFile cf = load_controller(ctrl_path);
    const VerifyOutcome v = verify_controller(pf.plant, cf.controller);
    std::cout << "gamma " << format_double(v.gamma) << '\n'
              << "controller_stable " << (v.controller_stable ? 1 : 0) << '\n'
              << "closed_loop_stable " << (v.closed_loop_stable ? 1 : 0) << '\n';
    return v.controller_stable && v.closed_loop_stable ? 0 : kExitVerifyFailed;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kExitParse;
  } catch (const DimensionMismatch& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kExitParse;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
