#include "hinfstab/benchmark.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include "hinfstab/hinf_norm.hpp"
#include "hinfstab/plant_io.hpp"

namespace hinfstab {

namespace {

std::string controller_file_name(const std::string& plant, Index order) {
  return plant + "_nK" + std::to_string(order) + ".ctrl";
}

void run_plant(const PlantFile& pf, const std::vector<Index>& orders, const SynthesisConfig& cfg,
               const BenchmarkOptions& opts, std::vector<BenchmarkRecord>& out) {
  std::vector<Index> sorted = orders;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

  std::optional<ControllerParams> previous;
  for (Index order : sorted) {
    BenchmarkRecord rec;
    rec.plant = pf.name;
    rec.order = order;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      SynthesisConfig run_cfg = cfg;
      run_cfg.order = order;
      if (opts.warm_start && previous && previous->order() <= order) {
        run_cfg.init_controllers.push_back(*previous);
      }
      const SynthesisResult res = synthesize(pf.plant, run_cfg);
      rec.gamma = res.gamma;
      rec.seed = res.best_seed;
      rec.epsilon = res.best_epsilon;
      previous = res.best_K;

      // Persist, read back and check the controller that was written.
      const std::string text = serialize_controller(
          res.best_K, pf.name + "_nK" + std::to_string(order),
          {{"gamma", format_double(res.gamma)}, {"seed", std::to_string(res.best_seed)}});
      ControllerParams reread;
      if (opts.out_dir) {
        const std::filesystem::path path = *opts.out_dir / controller_file_name(pf.name, order);
        {
          std::ofstream f(path, std::ios::binary);
          if (!f) throw Error("cannot write " + path.string());
          f << text;
        }
        reread = load_controller(path).controller;
      } else {
        reread = parse_controller(text);
      }
      const VerifyOutcome v = verify_controller(pf.plant, reread, cfg.tolerances.norm_rtol);
      rec.controller_stable = v.controller_stable;
      rec.closed_loop_stable = v.closed_loop_stable;
      rec.verified = v.controller_stable && v.closed_loop_stable && std::isfinite(v.gamma) &&
                     std::abs(v.gamma - res.gamma) <= 1e-6 * res.gamma;
      if (!rec.verified) rec.error = "verification failed (recomputed gamma " +
                                     format_double(v.gamma) + ")";
    } catch (const Error& err) {
      rec.error = err.what();
    }
    rec.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.push_back(std::move(rec));
  }
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + '"';
}

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool row_started = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      row_started = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      row_started = true;
    } else if (c == '\n') {
      if (row_started || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
      }
      field.clear();
      row.clear();
      row_started = false;
    } else if (c != '\r') {
      field += c;
      row_started = true;
    }
  }
  if (quoted) throw ParseError("unterminated quoted field", rows.size() + 1, 1);
  if (row_started || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

template <class T>
T parse_value(const std::string& s, std::size_t line, std::size_t col) {
  T v{};
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ParseError("bad value '" + s + "'", line, col);
  }
  return v;
}

bool parse_bool(const std::string& s, std::size_t line, std::size_t col) {
  if (s == "1") return true;
  if (s == "0") return false;
  throw ParseError("expected 0 or 1, got '" + s + "'", line, col);
}

constexpr std::string_view kHeader =
    "plant,order,gamma,controller_stable,closed_loop_stable,wall_seconds,seed,epsilon,verified,"
    "error";

}  // namespace

VerifyOutcome verify_controller(const GeneralizedPlant& plant, const ControllerParams& K,
                                double norm_rtol) {
  VerifyOutcome v;
  v.controller_stable = K.order() == 0 || is_stable(K.AK());
  const StateSpaceSystem cl = close_loop(plant, K);
  v.closed_loop_stable = is_stable(cl.A());
  if (v.closed_loop_stable) v.gamma = hinf_norm(cl, norm_rtol).value;
  return v;
}

std::vector<BenchmarkRecord> run_benchmark(const std::vector<std::filesystem::path>& plant_paths,
                                           const std::vector<Index>& orders,
                                           const SynthesisConfig& cfg,
                                           const BenchmarkOptions& opts) {
  std::vector<PlantFile> plants;
  plants.reserve(plant_paths.size());
  for (const auto& p : plant_paths) plants.push_back(load_plant(p));
  if (orders.empty() || plants.empty()) return {};
  if (opts.out_dir) std::filesystem::create_directories(*opts.out_dir);

  std::vector<std::vector<BenchmarkRecord>> per_plant(plants.size());
  const std::size_t n_workers =
      std::clamp<std::size_t>(static_cast<std::size_t>(std::max(opts.workers, 1)), 1, plants.size());
  if (n_workers == 1) {
    for (std::size_t i = 0; i < plants.size(); ++i) run_plant(plants[i], orders, cfg, opts, per_plant[i]);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < plants.size(); i = next++) {
          run_plant(plants[i], orders, cfg, opts, per_plant[i]);
        }
      });
    }
    for (auto& t : pool) t.join();
  }

  std::vector<BenchmarkRecord> out;
  for (auto& v : per_plant) {
    for (auto& r : v) out.push_back(std::move(r));
  }
  return out;
}

std::string emit_report(std::vector<BenchmarkRecord> records, ReportFormat format) {
  std::stable_sort(records.begin(), records.end(),
                   [](const BenchmarkRecord& a, const BenchmarkRecord& b) {
                     if (a.plant != b.plant) return a.plant < b.plant;
                     return a.order > b.order;
                   });
  std::ostringstream os;
  if (format == ReportFormat::Delimited) {
    os << kHeader << '\n';
    for (const BenchmarkRecord& r : records) {
      os << csv_field(r.plant) << ',' << r.order << ',' << format_double(r.gamma) << ','
         << (r.controller_stable ? 1 : 0) << ',' << (r.closed_loop_stable ? 1 : 0) << ','
         << format_double(r.wall_seconds) << ',' << r.seed << ',' << format_double(r.epsilon)
         << ',' << (r.verified ? 1 : 0) << ',' << csv_field(r.error) << '\n';
    }
    return os.str();
  }

  std::size_t width = 5;
  for (const BenchmarkRecord& r : records) width = std::max(width, r.plant.size());
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-*s  %4s  %12s  %-8s  %8s  %s\n", static_cast<int>(width),
                "plant", "n_K", "gamma", "stable", "epsilon", "seed");
  os << buf;
  for (const BenchmarkRecord& r : records) {
    char gamma[32];
    char eps[32];
    if (r.ok()) {
      std::snprintf(gamma, sizeof gamma, "%.6g", r.gamma);
      std::snprintf(eps, sizeof eps, "%.0e", r.epsilon);
    } else {
      std::snprintf(gamma, sizeof gamma, "FAIL");
      std::snprintf(eps, sizeof eps, "-");
    }
    const char* stable = r.controller_stable && r.closed_loop_stable ? "Stable" : "Unstable";
    std::snprintf(buf, sizeof buf, "%-*s  %4lld  %12s  %-8s  %8s  %llu\n",
                  static_cast<int>(width), r.plant.c_str(), static_cast<long long>(r.order),
                  gamma, stable, eps, static_cast<unsigned long long>(r.seed));
    os << buf;
  }
  return os.str();
}

std::vector<BenchmarkRecord> parse_delimited_report(std::string_view text) {
  const auto rows = parse_csv(text);
  if (rows.empty()) throw ParseError("empty report", 1, 1);
  std::string header;
  for (std::size_t i = 0; i < rows[0].size(); ++i) header += (i ? "," : "") + rows[0][i];
  if (header != kHeader) throw ParseError("unexpected header", 1, 1);
  std::vector<BenchmarkRecord> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& f = rows[i];
    const std::size_t line = i + 1;
    if (f.size() != 10) throw ParseError("expected 10 fields", line, 1);
    BenchmarkRecord r;
    r.plant = f[0];
    r.order = parse_value<Index>(f[1], line, 2);
    r.gamma = parse_value<double>(f[2], line, 3);
    r.controller_stable = parse_bool(f[3], line, 4);
    r.closed_loop_stable = parse_bool(f[4], line, 5);
    r.wall_seconds = parse_value<double>(f[5], line, 6);
    r.seed = parse_value<std::uint64_t>(f[6], line, 7);
    r.epsilon = parse_value<double>(f[7], line, 8);
    r.verified = parse_bool(f[8], line, 9);
    r.error = f[9];
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace hinfstab
