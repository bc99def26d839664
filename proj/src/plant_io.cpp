#include "hinfstab/plant_io.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

namespace hinfstab {

namespace {

struct Token {
  std::string_view text;
  std::size_t column;  // 1-based
};

struct Line {
  std::size_t number;  // 1-based
  std::vector<Token> tokens;
  std::string_view raw;
};

std::vector<Line> split_lines(std::string_view text) {
  std::vector<Line> out;
  std::size_t number = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view raw = text.substr(pos, end - pos);
    ++number;
    if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
    if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    Line line{number, {}, raw};
    std::size_t i = 0;
    while (i < raw.size()) {
      while (i < raw.size() && (raw[i] == ' ' || raw[i] == '\t')) ++i;
      const std::size_t start = i;
      while (i < raw.size() && raw[i] != ' ' && raw[i] != '\t') ++i;
      if (i > start) line.tokens.push_back({raw.substr(start, i - start), start + 1});
    }
    if (!line.tokens.empty()) out.push_back(std::move(line));
    if (end == text.size()) break;
    pos = end + 1;
  }
  return out;
}

double parse_number(const Token& t, std::size_t line) {
  std::string_view s = t.text;
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ParseError("expected a number, got '" + std::string(t.text) + "'", line, t.column);
  }
  if (!std::isfinite(v)) {
    throw ParseError("non-finite entry '" + std::string(t.text) + "'", line, t.column);
  }
  return v;
}

Index parse_count(const Token& t, std::size_t line) {
  Index v = 0;
  const auto res = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
  if (res.ec != std::errc() || res.ptr != t.text.data() + t.text.size() || v < 0) {
    throw ParseError("expected a nonnegative integer, got '" + std::string(t.text) + "'", line,
                     t.column);
  }
  return v;
}

bool is_label(std::string_view tok) {
  return !tok.empty() && (std::isalpha(static_cast<unsigned char>(tok.front())) != 0) &&
         tok != "inf" && tok != "nan" && tok != "infinity";
}

struct BlockSpec {
  std::string_view label;
  Index rows;
  Index cols;
};

struct Parsed {
  std::string name;
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<Index> header;
  std::map<std::string, Matrix, std::less<>> blocks;
};

std::string rest_of_line(const Line& line, std::size_t token_index) {
  if (token_index >= line.tokens.size()) return {};
  const std::size_t start = line.tokens[token_index].column - 1;
  std::string_view rest = line.raw.substr(start);
  while (!rest.empty() && (rest.back() == ' ' || rest.back() == '\t')) rest.remove_suffix(1);
  return std::string(rest);
}

// `shapes` maps the header to the expected block shapes.
template <class ShapeFn>
Parsed parse_generic(std::string_view text, std::size_t header_size, ShapeFn shapes) {
  const std::vector<Line> lines = split_lines(text);
  Parsed out;
  std::size_t i = 0;
  for (; i < lines.size() && lines[i].tokens.front().text.front() == '@'; ++i) {
    const Line& l = lines[i];
    const std::string_view key = l.tokens.front().text;
    if (key == "@name") {
      out.name = rest_of_line(l, 1);
    } else if (key == "@meta") {
      if (l.tokens.size() < 2) throw ParseError("@meta needs a key", l.number, l.raw.size() + 1);
      out.meta.emplace_back(std::string(l.tokens[1].text), rest_of_line(l, 2));
    } else {
      throw ParseError("unknown directive '" + std::string(key) + "'", l.number,
                       l.tokens.front().column);
    }
  }
  if (i == lines.size()) {
    const std::size_t last = lines.empty() ? 1 : lines.back().number;
    throw ParseError("missing dimension header", last, 1);
  }
  const Line& head = lines[i++];
  if (head.tokens.size() != header_size) {
    const std::size_t col = head.tokens.size() > header_size
                                ? head.tokens[header_size].column
                                : head.raw.size() + 1;
    throw ParseError("dimension header needs " + std::to_string(header_size) + " integers",
                     head.number, col);
  }
  for (const Token& t : head.tokens) out.header.push_back(parse_count(t, head.number));
  const std::vector<BlockSpec> specs = shapes(out.header);

  while (i < lines.size()) {
    const Line& l = lines[i];
    const Token& lab = l.tokens.front();
    if (!is_label(lab.text) || l.tokens.size() != 1) {
      throw ParseError("expected a block label", l.number, lab.column);
    }
    const auto spec = std::find_if(specs.begin(), specs.end(),
                                   [&](const BlockSpec& s) { return s.label == lab.text; });
    if (spec == specs.end()) {
      throw ParseError("unknown block '" + std::string(lab.text) + "'", l.number, lab.column);
    }
    if (out.blocks.count(lab.text) != 0) {
      throw ParseError("duplicate block '" + std::string(lab.text) + "'", l.number, lab.column);
    }
    ++i;
    std::vector<std::vector<double>> rows;
    while (i < lines.size() && !is_label(lines[i].tokens.front().text)) {
      const Line& r = lines[i++];
      if (r.tokens.front().text.front() == '@') {
        throw ParseError("directives must precede the header", r.number, r.tokens.front().column);
      }
      std::vector<double> row;
      for (const Token& t : r.tokens) row.push_back(parse_number(t, r.number));
      rows.push_back(std::move(row));
    }
    const std::string label(lab.text);
    if (static_cast<Index>(rows.size()) != (spec->cols == 0 ? 0 : spec->rows)) {
      throw DimensionMismatch(label, "expected " + std::to_string(spec->rows) + "x" +
                                         std::to_string(spec->cols) + ", found " +
                                         std::to_string(rows.size()) + " rows");
    }
    Matrix M = Matrix::Zero(spec->rows, spec->cols);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (static_cast<Index>(rows[r].size()) != spec->cols) {
        throw DimensionMismatch(label, "row " + std::to_string(r + 1) + " has " +
                                           std::to_string(rows[r].size()) + " entries, expected " +
                                           std::to_string(spec->cols));
      }
      for (std::size_t c = 0; c < rows[r].size(); ++c) {
        M(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
      }
    }
    out.blocks.emplace(label, std::move(M));
  }
  for (const BlockSpec& s : specs) {
    if (out.blocks.count(s.label) == 0) {
      const std::size_t last = lines.back().number;
      throw ParseError("missing block '" + std::string(s.label) + "'", last + 1, 1);
    }
  }
  return out;
}

std::vector<BlockSpec> plant_shapes(const std::vector<Index>& h) {
  const Index n = h[0], m1 = h[1], m2 = h[2], p1 = h[3], p2 = h[4];
  return {{"A", n, n},     {"B1", n, m1},   {"B2", n, m2},   {"C1", p1, n},   {"C2", p2, n},
          {"D11", p1, m1}, {"D12", p1, m2}, {"D21", p2, m1}, {"D22", p2, m2}};
}

std::vector<BlockSpec> controller_shapes(const std::vector<Index>& h) {
  const Index nk = h[0], m2 = h[1], p2 = h[2];
  return {{"AK", nk, nk}, {"BK", nk, p2}, {"CK", m2, nk}, {"DK", m2, p2}};
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_block(std::ostringstream& os, std::string_view label, const Matrix& M) {
  os << label << '\n';
  if (M.cols() == 0) return;
  for (Index r = 0; r < M.rows(); ++r) {
    for (Index c = 0; c < M.cols(); ++c) os << (c ? " " : "") << format_double(M(r, c));
    os << '\n';
  }
}

void write_preamble(std::ostringstream& os, std::string_view name,
                    const std::vector<std::pair<std::string, std::string>>& meta) {
  if (!name.empty()) os << "@name " << name << '\n';
  for (const auto& [k, v] : meta) os << "@meta " << k << (v.empty() ? "" : " ") << v << '\n';
}

}  // namespace

std::string format_double(double v) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

PlantFile parse_plant_file(std::string_view text) {
  Parsed p = parse_generic(text, 5, plant_shapes);
  auto take = [&](const char* k) { return std::move(p.blocks.find(k)->second); };
  PlantMatrices m{take("A"),   take("B1"),  take("B2"),  take("C1"), take("C2"),
                  take("D11"), take("D12"), take("D21"), take("D22")};
  return PlantFile{std::move(p.name), std::move(p.meta), GeneralizedPlant(std::move(m))};
}

GeneralizedPlant parse_plant(std::string_view text) { return parse_plant_file(text).plant; }

PlantFile load_plant(const std::filesystem::path& path) {
  PlantFile f = parse_plant_file(read_file(path));
  if (f.name.empty()) f.name = path.stem().string();
  return f;
}

ControllerFile parse_controller_file(std::string_view text) {
  Parsed p = parse_generic(text, 3, controller_shapes);
  const auto& b = p.blocks;
  ControllerParams K = ControllerParams::from_matrices(b.find("AK")->second, b.find("BK")->second,
                                                       b.find("CK")->second, b.find("DK")->second);
  // from_matrices infers dimensions from shapes; empty blocks need the header.
  const ControllerDims dims{p.header[0], p.header[2], p.header[1]};
  if (!(K.dims() == dims)) K = ControllerParams(dims, K.theta());
  return ControllerFile{std::move(p.name), std::move(p.meta), std::move(K)};
}

ControllerParams parse_controller(std::string_view text) {
  return parse_controller_file(text).controller;
}

ControllerFile load_controller(const std::filesystem::path& path) {
  ControllerFile f = parse_controller_file(read_file(path));
  if (f.name.empty()) f.name = path.stem().string();
  return f;
}

std::string serialize_plant(const GeneralizedPlant& plant, std::string_view name,
                            const std::vector<std::pair<std::string, std::string>>& meta) {
  std::ostringstream os;
  write_preamble(os, name, meta);
  const PlantDims d = plant.dims();
  os << d.n << ' ' << d.m1 << ' ' << d.m2 << ' ' << d.p1 << ' ' << d.p2 << '\n';
  write_block(os, "A", plant.A());
  write_block(os, "B1", plant.B1());
  write_block(os, "B2", plant.B2());
  write_block(os, "C1", plant.C1());
  write_block(os, "C2", plant.C2());
  write_block(os, "D11", plant.D11());
  write_block(os, "D12", plant.D12());
  write_block(os, "D21", plant.D21());
  write_block(os, "D22", plant.D22());
  return os.str();
}

std::string serialize_controller(const ControllerParams& K, std::string_view name,
                                 const std::vector<std::pair<std::string, std::string>>& meta) {
  std::ostringstream os;
  write_preamble(os, name, meta);
  const ControllerDims d = K.dims();
  os << d.order << ' ' << d.outputs << ' ' << d.inputs << '\n';
  write_block(os, "AK", K.AK());
  write_block(os, "BK", K.BK());
  write_block(os, "CK", K.CK());
  write_block(os, "DK", K.DK());
  return os.str();
}

}  // namespace hinfstab
