#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hinfstab/lti.hpp"

namespace hinfstab {

// Plain-text matrix files.
//
//   # comment (anywhere, to end of line)
//   @name he1
//   @meta source transcribed by hand
//   4 1 2 1 1          <- n m1 m2 p1 p2
//   A
//   0.1 2 ...          <- one row per line
//   B1
//   ...
//
// All nine blocks A B1 B2 C1 C2 D11 D12 D21 D22 must be labeled, in any
// order. A block with no rows or no columns has no lines. Controller files use
// the header `n_K m2 p2` and the blocks AK BK CK DK.

struct PlantFile {
  std::string name;
  std::vector<std::pair<std::string, std::string>> meta;
  GeneralizedPlant plant;
};

struct ControllerFile {
  std::string name;
  std::vector<std::pair<std::string, std::string>> meta;
  ControllerParams controller;
};

GeneralizedPlant parse_plant(std::string_view text);
PlantFile parse_plant_file(std::string_view text);
PlantFile load_plant(const std::filesystem::path& path);

ControllerFile parse_controller_file(std::string_view text);
ControllerParams parse_controller(std::string_view text);
ControllerFile load_controller(const std::filesystem::path& path);

// Entries are written in shortest round-trip form, so parsing the output
// reproduces every double bit for bit.
std::string serialize_plant(const GeneralizedPlant& plant, std::string_view name = {},
                            const std::vector<std::pair<std::string, std::string>>& meta = {});
std::string serialize_controller(const ControllerParams& K, std::string_view name = {},
                                 const std::vector<std::pair<std::string, std::string>>& meta = {});

// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

}  // namespace hinfstab
