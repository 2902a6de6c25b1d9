#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "perfhom/geometry.hpp"
#include "perfhom/homogenize.hpp"

namespace perfhom {

struct GeometryConfig {
  bool perforated = true;
  HoleShape pattern = HoleShape::disk({0.5, 0.5}, 0.25);
  std::map<CellIndex, HoleShape> overrides;  // local cell coordinates
  double decay_amplitude = 0.0;              // 0 disables the decay rule
  double decay_ratio = 0.5;
  int window = 32;      // cells checked by geometry-check
  int a2_samples = 64;  // random inclusion samples per cell
  friend bool operator==(const GeometryConfig&, const GeometryConfig&) = default;
};

struct CorrectorConfig {
  int resolution = 128;
  int truncation = 6;
  int growth_truncation = 8;
  int trials = 200;
  friend bool operator==(const CorrectorConfig&, const CorrectorConfig&) = default;
};

struct MacroConfig {
  Point lo{0, 0}, hi{1, 1};
  Source source;
  Point anchor{0.5, 0.5};
  std::vector<double> eps{0.125, 0.0625, 0.03125};
  std::vector<int> cell_resolution{128, 128, 64};
  CorrectorChoice choice = CorrectorChoice::Both;
  CellIndex defect_cell{0, 0};
  friend bool operator==(const MacroConfig&, const MacroConfig&) = default;
};

struct PoincareConfig {
  std::vector<double> eps{0.25, 0.125, 0.0625};
  int cell_resolution = 32;
  int box_cell_resolution = 256;
  int coupling_resolution = 64;
  friend bool operator==(const PoincareConfig&, const PoincareConfig&) = default;
};

struct RunConfig {
  std::string output = "out";
  std::uint64_t seed = 1;
  int jobs = 1;
  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

struct ExperimentConfig {
  GeometryConfig geometry;
  CorrectorConfig corrector;
  MacroConfig macro;
  PoincareConfig poincare;
  RunConfig run;

  PerforationField field() const;
  MacroProblem macro_problem(double eps) const;
  StudySpec study_spec() const;
  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// [section] headers, key = value lines, '#' comments. Unknown sections or
/// keys and out-of-range values throw Config errors naming the line.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
std::string serialize_config(const ExperimentConfig& config);

/// Applies one key = value to an existing config with the parser's checks.
void set_config_value(ExperimentConfig& config, const std::string& section, const std::string& key,
                      const std::string& value);

/// Range checks that span several keys.
void validate_config(const ExperimentConfig& config);

}  // namespace perfhom
