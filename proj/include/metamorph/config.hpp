#pragma once

// JSON run configuration shared by the command-line workflows.

#include "metamorph/matching.hpp"
#include "metamorph/stochastics.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace metamorph {

struct NoiseConfig {
  std::string kind = "none";  // none | bumps | constant | fourier
  Points centers;             // bumps
  std::vector<int> directions;
  double length_scale = 1.0;
  Points vectors;     // constant
  std::size_t J = 0;  // fourier
  std::vector<double> amplitudes;
};

struct RunConfig {
  Structure structure = Structure::landmark;
  Domain domain;
  LagrangianSpec spec;
  NoiseConfig noise;
  Scheme scheme = Scheme::deterministic_rk4;
  double dt = 1e-2;
  double horizon = 1.0;
  std::size_t record_every = 1;
  std::uint64_t seed = 0;

  // landmark data
  Points q0, sigma0, q1;
  std::optional<PointMomentum> mu0;  // absent: start on the Noether zero level
  // image data
  std::optional<ScalarField> n0, n1;
  std::optional<ScalarDensity> image_sigma0;

  MatchOptions match;
  std::size_t n_samples = 1024;
  Points probes;
  std::size_t uq_record_every = 0;

  std::string output_dir = "out";
  /// SHA-256 over the parsed document and any referenced grid files.
  std::string hash;
  nlohmann::json document;

  NoiseBasis noise_basis() const;
  LandmarkState landmark_state() const;
  ImageState image_state() const;
};

/// Parses and validates a configuration. Relative file paths are resolved
/// against base_dir. Errors are InputError naming the offending key.
RunConfig parse_config(const nlohmann::json& document, const std::filesystem::path& base_dir = ".");
RunConfig load_config(const std::filesystem::path& path);

std::string structure_name(Structure s);

// ---- file formats ----------------------------------------------------------------

std::string sha256_hex(const std::string& bytes);

/// Raw little-endian float64 samples, row-major, with `<path>.json` holding
/// the shape, period and provenance.
void write_raw_grid(const std::filesystem::path& path, const Domain& domain, const std::vector<double>& values,
                    const std::string& config_hash, std::uint64_t seed);
ScalarField read_raw_grid(const std::filesystem::path& path);

void write_json(const std::filesystem::path& path, const nlohmann::json& value);

/// Comma-separated table whose first line is a comment with the config hash,
/// the seed and the column descriptions.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::string& kind, const std::string& config_hash,
            std::uint64_t seed, const std::vector<std::string>& columns, const std::string& column_notes);
  void row(const std::vector<double>& values);
  void close();

 private:
  std::filesystem::path path_;
  std::size_t width_;
  std::string text_;
};

/// Shortest round-trip decimal form of a double.
std::string format_double(double v);

}  // namespace metamorph
