#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "bgc/ensemble.hpp"

namespace bgc {

std::string_view tool_version();

struct RunManifest {
  EnsembleSource config;
  std::string tool_version;
  std::string seed_algorithm_id;
  std::string created_at;  // UTC, ISO 8601
  std::string content_digest;  // "sha256:<hex>" of paths.csv
  std::size_t n_paths = 0;
  std::size_t steps = 0;
  bool has_raw = false;
  std::vector<std::uint64_t> path_seeds;
  std::vector<std::pair<std::size_t, std::size_t>> diverged;  // (path_id, step)

  friend bool operator==(const RunManifest&, const RunManifest&) = default;
};

inline constexpr const char* kPathsFile = "paths.csv";
inline constexpr const char* kManifestFile = "manifest.json";
inline constexpr const char* kSummaryFile = "summary.json";

/// Streams the canonical long-format CSV (`path_id,step,t,x[,raw_x]`, 17
/// significant digits). Steps at or after a path's divergence are omitted.
void write_paths_csv(const PathEnsemble& ensemble, std::ostream& out);

/// sha256 of the canonical CSV without touching disk.
std::string ensemble_digest(const PathEnsemble& ensemble);

std::string manifest_to_json(const RunManifest& manifest);
RunManifest manifest_from_json(std::string_view text);

/// Writes paths.csv and manifest.json into `directory` (created if needed)
/// via temp-file-and-rename.
RunManifest write_ensemble(const PathEnsemble& ensemble, const std::filesystem::path& directory);

/// Rebuilds an ensemble from a run directory. Throws IoError on a missing
/// manifest, a digest mismatch (when `verify`) or a malformed row.
PathEnsemble read_ensemble(const std::filesystem::path& directory, bool verify = true);

struct Histogram {
  std::vector<double> edges;  // size counts + 1
  std::vector<std::size_t> counts;
};

struct PathIntegralStats {
  double mean = 0.0;
  double std = 0.0;  // n - 1 convention
  double min = 0.0;
  double max = 0.0;
};

struct EnsembleSummary {
  std::vector<double> mean_path;
  std::vector<double> std_path;  // n - 1 convention; 0 with a single path
  Histogram terminal_histogram;
  PathIntegralStats path_integral;
  std::size_t diverged_count = 0;
};

/// Per-step moments, terminal histogram and path-integral statistics over
/// the non-diverged paths. Throws AnalysisError (EmptyInput) if none remain.
EnsembleSummary summarize(const PathEnsemble& ensemble, std::size_t n_bins = 50);

/// "sha256:<hex>" of `bytes`; the same digest format the manifest records.
std::string content_digest(std::string_view bytes);

/// Writes `text` to `target` through a sibling temp file and a rename.
void write_file_atomic(const std::filesystem::path& target, std::string_view text);

}  // namespace bgc
