#include "bgc/ensemble_io.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

#include "bgc/errors.hpp"
#include "bgc/rng.hpp"
#include "bgc/serialization.hpp"
#include "digest.hpp"
#include "json_codec.hpp"

#ifndef BGC_VERSION_STRING
#define BGC_VERSION_STRING "0.0.0"
#endif

namespace bgc {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::size_t kChunkBytes = 1 << 20;

void append_double(std::string& out, double v) {
  char buf[64];
  const auto result = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  out.append(buf, result.ptr);
}

void append_unsigned(std::string& out, std::size_t v) {
  char buf[32];
  const auto result = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, result.ptr);
}

// Emits the canonical CSV in ~1 MiB chunks.
void emit_paths_csv(const PathEnsemble& ensemble, const std::function<void(std::string_view)>& sink) {
  const bool has_raw = std::any_of(ensemble.paths.begin(), ensemble.paths.end(),
                                   [](const Path& p) { return p.has_raw(); });
  std::string buffer = has_raw ? "path_id,step,t,x,raw_x\n" : "path_id,step,t,x\n";
  buffer.reserve(kChunkBytes + 256);
  for (const auto& path : ensemble.paths) {
    const std::size_t end = path.diverged_at.value_or(ensemble.steps());
    for (std::size_t j = 0; j < end; ++j) {
      append_unsigned(buffer, path.path_id);
      buffer.push_back(',');
      append_unsigned(buffer, j);
      buffer.push_back(',');
      append_double(buffer, ensemble.times[j]);
      buffer.push_back(',');
      append_double(buffer, path.values[j]);
      if (has_raw) {
        buffer.push_back(',');
        append_double(buffer, path.raw_values[j]);
      }
      buffer.push_back('\n');
      if (buffer.size() >= kChunkBytes) {
        sink(buffer);
        buffer.clear();
      }
    }
  }
  if (!buffer.empty()) sink(buffer);
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string read_file(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot open " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

template <typename T>
T parse_field(std::string_view field, std::size_t row, const char* name) {
  T value{};
  const char* first = field.data();
  const char* last = first + field.size();
  std::from_chars_result result{};
  if constexpr (std::is_floating_point_v<T>) {
    if (field == "nan") return std::numeric_limits<T>::quiet_NaN();
    result = std::from_chars(first, last, value, std::chars_format::general);
  } else {
    result = std::from_chars(first, last, value);
  }
  if (result.ec != std::errc{} || result.ptr != last) {
    throw IoError("paths.csv row " + std::to_string(row) + ": bad " + name + " '" +
                  std::string(field) + "'");
  }
  return value;
}

}  // namespace

std::string_view tool_version() { return BGC_VERSION_STRING; }

void write_paths_csv(const PathEnsemble& ensemble, std::ostream& out) {
  emit_paths_csv(ensemble, [&](std::string_view chunk) {
    out.write(chunk.data(), static_cast<std::streamsize>(chunk.size()));
  });
}

std::string content_digest(std::string_view bytes) {
  detail::Sha256 hash;
  hash.update(bytes);
  return "sha256:" + hash.hex_digest();
}

std::string ensemble_digest(const PathEnsemble& ensemble) {
  detail::Sha256 hash;
  emit_paths_csv(ensemble, [&](std::string_view chunk) { hash.update(chunk); });
  return "sha256:" + hash.hex_digest();
}

std::string manifest_to_json(const RunManifest& m) {
  json diverged = json::array();
  for (const auto& [path_id, step] : m.diverged) {
    diverged.push_back({{"path_id", path_id}, {"step", step}});
  }
  json j = {
      {"config", detail::config_to_json(m.config)},
      {"tool_version", m.tool_version},
      {"seed_algorithm_id", m.seed_algorithm_id},
      {"created_at", m.created_at},
      {"content_digest", m.content_digest},
      {"n_paths", m.n_paths},
      {"steps", m.steps},
      {"has_raw", m.has_raw},
      {"path_seeds", m.path_seeds},
      {"diverged", diverged},
      {"files", {{"paths", kPathsFile}}},
  };
  return j.dump(2) + "\n";
}

RunManifest manifest_from_json(std::string_view text) {
  try {
    const auto j = json::parse(text);
    detail::reject_unknown_keys(j, {"config", "tool_version", "seed_algorithm_id", "created_at",
                                    "content_digest", "n_paths", "steps", "has_raw", "path_seeds",
                                    "diverged", "files"}, "manifest");
    RunManifest m;
    m.config = detail::config_from_json(j.at("config"));
    m.tool_version = j.at("tool_version").get<std::string>();
    m.seed_algorithm_id = j.at("seed_algorithm_id").get<std::string>();
    m.created_at = j.at("created_at").get<std::string>();
    m.content_digest = j.at("content_digest").get<std::string>();
    m.n_paths = j.at("n_paths").get<std::size_t>();
    m.steps = j.at("steps").get<std::size_t>();
    m.has_raw = j.at("has_raw").get<bool>();
    m.path_seeds = j.at("path_seeds").get<std::vector<std::uint64_t>>();
    for (const auto& d : j.at("diverged")) {
      m.diverged.emplace_back(d.at("path_id").get<std::size_t>(), d.at("step").get<std::size_t>());
    }
    return m;
  } catch (const json::exception& e) {
    throw IoError(std::string("manifest: ") + e.what());
  }
}

void write_file_atomic(const fs::path& target, std::string_view text) {
  const fs::path temp = target.string() + ".tmp";
  {
    std::ofstream out(temp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + temp.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw IoError("write failed for " + temp.string());
  }
  fs::rename(temp, target);
}

RunManifest write_ensemble(const PathEnsemble& ensemble, const fs::path& directory) {
  std::error_code ec;
  fs::create_directories(directory, ec);
  if (ec) throw IoError("cannot create " + directory.string() + ": " + ec.message());

  const fs::path csv = directory / kPathsFile;
  const fs::path temp = csv.string() + ".tmp";
  detail::Sha256 hash;
  {
    std::ofstream out(temp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + temp.string());
    emit_paths_csv(ensemble, [&](std::string_view chunk) {
      hash.update(chunk);
      out.write(chunk.data(), static_cast<std::streamsize>(chunk.size()));
    });
    if (!out) throw IoError("write failed for " + temp.string());
  }
  fs::rename(temp, csv);

  RunManifest m;
  m.config = ensemble.source;
  m.tool_version = std::string(tool_version());
  m.seed_algorithm_id = std::string(kSeedAlgorithmId);
  m.created_at = utc_timestamp();
  m.content_digest = "sha256:" + hash.hex_digest();
  m.n_paths = ensemble.n_paths();
  m.steps = ensemble.steps();
  m.has_raw = std::any_of(ensemble.paths.begin(), ensemble.paths.end(),
                          [](const Path& p) { return p.has_raw(); });
  m.path_seeds = ensemble.per_path_seeds();
  for (const auto& p : ensemble.paths) {
    if (p.diverged_at) m.diverged.emplace_back(p.path_id, *p.diverged_at);
  }
  write_file_atomic(directory / kManifestFile, manifest_to_json(m));
  return m;
}

PathEnsemble read_ensemble(const fs::path& directory, bool verify) {
  const fs::path manifest_path = directory / kManifestFile;
  if (!fs::exists(manifest_path)) throw IoError("missing manifest " + manifest_path.string());
  const RunManifest m = manifest_from_json(read_file(manifest_path));
  const std::string text = read_file(directory / kPathsFile);

  if (verify) {
    if (content_digest(text) != m.content_digest) {
      throw IoError("digest mismatch for " + (directory / kPathsFile).string());
    }
  }
  if (m.path_seeds.size() != m.n_paths) throw IoError("manifest: path_seeds length mismatch");

  PathEnsemble ensemble;
  ensemble.source = m.config;
  const double horizon = std::visit([](const auto& c) { return c.horizon; }, m.config);
  ensemble.times = uniform_times(m.steps, horizon);
  ensemble.paths.resize(m.n_paths);
  for (std::size_t i = 0; i < m.n_paths; ++i) {
    auto& p = ensemble.paths[i];
    p.path_id = i;
    p.seed = m.path_seeds[i];
    p.values.assign(m.steps, std::numeric_limits<double>::quiet_NaN());
    if (m.has_raw) p.raw_values.assign(m.steps, std::numeric_limits<double>::quiet_NaN());
  }
  for (const auto& [path_id, step] : m.diverged) {
    if (path_id >= m.n_paths || step >= m.steps) throw IoError("manifest: bad divergence entry");
    ensemble.paths[path_id].diverged_at = step;
  }

  const std::size_t columns = m.has_raw ? 5 : 4;
  std::size_t pos = text.find('\n');
  if (pos == std::string::npos) throw IoError("paths.csv: missing header");
  const std::string_view expected_header =
      m.has_raw ? "path_id,step,t,x,raw_x" : "path_id,step,t,x";
  if (std::string_view(text).substr(0, pos) != expected_header) {
    throw IoError("paths.csv: unexpected header");
  }

  std::vector<std::size_t> next_step(m.n_paths, 0);
  std::size_t row = 1;
  std::string_view fields[5];
  ++pos;
  while (pos < text.size()) {
    const std::size_t eol = std::min(text.find('\n', pos), text.size());
    const std::string_view line(text.data() + pos, eol - pos);
    pos = eol + 1;
    ++row;
    std::size_t count = 0;
    std::size_t start = 0;
    for (;;) {
      const std::size_t comma = line.find(',', start);
      if (count < columns) fields[count] = line.substr(start, comma - start);
      ++count;
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (count != columns) {
      throw IoError("paths.csv row " + std::to_string(row) + ": expected " +
                    std::to_string(columns) + " fields, got " + std::to_string(count));
    }
    const auto path_id = parse_field<std::size_t>(fields[0], row, "path_id");
    const auto step = parse_field<std::size_t>(fields[1], row, "step");
    if (path_id >= m.n_paths || step >= m.steps || step != next_step[path_id]) {
      throw IoError("paths.csv row " + std::to_string(row) + ": unexpected path/step");
    }
    auto& p = ensemble.paths[path_id];
    if (p.diverged_at && step >= *p.diverged_at) {
      throw IoError("paths.csv row " + std::to_string(row) + ": value after divergence");
    }
    parse_field<double>(fields[2], row, "t");
    p.values[step] = parse_field<double>(fields[3], row, "x");
    if (m.has_raw) p.raw_values[step] = parse_field<double>(fields[4], row, "raw_x");
    ++next_step[path_id];
  }

  for (auto& p : ensemble.paths) {
    const std::size_t expected = p.diverged_at.value_or(m.steps);
    if (next_step[p.path_id] != expected) {
      throw IoError("paths.csv: path " + std::to_string(p.path_id) + " is truncated");
    }
    double integral = 0.0;
    for (std::size_t j = 0; j < expected; ++j) integral += p.values[j];
    p.path_integral = integral;
  }
  return ensemble;
}

EnsembleSummary summarize(const PathEnsemble& ensemble, std::size_t n_bins) {
  if (n_bins < 1) throw PreconditionError("summarize: n_bins must be >= 1");
  std::vector<const Path*> live;
  for (const auto& p : ensemble.paths) {
    if (!p.diverged()) live.push_back(&p);
  }
  if (live.empty()) {
    throw AnalysisError(AnalysisErrorKind::EmptyInput, "summarize: no non-diverged paths");
  }

  const std::size_t steps = ensemble.steps();
  const double n = static_cast<double>(live.size());
  EnsembleSummary s;
  s.diverged_count = ensemble.paths.size() - live.size();
  s.mean_path.assign(steps, 0.0);
  s.std_path.assign(steps, 0.0);
  for (std::size_t j = 0; j < steps; ++j) {
    double sum = 0.0;
    for (const auto* p : live) sum += p->values[j];
    const double mean = sum / n;
    double ss = 0.0;
    for (const auto* p : live) ss += (p->values[j] - mean) * (p->values[j] - mean);
    s.mean_path[j] = mean;
    s.std_path[j] = live.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  }

  std::vector<double> terminal;
  std::vector<double> integrals;
  for (const auto* p : live) {
    terminal.push_back(p->values[steps - 1]);
    integrals.push_back(p->path_integral);
  }

  const auto [tmin, tmax] = std::minmax_element(terminal.begin(), terminal.end());
  double lo = *tmin;
  double hi = *tmax;
  if (hi - lo <= 0.0) {
    lo -= 0.5;
    hi += 0.5;
  }
  s.terminal_histogram.counts.assign(n_bins, 0);
  s.terminal_histogram.edges.resize(n_bins + 1);
  const double width = (hi - lo) / static_cast<double>(n_bins);
  for (std::size_t k = 0; k <= n_bins; ++k) {
    s.terminal_histogram.edges[k] = lo + width * static_cast<double>(k);
  }
  s.terminal_histogram.edges.back() = hi;
  for (double v : terminal) {
    const double pos = std::floor((v - lo) / width);
    const auto k = static_cast<std::size_t>(std::clamp(pos, 0.0, static_cast<double>(n_bins - 1)));
    ++s.terminal_histogram.counts[k];
  }

  double sum = 0.0;
  for (double v : integrals) sum += v;
  const double mean = sum / n;
  double ss = 0.0;
  for (double v : integrals) ss += (v - mean) * (v - mean);
  const auto [imin, imax] = std::minmax_element(integrals.begin(), integrals.end());
  s.path_integral = {mean, live.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0, *imin, *imax};
  return s;
}

}  // namespace bgc
