#pragma once

// Run orchestration: cache lookup, command dispatch, report.json and CSV emission.

#include <openssl/evp.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "lcsmt/cli/commands.hpp"
#include "lcsmt/cli/config.hpp"

namespace lcsmt::cli {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { kOk = 0, kFailure = 1, kValidation = 2, kBudget = 3, kInconclusive = 4 };

inline std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  return os.str();
}

/// Canonical bytes: nlohmann objects keep keys sorted, so dump() is stable.
inline std::string config_hash(const json& canonical) { return sha256_hex(canonical.dump()); }

inline std::filesystem::path default_cache_dir() {
  if (const char* c = std::getenv("CACHE_DIR"); c && *c) return c;
  if (const char* x = std::getenv("XDG_CACHE_HOME"); x && *x) return std::filesystem::path(x) / "lcsmt";
  if (const char* h = std::getenv("HOME"); h && *h) return std::filesystem::path(h) / ".cache" / "lcsmt";
  return std::filesystem::temp_directory_path() / "lcsmt-cache";
}

struct CacheEntry {
  json report;
  std::map<std::string, std::string> files;
};

class Cache {
 public:
  explicit Cache(std::filesystem::path dir) : dir_(std::move(dir)) {}

  std::filesystem::path entry_path(const std::string& key) const { return dir_ / (key + ".json"); }

  /// Stored entry for `key`; a corrupt entry is a miss and adds a warning.
  std::optional<CacheEntry> lookup(const std::string& key, std::vector<std::string>& warnings) const {
    const auto path = entry_path(key);
    std::error_code ec;
    if (!std::filesystem::exists(path, ec)) return std::nullopt;
    try {
      std::ifstream in(path);
      const json j = json::parse(in);
      if (j.value("key", "") != key || !j.contains("report") || !j.at("report").is_object())
        throw std::runtime_error("entry does not match its key");
      CacheEntry e;
      e.report = j.at("report");
      for (const auto& [name, body] : j.at("files").items()) e.files[name] = body.get<std::string>();
      return e;
    } catch (const std::exception& ex) {
      warnings.push_back("ignored corrupt cache entry " + path.string() + ": " + ex.what());
      return std::nullopt;
    }
  }

  void store(const std::string& key, const CacheEntry& e, std::vector<std::string>& warnings) const {
    try {
      std::filesystem::create_directories(dir_);
      const auto path = entry_path(key);
      const auto tmp = path.string() + ".tmp";
      {
        std::ofstream out(tmp);
        json files = json::object();
        for (const auto& [name, body] : e.files) files[name] = body;
        out << json{{"key", key}, {"report", e.report}, {"files", files}}.dump();
        if (!out) throw std::runtime_error("write failed");
      }
      std::filesystem::rename(tmp, path);
    } catch (const std::exception& ex) {
      warnings.push_back(std::string("could not write cache entry: ") + ex.what());
    }
  }

 private:
  std::filesystem::path dir_;
};

/// Seconds since the epoch; SOURCE_DATE_EPOCH pins it for reproducible reports.
inline std::string report_timestamp() {
  std::time_t t;
  if (const char* s = std::getenv("SOURCE_DATE_EPOCH"); s && *s) t = static_cast<std::time_t>(std::strtoll(s, nullptr, 10));
  else t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

inline json error_json(const char* kind, const std::string& message, int code) {
  return {{"error", {{"kind", kind}, {"message", message}, {"exit_code", code}}}};
}

struct RunOptions {
  bool strict_verdict = false;
  bool use_cache = true;
  std::optional<std::filesystem::path> cache_dir;
};

struct RunResult {
  int exit_code = kOk;
  json report;
  bool cache_hit = false;
};

inline void write_outputs(const std::filesystem::path& dir, const json& report,
                          const std::map<std::string, std::string>& files) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "report.json");
    out << report.dump(2) << '\n';
    if (!out) throw std::runtime_error("cannot write " + (dir / "report.json").string());
  }
  for (const auto& [name, body] : files) {
    std::ofstream out(dir / name);
    out << body;
    if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
  }
}

/// Executes a validated config. Library errors propagate to the caller,
/// which maps them to exit codes with run_guarded.
inline RunResult run(const RunConfig& cfg, const RunOptions& opts = {}) {
  RunResult res;
  const std::string key = config_hash(cfg.raw);
  const Cache cache(opts.cache_dir.value_or(default_cache_dir()));
  std::vector<std::string> cache_warnings;
  std::optional<CacheEntry> hit;
  if (opts.use_cache) hit = cache.lookup(key, cache_warnings);

  CacheEntry entry;
  if (hit) {
    entry = std::move(*hit);
    res.cache_hit = true;
  } else {
    auto out = run_command(cfg);
    json report;
    report["command"] = cfg.command;
    report["config"] = cfg.raw;
    report["payload"] = std::move(out.payload);
    report["exact"] = out.exact;
    report["inconclusive"] = out.inconclusive;
    report["warnings"] = out.warnings;
    report["provenance"] = {{"version", kVersion},
                            {"timestamp", report_timestamp()},
                            {"seed", cfg.params.seed},
                            {"config_sha256", key}};
    entry.report = std::move(report);
    entry.files = std::move(out.files);
    if (opts.use_cache) cache.store(key, entry, cache_warnings);
  }
  for (const auto& w : cache_warnings) entry.report["warnings"].push_back(w);
  res.report = entry.report;
  res.report["provenance"]["cache"] = res.cache_hit ? "hit" : "miss";
  write_outputs(cfg.out, res.report, entry.files);
  if (opts.strict_verdict && entry.report.value("inconclusive", false)) res.exit_code = kInconclusive;
  return res;
}

/// Maps every failure to the exit-code contract and a JSON line on `err`.
template <class F>
int run_guarded(F&& body, std::ostream& err) {
  try {
    return body();
  } catch (const ValidationError& e) {
    err << error_json("validation", e.what(), kValidation).dump() << '\n';
    return kValidation;
  } catch (const DomainError& e) {
    err << error_json("domain", e.what(), kValidation).dump() << '\n';
    return kValidation;
  } catch (const json::exception& e) {
    err << error_json("validation", e.what(), kValidation).dump() << '\n';
    return kValidation;
  } catch (const BudgetError& e) {
    err << error_json("budget", e.what(), kBudget).dump() << '\n';
    return kBudget;
  } catch (const NotFound& e) {
    err << error_json("not_found", e.what(), kBudget).dump() << '\n';
    return kBudget;
  } catch (const std::exception& e) {
    err << error_json("internal", e.what(), kFailure).dump() << '\n';
    return kFailure;
  }
}

}  // namespace lcsmt::cli
