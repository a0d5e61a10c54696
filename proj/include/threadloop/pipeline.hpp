#pragma once

// Stage plumbing for the command-line tool: content-hash manifests, cache
// checks, and corpus directory layout. A stage directory holds its output
// files plus manifest.json recording the stage name, the full config echo
// (seed included), input hashes, and output hashes. Reruns with identical
// config and inputs are skipped unless forced, and never rewrite bytes.

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "threadloop/common.hpp"
#include "threadloop/corpus.hpp"
#include "threadloop/ingest.hpp"
#include "threadloop/rng.hpp"
#include "vendor/json.hpp"

namespace threadloop {

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write file: " + path.string());
  out << content;
  if (!out) throw DataError("short write: " + path.string());
}

inline std::string hash_hex(std::string_view bytes) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(bytes)));
  return buf;
}

inline std::string hash_file(const std::filesystem::path& path) {
  return hash_hex(read_file(path));
}

struct StageManifest {
  std::string stage;
  nlohmann::json config;  // full option echo, seed included
  std::map<std::string, std::string> inputs;   // path -> content hash
  std::map<std::string, std::string> outputs;  // filename -> content hash

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["stage"] = stage;
    j["config"] = config;
    j["inputs"] = inputs;
    j["outputs"] = outputs;
    return j;
  }

  static StageManifest from_json(const nlohmann::json& j) {
    StageManifest m;
    m.stage = j.at("stage").get<std::string>();
    m.config = j.at("config");
    m.inputs = j.at("inputs").get<std::map<std::string, std::string>>();
    m.outputs = j.at("outputs").get<std::map<std::string, std::string>>();
    return m;
  }
};

// True when the stage directory already holds outputs produced from the same
// config and bit-identical inputs.
inline bool cache_valid(const std::filesystem::path& out_dir, const std::string& stage,
                        const nlohmann::json& config,
                        const std::map<std::string, std::string>& inputs) {
  auto manifest_path = out_dir / "manifest.json";
  if (!std::filesystem::exists(manifest_path)) return false;
  StageManifest m;
  try {
    m = StageManifest::from_json(nlohmann::json::parse(read_file(manifest_path)));
  } catch (const std::exception&) {
    return false;
  }
  if (m.stage != stage || m.config != config || m.inputs != inputs) return false;
  for (const auto& [name, hash] : m.outputs) {
    auto p = out_dir / name;
    if (!std::filesystem::exists(p)) return false;
    if (hash_file(p) != hash) return false;
  }
  return true;
}

// Collects stage outputs and writes the manifest last, so a crashed run never
// leaves a directory that looks cache-valid.
class StageWriter {
 public:
  StageWriter(std::filesystem::path out_dir, std::string stage, nlohmann::json config)
      : dir_(std::move(out_dir)) {
    manifest_.stage = std::move(stage);
    manifest_.config = std::move(config);
    std::filesystem::create_directories(dir_);
    std::filesystem::remove(dir_ / "manifest.json");
  }

  void add_input(const std::string& path) { manifest_.inputs[path] = hash_file(path); }

  void add(const std::string& name, const std::string& content) {
    write_file(dir_ / name, content);
    manifest_.outputs[name] = hash_hex(content);
  }

  void finish() {
    write_file(dir_ / "manifest.json", manifest_.to_json().dump(2) + "\n");
  }

  const std::filesystem::path& dir() const { return dir_; }
  const StageManifest& manifest() const { return manifest_; }

 private:
  std::filesystem::path dir_;
  StageManifest manifest_;
};

// Corpus directories are ingest/synth outputs: corpus.jsonl in canonical
// order plus the manifest that recorded the platform tag.
inline Platform platform_of_dir(const std::filesystem::path& dir) {
  auto manifest_path = dir / "manifest.json";
  if (!std::filesystem::exists(manifest_path)) {
    throw ConfigError("not a corpus directory (missing manifest.json): " + dir.string());
  }
  auto j = nlohmann::json::parse(read_file(manifest_path));
  auto config = j.at("config");
  if (!config.contains("platform")) {
    throw ConfigError("manifest lacks a platform tag: " + manifest_path.string());
  }
  return parse_platform(config.at("platform").get<std::string>());
}

inline Corpus load_corpus_dir(const std::filesystem::path& dir, IngestReport* report = nullptr) {
  Platform platform = platform_of_dir(dir);
  auto corpus_path = dir / "corpus.jsonl";
  if (!std::filesystem::exists(corpus_path)) {
    throw ConfigError("corpus directory lacks corpus.jsonl: " + dir.string());
  }
  return ingest({corpus_path.string()}, platform, {}, report, IngestFormat::jsonl);
}

}  // namespace threadloop
