#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "swn/frequency.hpp"

namespace swn {

using Json = nlohmann::json;

inline std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::string read_file_bytes(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << text;
  if (!f) throw std::runtime_error("short write on " + path);
}

inline std::string profile_csv(const FrequencyProfile& p) {
  std::ostringstream ss;
  ss.precision(17);
  ss << "r,h,H,n\n";
  for (size_t k = 0; k < p.radii.size(); ++k) {
    ss << p.radii[k] << ',' << p.h_vals[k] << ',' << p.H_vals[k] << ',';
    if (p.n_defined[k]) ss << p.n_vals[k];
    else ss << "nan";
    ss << '\n';
  }
  return ss.str();
}

// Collects emitted files and produces the run manifest with content hashes.
class Manifest {
 public:
  Manifest(std::string out_dir, std::string config_hash, std::string mode)
      : out_dir_(std::move(out_dir)), config_hash_(std::move(config_hash)), mode_(std::move(mode)) {}

  void record(const std::string& name) {
    std::string bytes = read_file_bytes(out_dir_ + "/" + name);
    Json entry;
    entry["name"] = name;
    entry["bytes"] = bytes.size();
    entry["fnv1a64"] = hex64(fnv1a64(bytes));
    files_.push_back(entry);
  }

  void emit_text(const std::string& name, const std::string& text) {
    write_text_file(out_dir_ + "/" + name, text);
    record(name);
  }

  void emit_json(const std::string& name, Json j) {
    j["config_hash"] = config_hash_;
    emit_text(name, j.dump(2) + "\n");
  }

  void write(const std::string& name = "manifest.json") const {
    Json m;
    m["config_hash"] = config_hash_;
    m["mode"] = mode_;
    m["files"] = files_;
    write_text_file(out_dir_ + "/" + name, m.dump(2) + "\n");
  }

  const std::string& dir() const { return out_dir_; }

 private:
  std::string out_dir_;
  std::string config_hash_;
  std::string mode_;
  std::vector<Json> files_;
};

}  // namespace swn
