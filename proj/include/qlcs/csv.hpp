#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace qlcs {

// Fixed 17-significant-digit formatting: repeated runs must produce
// byte-identical CSV output.
inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::string& schema,
            const std::string& metadata, const std::string& header)
      : path_(path) {
    std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    out_.open(path);
    if (!out_) throw std::runtime_error("cannot open output file: " + path.string());
    out_ << "# qlcs csv v1 schema=" << schema;
    if (!metadata.empty()) out_ << ' ' << metadata;
    out_ << '\n' << header << '\n';
  }

  void row(const std::string& line) { out_ << line << '\n'; }

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace qlcs
