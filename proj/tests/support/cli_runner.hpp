#pragma once

// Runs the command-line tools as child processes and compares output trees.

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <sys/wait.h>

namespace fxbench::testing {

namespace fs = std::filesystem;

struct CliResult {
  int exit = -1;
  std::string out;
  std::string err;
};

inline std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
}

inline std::string quote(const std::string& arg) {
  std::string out = "'";
  for (char c : arg) {
    if (c == '\'') out += "'\\''";
    else out += c;
  }
  return out + "'";
}

class TempDir {
 public:
  TempDir() {
    std::string pattern = (fs::temp_directory_path() / "fxbench_cli_XXXXXX").string();
    path_ = mkdtemp(pattern.data());
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

inline CliResult run_program(const std::string& program, const std::string& args) {
  TempDir scratch;
  const fs::path err = scratch.path() / "stderr";
  const std::string command = quote(program) + " " + args + " 2>" + quote(err.string());
  CliResult result;
  FILE* pipe = popen(command.c_str(), "r");
  if (!pipe) throw std::runtime_error("popen failed: " + command);
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) result.out.append(buf.data(), n);
  const int status = pclose(pipe);
  result.exit = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  result.err = slurp(err);
  return result;
}

// Lists the differing files, or nothing when both trees match byte for byte.
inline std::vector<std::string> tree_diff(const fs::path& a, const fs::path& b) {
  std::vector<std::string> out;
  auto listing = [](const fs::path& root) {
    std::set<std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
      if (e.is_regular_file()) files.insert(fs::relative(e.path(), root).string());
    }
    return files;
  };
  const auto left = listing(a);
  const auto right = listing(b);
  for (const auto& f : left) {
    if (!right.count(f)) out.push_back("only in " + a.string() + ": " + f);
    else if (slurp(a / f) != slurp(b / f)) out.push_back("differs: " + f);
  }
  for (const auto& f : right) {
    if (!left.count(f)) out.push_back("only in " + b.string() + ": " + f);
  }
  return out;
}

}  // namespace fxbench::testing
