#pragma once

// Command reports: named checks plus free-form config and results, rendered
// as stable JSON or a plain table.

#include "json.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace em4lab {

inline constexpr int kReportSchemaVersion = 1;

std::string sha256_hex(std::string_view bytes);

struct Check {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

class Report {
 public:
  using Json = nlohmann::ordered_json;

  explicit Report(std::string command);

  /// Records the path and SHA-256 of the file contents.
  void set_input(const std::string& path, std::string_view contents);
  void set_input_name(const std::string& name);

  Json& config() { return config_; }
  Json& results() { return results_; }
  const std::vector<Check>& checks() const { return checks_; }

  void check(const std::string& name, double value, double threshold, bool pass);
  /// pass iff value <= threshold (and value is finite).
  void check_le(const std::string& name, double value, double threshold);
  void note(const std::string& text) { notes_.push_back(text); }

  bool pass() const;
  Json to_json() const;
  std::string json_text() const;
  std::string table_text() const;

 private:
  std::string command_;
  Json input_ = Json::object();
  Json config_ = Json::object();
  Json results_ = Json::object();
  std::vector<Check> checks_;
  std::vector<std::string> notes_;
};

}  // namespace em4lab
