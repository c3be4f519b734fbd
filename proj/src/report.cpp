#include "em4lab/report.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <sstream>

namespace em4lab {

std::string sha256_hex(std::string_view bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr);
  std::string out;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", md[i]);
    out += buf;
  }
  return out;
}

Report::Report(std::string command) : command_(std::move(command)) {}

void Report::set_input(const std::string& path, std::string_view contents) {
  input_ = Json::object();
  input_["path"] = path;
  input_["sha256"] = sha256_hex(contents);
}

void Report::set_input_name(const std::string& name) {
  input_ = Json::object();
  input_["name"] = name;
}

void Report::check(const std::string& name, double value, double threshold, bool pass) {
  checks_.push_back({name, value, threshold, pass});
}

void Report::check_le(const std::string& name, double value, double threshold) {
  check(name, value, threshold, std::isfinite(value) && value <= threshold);
}

bool Report::pass() const {
  for (const Check& c : checks_)
    if (!c.pass) return false;
  return true;
}

Report::Json Report::to_json() const {
  Json j;
  j["schema_version"] = kReportSchemaVersion;
  j["command"] = command_;
  j["input"] = input_;
  j["config"] = config_;
  Json checks = Json::array();
  for (const Check& c : checks_) {
    Json e;
    e["name"] = c.name;
    e["value"] = c.value;
    e["threshold"] = c.threshold;
    e["pass"] = c.pass;
    checks.push_back(e);
  }
  j["checks"] = checks;
  j["results"] = results_;
  if (!notes_.empty()) j["notes"] = notes_;
  j["pass"] = pass();
  return j;
}

std::string Report::json_text() const { return to_json().dump(2) + "\n"; }

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

void flatten(const Report::Json& j, const std::string& prefix, std::ostringstream& os) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it) flatten(*it, prefix.empty() ? it.key() : prefix + "." + it.key(), os);
    return;
  }
  if (j.is_array() && std::any_of(j.begin(), j.end(), [](const Report::Json& e) { return e.is_structured(); })) {
    for (std::size_t i = 0; i < j.size(); ++i) flatten(j[i], prefix + "[" + std::to_string(i) + "]", os);
    return;
  }
  os << "  " << std::left << std::setw(40) << prefix << " ";
  if (j.is_number_float())
    os << fmt(j.get<double>());
  else if (j.is_array()) {
    os << "[";
    for (std::size_t i = 0; i < j.size(); ++i) {
      if (i) os << ", ";
      os << (j[i].is_number_float() ? fmt(j[i].get<double>()) : j[i].dump());
    }
    os << "]";
  } else if (j.is_string())
    os << j.get<std::string>();
  else
    os << j.dump();
  os << "\n";
}

}  // namespace

std::string Report::table_text() const {
  std::ostringstream os;
  os << command_;
  if (input_.contains("path")) os << "  " << input_["path"].get<std::string>();
  if (input_.contains("name")) os << "  " << input_["name"].get<std::string>();
  os << "\n";
  if (!config_.empty()) {
    os << "config\n";
    flatten(config_, "", os);
  }
  if (!results_.empty()) {
    os << "results\n";
    flatten(results_, "", os);
  }
  os << "checks\n";
  for (const Check& c : checks_)
    os << "  " << (c.pass ? "PASS" : "FAIL") << "  " << std::left << std::setw(50) << c.name << " " << std::setw(12)
       << fmt(c.value) << " threshold " << fmt(c.threshold) << "\n";
  for (const std::string& n : notes_) os << "note: " << n << "\n";
  os << (pass() ? "PASS" : "FAIL") << "\n";
  return os.str();
}

}  // namespace em4lab
