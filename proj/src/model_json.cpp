#include "model_json.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

#include "ier/error.hpp"

namespace ier::detail {

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

nlohmann::ordered_json format_reals(const std::vector<double>& values) {
  auto arr = nlohmann::ordered_json::array();
  for (double v : values) arr.push_back(format_real(v));
  return arr;
}

double parse_real(const nlohmann::ordered_json& v) {
  if (v.is_number()) return v.get<double>();
  if (!v.is_string()) throw Error(ErrorCode::Malformed, "expected a decimal string");
  const auto& s = v.get_ref<const std::string&>();
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(out))
    throw Error(ErrorCode::Malformed, "not a finite decimal: '" + s + "'");
  return out;
}

std::vector<double> parse_reals(const nlohmann::ordered_json& arr) {
  if (!arr.is_array()) throw Error(ErrorCode::Malformed, "expected an array of decimals");
  std::vector<double> out;
  out.reserve(arr.size());
  for (const auto& v : arr) out.push_back(parse_real(v));
  return out;
}

nlohmann::ordered_json parse_model_json(std::string_view text, std::string_view format) {
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Malformed, std::string("model file is not JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("format") || j["format"] != format)
    throw Error(ErrorCode::IncompatibleModel,
                "expected a model with format \"" + std::string(format) + "\"");
  if (!j.contains("version") || j["version"] != 1)
    throw Error(ErrorCode::IncompatibleModel, "unsupported model version");
  return j;
}

std::string dump(const nlohmann::ordered_json& j) {
  return j.dump(1, ' ', false, nlohmann::json::error_handler_t::replace) + "\n";
}

}  // namespace ier::detail
