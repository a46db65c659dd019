#pragma once

// Shared helpers for the JSON model files.

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace ier::detail {

/// Shortest-exact-enough decimal ("%.17g"), so a parse restores the same bits.
std::string format_real(double v);
nlohmann::ordered_json format_reals(const std::vector<double>& values);

double parse_real(const nlohmann::ordered_json& v);
std::vector<double> parse_reals(const nlohmann::ordered_json& arr);

/// Parses and checks the {format, version: 1} header.
nlohmann::ordered_json parse_model_json(std::string_view text, std::string_view format);

std::string dump(const nlohmann::ordered_json& j);

}  // namespace ier::detail
