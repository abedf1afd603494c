#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace fedzero {

// RFC 4648 base64, no line wrapping.
std::string base64_encode(const std::vector<std::uint8_t>& data);
std::vector<std::uint8_t> base64_decode(const std::string& text);

// Doubles as base64 of their IEEE-754 little-endian bytes.
std::string encode_params_b64(const std::vector<double>& params);
std::vector<double> decode_params_b64(const std::string& text);

// Locale-independent shortest round-trip formatting for CSV cells.
std::string fmt_double(double x);

double mean_of(const std::vector<double>& xs);
// Sample standard deviation (n-1); 0 for fewer than two points.
double sample_std(const std::vector<double>& xs);
// sample_std / sqrt(n).
double standard_error(const std::vector<double>& xs);

}  // namespace fedzero
