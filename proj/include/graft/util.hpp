// graft -- small shared helpers: splitting, number formatting, deterministic rng.
#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace graft {

// Splits on a single delimiter, keeping empty fields.
std::vector<std::string_view> split(std::string_view s, char delim);

// Splits on runs of spaces, dropping empty fields.
std::vector<std::string_view> split_ws(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

// Fixed-point formatting; all user-visible percentages go through fmt1 so
// artifact bytes are reproducible.
std::string fmt1(double v);
std::string fmt_p(double v);  // p-values, 6 decimals

bool parse_int(std::string_view s, int& out);
bool parse_i64(std::string_view s, std::int64_t& out);
bool parse_u64(std::string_view s, std::uint64_t& out);
bool parse_double(std::string_view s, double& out);

std::uint64_t splitmix64(std::uint64_t& state);
std::uint64_t mix64(std::uint64_t a, std::uint64_t b);

// Draws in [0, n) from mt19937_64 by rejection. std::uniform_int_distribution
// is implementation-defined, which would break byte-level reproducibility.
std::uint64_t uniform_below(std::mt19937_64& g, std::uint64_t n);
bool chance(std::mt19937_64& g, double p);
std::size_t weighted_pick(std::mt19937_64& g, const std::vector<double>& weights);

std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace graft
