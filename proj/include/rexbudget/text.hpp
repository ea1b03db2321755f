/*
 * Copyright (c) 2026, the rexbudget authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <charconv>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "rexbudget/errors.hpp"

namespace rexbudget {

/// Shortest round-trippable decimal form of a double ("0.05", not
/// "0.050000000000000003"). Infinities and NaN render as "inf"/"nan".
inline std::string format_double(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, end);
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.emplace_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

inline double parse_double(std::string_view s, std::string_view what) {
  const std::string t(trim(s));
  if (t.empty()) throw config_error("empty value for " + std::string(what));
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size()) throw config_error("bad number '" + t + "' for " + std::string(what));
  return v;
}

inline long long parse_int(std::string_view s, std::string_view what) {
  const auto t = trim(s);
  long long v = 0;
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc{} || p != t.data() + t.size())
    throw config_error("bad integer '" + std::string(t) + "' for " + std::string(what));
  return v;
}

inline std::uint64_t parse_u64(std::string_view s, std::string_view what) {
  const auto t = trim(s);
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc{} || p != t.data() + t.size())
    throw config_error("bad unsigned integer '" + std::string(t) + "' for " + std::string(what));
  return v;
}

}  // namespace rexbudget
