// Copyright 2026 The SimA Lab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <initializer_list>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "simalab/error.hpp"

namespace simalab {

// N x d row-major block of points.
class PointSet {
 public:
  PointSet() = default;
  PointSet(std::size_t dim, std::string provenance = {})
      : dim_(dim), provenance_(std::move(provenance)) {}
  PointSet(std::size_t dim, std::vector<double> values, std::string provenance = {})
      : dim_(dim), values_(std::move(values)), provenance_(std::move(provenance)) {
    require(dim_ > 0 || values_.empty(), ErrorKind::kShape, "point set with zero dimension");
    require(dim_ == 0 || values_.size() % dim_ == 0, ErrorKind::kShape,
            "point set values not a multiple of the dimension");
    for (double v : values_) {
      require(std::isfinite(v), ErrorKind::kShape, "point set contains a non-finite value");
    }
  }

  PointSet(std::size_t dim, std::initializer_list<double> values, std::string provenance = {})
      : PointSet(dim, std::vector<double>(values), std::move(provenance)) {}

  std::size_t size() const { return dim_ == 0 ? 0 : values_.size() / dim_; }
  std::size_t dim() const { return dim_; }
  bool empty() const { return values_.empty(); }

  std::span<const double> row(std::size_t i) const { return {values_.data() + i * dim_, dim_}; }
  std::span<double> row(std::size_t i) { return {values_.data() + i * dim_, dim_}; }
  std::span<const double> values() const { return values_; }

  const std::string& provenance() const { return provenance_; }
  void set_provenance(std::string p) { provenance_ = std::move(p); }

  void push_back(std::span<const double> point) {
    require(point.size() == dim_, ErrorKind::kShape, "point dimension mismatch");
    for (double v : point) {
      require(std::isfinite(v), ErrorKind::kShape, "point set contains a non-finite value");
    }
    values_.insert(values_.end(), point.begin(), point.end());
  }

  void reserve(std::size_t n) { values_.reserve(n * dim_); }

  friend bool operator==(const PointSet& a, const PointSet& b) {
    return a.dim_ == b.dim_ && a.values_ == b.values_;
  }

 private:
  std::size_t dim_ = 0;
  std::vector<double> values_;
  std::string provenance_;
};

// Shortest representation that parses back to the same double.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

inline double parse_double(std::string_view text) {
  if (text == "inf") return INFINITY;
  if (text == "-inf") return -INFINITY;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    fail(ErrorKind::kIo, "cannot parse number '" + std::string(text) + "'");
  }
  return v;
}

inline void write_csv(const PointSet& points, std::ostream& out) {
  for (std::size_t j = 0; j < points.dim(); ++j) out << (j ? "," : "") << 'x' << j;
  out << '\n';
  for (std::size_t i = 0; i < points.size(); ++i) {
    auto r = points.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) out << (j ? "," : "") << format_double(r[j]);
    out << '\n';
  }
}

inline PointSet read_csv(std::istream& in, std::string provenance = {}) {
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorKind::kIo, "empty point CSV");
  std::size_t dim = 0;
  {
    std::stringstream header(line);
    std::string cell;
    while (std::getline(header, cell, ',')) {
      require(cell == "x" + std::to_string(dim), ErrorKind::kIo,
              "unexpected point CSV header cell '" + cell + "'");
      ++dim;
    }
  }
  require(dim > 0, ErrorKind::kIo, "point CSV header has no columns");
  std::vector<double> values;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::size_t count = 0;
    std::size_t start = 0;
    while (start <= line.size()) {
      std::size_t comma = line.find(',', start);
      if (comma == std::string::npos) comma = line.size();
      values.push_back(parse_double(std::string_view(line).substr(start, comma - start)));
      ++count;
      start = comma + 1;
    }
    require(count == dim, ErrorKind::kIo, "point CSV row has wrong number of columns");
  }
  return PointSet(dim, std::move(values), std::move(provenance));
}

// Binary layout: 8-byte magic "SIMAPTS1", uint64 d, uint64 N, then N*d
// little-endian IEEE-754 doubles in row-major order.
inline constexpr char kPointSetMagic[8] = {'S', 'I', 'M', 'A', 'P', 'T', 'S', '1'};

inline void write_binary(const PointSet& points, std::ostream& out) {
  out.write(kPointSetMagic, sizeof(kPointSetMagic));
  const std::uint64_t d = points.dim();
  const std::uint64_t n = points.size();
  out.write(reinterpret_cast<const char*>(&d), sizeof(d));
  out.write(reinterpret_cast<const char*>(&n), sizeof(n));
  out.write(reinterpret_cast<const char*>(points.values().data()),
            static_cast<std::streamsize>(points.values().size() * sizeof(double)));
}

inline PointSet read_binary(std::istream& in, std::string provenance = {}) {
  char magic[8];
  in.read(magic, sizeof(magic));
  require(in.good() && std::memcmp(magic, kPointSetMagic, sizeof(magic)) == 0, ErrorKind::kIo,
          "not a point-set binary file");
  std::uint64_t d = 0, n = 0;
  in.read(reinterpret_cast<char*>(&d), sizeof(d));
  in.read(reinterpret_cast<char*>(&n), sizeof(n));
  require(in.good() && d > 0, ErrorKind::kIo, "truncated point-set header");
  std::vector<double> values(d * n);
  in.read(reinterpret_cast<char*>(values.data()),
          static_cast<std::streamsize>(values.size() * sizeof(double)));
  require(static_cast<std::uint64_t>(in.gcount()) == values.size() * sizeof(double),
          ErrorKind::kIo, "truncated point-set payload");
  return PointSet(d, std::move(values), std::move(provenance));
}

inline void save_csv(const PointSet& points, const std::string& path) {
  std::ofstream out(path);
  require(out.good(), ErrorKind::kIo, "cannot write " + path);
  write_csv(points, out);
}

inline PointSet load_csv(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::kIo, "cannot read " + path);
  return read_csv(in);
}

inline void save_binary(const PointSet& points, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorKind::kIo, "cannot write " + path);
  write_binary(points, out);
}

inline PointSet load_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorKind::kIo, "cannot read " + path);
  return read_binary(in);
}

}  // namespace simalab
