/*
 Copyright 2026 The lmpc-cert Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/
#ifndef LMPC_IO_HPP
#define LMPC_IO_HPP

// Whitespace-delimited data files with a single '#' header line.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "lmpc/controller.hpp"
#include "lmpc/types.hpp"

namespace lmpc::io {

/// Writes to path.tmp and renames over path.
inline void atomic_write(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw ResourceError("cannot open " + tmp.string() + " for writing");
    body(os);
    os.flush();
    if (!os) throw ResourceError("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw ResourceError("rename " + tmp.string() + " -> " + path.string() + ": " + ec.message());
}

inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
  atomic_write(path, [&](std::ostream& os) { os << content; });
}

/// Round-trip formatting of a double.
inline std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v == 0.0 ? 0.0 : v);
  return buf;
}

/// Columns: t x1..xn u1..ud stage_cost value (u is unnumbered when d = 1).
/// The last row is the final state with zero input and stage cost.
inline void write_trajectory(std::ostream& os, const Trajectory& states, const Trajectory& inputs,
                             const std::vector<double>& stage_costs, const std::vector<double>& values) {
  detail::require(!states.empty() && states.size() == inputs.size() + 1, "write_trajectory: need one more state than inputs");
  const auto n = states.front().size();
  const auto d = inputs.empty() ? Eigen::Index{1} : inputs.front().size();
  os << "# t";
  for (Eigen::Index i = 0; i < n; ++i) os << " x" << i + 1;
  if (d == 1) {
    os << " u";
  } else {
    for (Eigen::Index i = 0; i < d; ++i) os << " u" << i + 1;
  }
  os << " stage_cost value\n";
  for (std::size_t t = 0; t < states.size(); ++t) {
    os << t;
    for (Eigen::Index i = 0; i < n; ++i) os << ' ' << num(states[t][i]);
    for (Eigen::Index i = 0; i < d; ++i) os << ' ' << num(t < inputs.size() ? inputs[t][i] : 0.0);
    os << ' ' << num(t < stage_costs.size() ? stage_costs[t] : 0.0);
    os << ' ' << num(t < values.size() ? values[t] : 0.0) << '\n';
  }
}

inline void write_trajectory(std::ostream& os, const IterationRecord& r) {
  write_trajectory(os, r.states, r.inputs, r.stage_costs, r.values);
}

struct TrajectoryFile {
  Trajectory states;
  Trajectory inputs;
  std::vector<double> stage_costs;
  std::vector<double> values;
};

/// Reads a file written by write_trajectory; dimensions come from the header.
inline TrajectoryFile read_trajectory(std::istream& is, const std::string& name = "trajectory") {
  std::string header;
  if (!std::getline(is, header) || header.empty() || header[0] != '#')
    throw std::invalid_argument(name + ": missing '#' header line");
  std::istringstream hs(header.substr(1));
  std::vector<std::string> cols;
  for (std::string c; hs >> c;) cols.push_back(c);
  Eigen::Index n = 0, d = 0;
  for (const auto& c : cols) {
    if (c.size() > 1 && c[0] == 'x') ++n;
    if (c == "u" || (c.size() > 1 && c[0] == 'u')) ++d;
  }
  const std::size_t width = static_cast<std::size_t>(1 + n + d + 2);
  if (n == 0 || d == 0 || cols.size() != width || cols.front() != "t" || cols.back() != "value")
    throw std::invalid_argument(name + ": unexpected header '" + header + "'");
  TrajectoryFile f;
  std::string line;
  std::size_t row = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::vector<double> v;
    for (double x; ls >> x;) v.push_back(x);
    if (v.size() != width || !ls.eof()) throw std::invalid_argument(name + ": malformed row " + std::to_string(row + 1));
    if (static_cast<std::size_t>(v[0]) != row) throw std::invalid_argument(name + ": non-consecutive time index");
    Vec x(n), u(d);
    for (Eigen::Index i = 0; i < n; ++i) x[i] = v[static_cast<std::size_t>(1 + i)];
    for (Eigen::Index i = 0; i < d; ++i) u[i] = v[static_cast<std::size_t>(1 + n + i)];
    f.states.push_back(x);
    f.inputs.push_back(u);
    f.stage_costs.push_back(v[width - 2]);
    f.values.push_back(v[width - 1]);
    ++row;
  }
  if (f.states.empty()) throw std::invalid_argument(name + ": no rows");
  // the last row carries the final state only
  f.inputs.pop_back();
  f.stage_costs.pop_back();
  return f;
}

inline TrajectoryFile read_trajectory(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("cannot open " + path.string());
  return read_trajectory(is, path.string());
}

}  // namespace lmpc::io

#endif  // LMPC_IO_HPP
