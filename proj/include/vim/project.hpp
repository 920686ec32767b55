// include/vim/project.hpp

// Copyright 2026  The vimeval authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef VIM_PROJECT_HPP
#define VIM_PROJECT_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "vim/error.hpp"
#include "vim/io_util.hpp"
#include "vim/metrics.hpp"
#include "vim/trials.hpp"
#include "vim/tsne.hpp"

namespace vim {

inline constexpr std::string_view kHistogramHeader = "#vim-histogram v1";
inline constexpr std::string_view kProjectionHeader = "#vim-projection v1";

// Per-kind score histogram over uniform bins.  Bins are left-closed,
// right-open; the last bin also includes the upper edge.  Out-of-range
// scores are not counted.
struct Histogram {
  std::vector<double> bin_edges;  // n_bins + 1, strictly ascending
  std::vector<std::uint64_t> genuine;
  std::vector<std::uint64_t> impostor;
  std::vector<std::uint64_t> morph;
};

inline Histogram histogram(const std::vector<TrialScore> &trials, std::size_t n_bins,
                           double lo = -1.0, double hi = 1.0) {
  if (n_bins == 0) fail(ErrorCode::InvalidConfig, "histogram needs at least 1 bin");
  if (!(hi > lo)) {
    fail(ErrorCode::EmptyRange,
         "histogram range [" + io::format_double(lo) + ", " + io::format_double(hi) +
             ") is empty");
  }
  Histogram h;
  h.bin_edges.resize(n_bins + 1);
  for (std::size_t i = 0; i <= n_bins; ++i) {
    h.bin_edges[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n_bins);
  }
  h.genuine.assign(n_bins, 0);
  h.impostor.assign(n_bins, 0);
  h.morph.assign(n_bins, 0);
  for (const TrialScore &t : trials) {
    const double s = t.score;
    if (s < lo || s > hi) continue;
    std::size_t idx = s >= hi ? n_bins - 1
                              : static_cast<std::size_t>((s - lo) / (hi - lo) *
                                                         static_cast<double>(n_bins));
    if (idx >= n_bins) idx = n_bins - 1;
    // align arithmetic placement with the stored edges
    if (s < h.bin_edges[idx] && idx > 0) --idx;
    while (idx + 1 < n_bins && s >= h.bin_edges[idx + 1]) ++idx;
    switch (t.kind) {
      case TrialKind::Genuine: ++h.genuine[idx]; break;
      case TrialKind::Impostor: ++h.impostor[idx]; break;
      case TrialKind::Morph: ++h.morph[idx]; break;
    }
  }
  return h;
}

// bin_lo<TAB>bin_hi<TAB>genuine<TAB>impostor<TAB>morph
inline void save_histogram(const Histogram &h, const std::filesystem::path &path) {
  std::string out(kHistogramHeader);
  out.push_back('\n');
  for (std::size_t i = 0; i + 1 < h.bin_edges.size(); ++i) {
    out += io::format_double(h.bin_edges[i]);
    out.push_back('\t');
    out += io::format_double(h.bin_edges[i + 1]);
    out.push_back('\t');
    out += std::to_string(h.genuine[i]);
    out.push_back('\t');
    out += std::to_string(h.impostor[i]);
    out.push_back('\t');
    out += std::to_string(h.morph[i]);
    out.push_back('\n');
  }
  io::write_file(path, out);
}

struct ProjectionRow {
  std::string id;
  std::string label;
  double x = 0.0;
  double y = 0.0;
};

// id<TAB>label<TAB>x<TAB>y; plot-ready contract for external tools.
inline void save_projection(const std::vector<ProjectionRow> &rows,
                            const std::filesystem::path &path) {
  std::string out(kProjectionHeader);
  out.push_back('\n');
  for (const ProjectionRow &r : rows) {
    out += r.id;
    out.push_back('\t');
    out += r.label;
    out.push_back('\t');
    out += io::format_score(r.x);
    out.push_back('\t');
    out += io::format_score(r.y);
    out.push_back('\n');
  }
  io::write_file(path, out);
}

inline std::vector<ProjectionRow> load_projection(const std::filesystem::path &path) {
  const std::string text = io::read_file(path);
  const auto lines = io::split_lines(text);
  if (lines.empty() || lines[0] != kProjectionHeader) {
    fail(ErrorCode::ParseError,
         path.string() + ": line 1: missing '" + std::string(kProjectionHeader) +
             "' header");
  }
  std::vector<ProjectionRow> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    std::string_view line = lines[i];
    if (line.empty() || line.front() == '#') continue;
    const auto f = io::split_tabs(line);
    if (f.size() != 4) {
      fail(ErrorCode::ParseError, path.string() + ": line " + std::to_string(i + 1) +
                                      ": expected 4 fields");
    }
    ProjectionRow r;
    r.id = std::string(f[0]);
    r.label = std::string(f[1]);
    r.x = io::parse_double(f[2], path.string());
    r.y = io::parse_double(f[3], path.string());
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace vim

#endif  // VIM_PROJECT_HPP
