#pragma once

#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <istream>
#include <string>
#include <vector>

#include "prefkit/errors.hpp"
#include "prefkit/io.hpp"
#include "prefkit/text.hpp"

namespace prefkit {

constexpr size_t kStyleDim = 4;
inline const std::array<const char*, kStyleDim> kStyleNames = {"token_length", "md_lists",
                                                               "md_headers", "md_bold"};

struct StyleVector {
  int64_t token_length = 0;
  int64_t md_lists = 0;
  int64_t md_headers = 0;
  int64_t md_bold = 0;

  std::array<double, kStyleDim> as_array() const {
    return {static_cast<double>(token_length), static_cast<double>(md_lists),
            static_cast<double>(md_headers), static_cast<double>(md_bold)};
  }
  bool operator==(const StyleVector&) const = default;
};

namespace detail {

inline bool line_is_list_item(std::string_view line) {
  size_t i = 0;
  while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
  if (i >= line.size()) return false;
  char c = line[i];
  if ((c == '-' || c == '*' || c == '+') && i + 1 < line.size() && line[i + 1] == ' ')
    return true;
  if (std::isdigit(static_cast<unsigned char>(c))) {
    size_t j = i;
    while (j < line.size() && std::isdigit(static_cast<unsigned char>(line[j]))) ++j;
    return j + 1 < line.size() && line[j] == '.' && line[j + 1] == ' ';
  }
  return false;
}

inline bool line_is_header(std::string_view line) {
  size_t n = 0;
  while (n < line.size() && line[n] == '#') ++n;
  return n >= 1 && n <= 6 && n < line.size() && line[n] == ' ';
}

// Non-overlapping **…** / __…__ spans with non-empty content, single
// left-to-right scan.
inline int64_t count_bold_spans(std::string_view text) {
  int64_t n = 0;
  size_t i = 0;
  while (i + 1 < text.size()) {
    char c = text[i];
    if ((c == '*' || c == '_') && text[i + 1] == c) {
      std::string_view mark = text.substr(i, 2);
      size_t close = text.find(mark, i + 2);
      if (close != std::string_view::npos && close > i + 2) {
        ++n;
        i = close + 2;
        continue;
      }
    }
    ++i;
  }
  return n;
}

}  // namespace detail

inline StyleVector extract_style(std::string_view body) {
  StyleVector sv;
  sv.token_length = static_cast<int64_t>(token_count(body));
  size_t pos = 0;
  while (pos <= body.size()) {
    size_t nl = body.find('\n', pos);
    std::string_view line =
        body.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    if (detail::line_is_list_item(line)) ++sv.md_lists;
    if (detail::line_is_header(line)) ++sv.md_headers;
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  sv.md_bold = detail::count_bold_spans(body);
  return sv;
}

// Per-feature (a-b)/(a+b); 0/0 -> 0. Result is in [-1, 1] for counts.
inline std::array<double, kStyleDim> style_diff(const StyleVector& a, const StyleVector& b) {
  auto va = a.as_array();
  auto vb = b.as_array();
  std::array<double, kStyleDim> out{};
  for (size_t k = 0; k < kStyleDim; ++k) {
    double sum = va[k] + vb[k];
    out[k] = sum == 0.0 ? 0.0 : (va[k] - vb[k]) / sum;
  }
  return out;
}

struct StyleDiff {
  std::array<double, kStyleDim> raw{};
  std::array<double, kStyleDim> standardized{};
};

struct NormParams {
  std::array<double, kStyleDim> mean{};
  std::array<double, kStyleDim> sd{};  // 0 marks a zero-variance feature
};

inline std::array<double, kStyleDim> apply_norm(const std::array<double, kStyleDim>& raw,
                                                const NormParams& np) {
  std::array<double, kStyleDim> out{};
  for (size_t k = 0; k < kStyleDim; ++k)
    out[k] = np.sd[k] == 0.0 ? 0.0 : (raw[k] - np.mean[k]) / np.sd[k];
  return out;
}

// Population z-score per feature; zero-variance features map to identical 0.
inline NormParams fit_norm(const std::vector<std::array<double, kStyleDim>>& diffs) {
  if (diffs.empty()) throw DataError("standardize: empty input");
  NormParams np;
  const double n = static_cast<double>(diffs.size());
  for (size_t k = 0; k < kStyleDim; ++k) {
    double mean = 0.0;
    for (const auto& d : diffs) mean += d[k];
    mean /= n;
    double var = 0.0;
    for (const auto& d : diffs) var += (d[k] - mean) * (d[k] - mean);
    var /= n;
    np.mean[k] = mean;
    np.sd[k] = var > 0.0 ? std::sqrt(var) : 0.0;
  }
  return np;
}

inline std::vector<std::array<double, kStyleDim>> standardize(
    const std::vector<std::array<double, kStyleDim>>& diffs, NormParams* params_out = nullptr) {
  NormParams np = fit_norm(diffs);
  if (params_out) *params_out = np;
  std::vector<std::array<double, kStyleDim>> out;
  out.reserve(diffs.size());
  for (const auto& d : diffs) out.push_back(apply_norm(d, np));
  return out;
}

struct StyleRow {
  std::string pair_id;
  StyleDiff diff;
};

inline std::string style_csv_header() {
  std::string h = "pair_id";
  for (const char* name : kStyleNames) h += std::string(",raw_") + name;
  for (const char* name : kStyleNames) h += std::string(",std_") + name;
  return h;
}

inline void write_style_csv(const std::vector<StyleRow>& rows, std::ostream& out) {
  out << style_csv_header() << "\n";
  for (const auto& r : rows) {
    out << csv_escape(r.pair_id);
    for (double v : r.diff.raw) out << "," << fmt_double(v);
    for (double v : r.diff.standardized) out << "," << fmt_double(v);
    out << "\n";
  }
}

inline std::vector<StyleRow> parse_style_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("style csv: missing header");
  std::vector<StyleRow> rows;
  size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto cells = csv_split(line);
    if (cells.size() != 1 + 2 * kStyleDim)
      throw DataError("style csv: bad column count at line " + std::to_string(lineno));
    StyleRow r;
    r.pair_id = cells[0];
    try {
      for (size_t k = 0; k < kStyleDim; ++k) {
        r.diff.raw[k] = std::stod(cells[1 + k]);
        r.diff.standardized[k] = std::stod(cells[1 + kStyleDim + k]);
      }
    } catch (const std::exception&) {
      throw DataError("style csv: bad number at line " + std::to_string(lineno));
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace prefkit
