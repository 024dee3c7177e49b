#pragma once
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "common.hpp"
#include "rng.hpp"
#include "solvers.hpp"
#include "sparse_matrix.hpp"

namespace nuacdm {

struct Dataset {
  SparseRowMatrix features;
  Vector labels;
};

// 17 significant digits, so parsing the text gives back x bitwise.
inline std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace detail {

inline bool parse_double(std::string_view text, double& out) {
  if (text.empty()) return false;
  // from_chars rejects a leading '+'.
  if (text.front() == '+') text.remove_prefix(1);
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc() && ptr == end;
}

inline bool parse_index(std::string_view text, long long& out) {
  if (text.empty()) return false;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc() && ptr == end;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// LibSVM text format: "<label> <idx>:<val> ..." with 1-based ascending indices.
// Everything after '#' on a line is a comment; blank lines are skipped.
// ---------------------------------------------------------------------------

inline Dataset parse_libsvm(std::istream& in, std::optional<Index> dim = std::nullopt) {
  std::vector<std::vector<SparseEntry>> rows;
  std::vector<double> labels;
  Index max_col = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    if (auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);

    std::vector<std::pair<std::size_t, std::string_view>> tokens;  // (column, token)
    std::size_t pos = 0;
    while (pos < view.size()) {
      while (pos < view.size() && (view[pos] == ' ' || view[pos] == '\t' || view[pos] == '\r')) ++pos;
      const std::size_t start = pos;
      while (pos < view.size() && view[pos] != ' ' && view[pos] != '\t' && view[pos] != '\r') ++pos;
      if (pos > start) tokens.emplace_back(start + 1, view.substr(start, pos - start));
    }
    if (tokens.empty()) continue;

    double label = 0.0;
    if (!detail::parse_double(tokens[0].second, label)) {
      throw ParseError("malformed label '" + std::string(tokens[0].second) + "'", line_no, tokens[0].first);
    }
    if (!std::isfinite(label)) throw ParseError("non-finite label", line_no, tokens[0].first);

    std::vector<SparseEntry> row;
    long long prev = 0;
    for (std::size_t t = 1; t < tokens.size(); ++t) {
      const auto [col, tok] = tokens[t];
      const auto colon = tok.find(':');
      if (colon == std::string_view::npos) {
        throw ParseError("malformed feature '" + std::string(tok) + "', expected idx:val", line_no, col);
      }
      long long idx = 0;
      double val = 0.0;
      if (!detail::parse_index(tok.substr(0, colon), idx) || idx < 1) {
        throw ParseError("malformed feature index in '" + std::string(tok) + "'", line_no, col);
      }
      if (!detail::parse_double(tok.substr(colon + 1), val)) {
        throw ParseError("malformed feature value in '" + std::string(tok) + "'", line_no, col);
      }
      if (!std::isfinite(val)) throw ParseError("non-finite feature value", line_no, col);
      if (idx <= prev) throw ParseError("feature indices must be strictly ascending", line_no, col);
      prev = idx;
      row.push_back({static_cast<Index>(idx - 1), val});
      max_col = std::max(max_col, static_cast<Index>(idx));
    }
    rows.push_back(std::move(row));
    labels.push_back(label);
  }
  const Index cols = dim.value_or(max_col);
  require(cols >= max_col, "libsvm: feature index exceeds the requested dimension");
  Dataset ds{SparseRowMatrix(cols, rows), Vector(static_cast<Index>(labels.size()))};
  for (std::size_t i = 0; i < labels.size(); ++i) ds.labels[static_cast<Index>(i)] = labels[i];
  return ds;
}

inline Dataset parse_libsvm(const std::string& path, std::optional<Index> dim = std::nullopt) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return parse_libsvm(in, dim);
}

inline void write_libsvm(std::ostream& out, const Dataset& ds) {
  require(ds.labels.size() == ds.features.rows(), "libsvm: one label per row required");
  for (Index r = 0; r < ds.features.rows(); ++r) {
    out << format_double(ds.labels[r]);
    for (const auto& e : ds.features.row(r)) out << ' ' << (e.col + 1) << ':' << format_double(e.value);
    out << '\n';
  }
}

inline void write_libsvm(const std::string& path, const Dataset& ds) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  write_libsvm(out, ds);
  if (!out) throw IoError("failed writing '" + path + "'");
}

// ---------------------------------------------------------------------------
// Synthetic instances
// ---------------------------------------------------------------------------

struct LinearSystem {
  SparseRowMatrix a;
  Vector b;
  Vector x_star;
  // Number of rows rescaled to the `hi` norm.
  Index hi_rows = 0;
};

// ceil(r m), robust to r m landing a hair above an integer (0.6 * 300).
inline Index hi_row_count(double r, Index m) {
  const double rm = r * static_cast<double>(m);
  const double nearest = std::round(rm);
  const double c = std::abs(rm - nearest) <= 1e-9 * std::max(1.0, rm) ? nearest : std::ceil(rm);
  return static_cast<Index>(c);
}

/// Dense m x n system with entries uniform in [0, 1]. The first ceil(r m) rows
/// are rescaled to Euclidean norm `hi`, the rest to `lo`, then the rows are
/// shuffled. x* is standard normal and b = A x*.
inline LinearSystem gen_linear_system(Index m, Index n, double r, std::uint64_t seed, double hi = 10.0,
                                      double lo = 1.0) {
  require(m >= 1 && n >= 1, "linear system: dimensions must be positive");
  require(m >= n, "linear system: need m >= n");
  require(r >= 0.0 && r <= 1.0, "linear system: r must lie in [0, 1]");
  require(hi > 0.0 && lo > 0.0, "linear system: row norms must be positive");
  Rng rng(seed);
  const Index n_hi = hi_row_count(r, m);
  std::vector<std::vector<SparseEntry>> rows(static_cast<std::size_t>(m));
  for (Index i = 0; i < m; ++i) {
    auto& row = rows[static_cast<std::size_t>(i)];
    row.reserve(static_cast<std::size_t>(n));
    double sq = 0.0;
    for (Index j = 0; j < n; ++j) {
      const double v = rng.uniform();
      row.push_back({j, v});
      sq += v * v;
    }
    if (sq == 0.0) {
      row[0].value = 1.0;
      sq = 1.0;
    }
    const double scale = (i < n_hi ? hi : lo) / std::sqrt(sq);
    for (auto& e : row) e.value *= scale;
  }
  std::vector<Index> order(static_cast<std::size_t>(m));
  for (Index i = 0; i < m; ++i) order[static_cast<std::size_t>(i)] = i;
  rng.shuffle(order);
  std::vector<std::vector<SparseEntry>> shuffled;
  shuffled.reserve(rows.size());
  for (Index i : order) shuffled.push_back(std::move(rows[static_cast<std::size_t>(i)]));

  LinearSystem sys;
  sys.a = SparseRowMatrix(n, shuffled);
  sys.x_star = Vector(n);
  for (Index j = 0; j < n; ++j) sys.x_star[j] = rng.normal();
  sys.b = sys.a.multiply(sys.x_star);
  sys.hi_rows = n_hi;
  return sys;
}

// Per-example target norms for gen_skewed_dataset.
namespace norm_profile {

inline Vector constant(Index n, double c) { return Vector::Constant(n, c); }

// The first ceil(r n) examples get norm hi, the rest lo.
inline Vector two_level(Index n, double r, double hi, double lo) {
  Vector v = Vector::Constant(n, lo);
  v.head(hi_row_count(r, n)).setConstant(hi);
  return v;
}

inline Vector log_uniform(Index n, double lo, double hi, std::uint64_t seed) {
  require(lo > 0.0 && hi >= lo, "log-uniform norms need 0 < lo <= hi");
  Rng rng(seed);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = std::exp(rng.uniform(std::log(lo), std::log(hi)));
  return v;
}

}  // namespace norm_profile

/// n examples in R^d with standard normal entries, each row rescaled to the
/// requested norm. Labels are <a_i, w> + 0.1 noise for a standard normal w.
inline Dataset gen_skewed_dataset(Index n, Index d, const Vector& norms, std::uint64_t seed) {
  require(n >= 1 && d >= 1, "dataset: dimensions must be positive");
  require(norms.size() == n, "dataset: one target norm per example required");
  for (Index i = 0; i < n; ++i) {
    if (!std::isfinite(norms[i]) || norms[i] < 0.0) {
      throw InvalidArgument("dataset: target norm of example " + std::to_string(i) + " is invalid");
    }
    if (norms[i] == 0.0) {
      throw InvalidArgument("dataset: zero target norm for example " + std::to_string(i) +
                            " cannot be reached by rescaling a nonzero row");
    }
  }
  Rng rng(seed);
  Vector w(d);
  for (Index j = 0; j < d; ++j) w[j] = rng.normal();
  std::vector<std::vector<SparseEntry>> rows(static_cast<std::size_t>(n));
  Vector labels(n);
  for (Index i = 0; i < n; ++i) {
    auto& row = rows[static_cast<std::size_t>(i)];
    double sq = 0.0;
    for (Index j = 0; j < d; ++j) {
      const double v = rng.normal();
      row.push_back({j, v});
      sq += v * v;
    }
    const double scale = norms[i] / std::sqrt(sq);
    double dot = 0.0;
    for (auto& e : row) {
      e.value *= scale;
      dot += e.value * w[e.col];
    }
    labels[i] = dot + 0.1 * rng.normal();
  }
  return {SparseRowMatrix(d, rows), labels};
}

// ---------------------------------------------------------------------------
// Trace files: CSV with header algo,seed,iter,epoch,value,dist_to_min
// ---------------------------------------------------------------------------

inline constexpr const char* kTraceHeader = "algo,seed,iter,epoch,value,dist_to_min";

struct LabeledTrace {
  std::string algo;
  std::uint64_t seed = 0;
  ConvergenceTrace trace;
};

inline void write_trace(std::ostream& out, const std::vector<LabeledTrace>& traces) {
  out << kTraceHeader << '\n';
  for (const auto& t : traces) {
    require(t.algo.find_first_of(",\n\r") == std::string::npos, "trace: algorithm name contains a separator");
    for (const auto& r : t.trace.records) {
      out << t.algo << ',' << t.seed << ',' << r.iter << ',' << format_double(r.epoch) << ','
          << format_double(r.value) << ',';
      if (r.dist) out << format_double(*r.dist);
      out << '\n';
    }
  }
}

inline void write_trace(const std::vector<LabeledTrace>& traces, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  write_trace(out, traces);
  if (!out) throw IoError("failed writing '" + path + "'");
}

// Consecutive rows with the same (algo, seed) form one trace.
inline std::vector<LabeledTrace> read_trace(std::istream& in) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw ParseError("trace: missing header", 1, 1);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTraceHeader) throw ParseError("trace: unexpected header '" + line + "'", 1, 1);
  std::vector<LabeledTrace> out;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string_view> fields;
    std::vector<std::size_t> cols;
    std::string_view view(line);
    std::size_t start = 0;
    for (;;) {
      const auto comma = view.find(',', start);
      cols.push_back(start + 1);
      if (comma == std::string_view::npos) {
        fields.push_back(view.substr(start));
        break;
      }
      fields.push_back(view.substr(start, comma - start));
      start = comma + 1;
    }
    if (fields.size() != 6) {
      throw ParseError("trace: expected 6 fields, found " + std::to_string(fields.size()), line_no, 1);
    }
    std::uint64_t seed = 0;
    long long iter = 0;
    TraceRecord rec;
    {
      auto [p, ec] = std::from_chars(fields[1].data(), fields[1].data() + fields[1].size(), seed);
      if (ec != std::errc() || p != fields[1].data() + fields[1].size()) {
        throw ParseError("trace: malformed seed", line_no, cols[1]);
      }
    }
    if (!detail::parse_index(fields[2], iter) || iter < 0) throw ParseError("trace: malformed iter", line_no, cols[2]);
    if (!detail::parse_double(fields[3], rec.epoch)) throw ParseError("trace: malformed epoch", line_no, cols[3]);
    if (!detail::parse_double(fields[4], rec.value)) throw ParseError("trace: malformed value", line_no, cols[4]);
    if (!fields[5].empty()) {
      double d = 0.0;
      if (!detail::parse_double(fields[5], d)) throw ParseError("trace: malformed dist_to_min", line_no, cols[5]);
      rec.dist = d;
    }
    rec.iter = iter;
    const std::string algo(fields[0]);
    if (out.empty() || out.back().algo != algo || out.back().seed != seed ||
        (!out.back().trace.empty() && out.back().trace.back().iter >= rec.iter)) {
      out.push_back({algo, seed, {}});
    }
    out.back().trace.records.push_back(rec);
  }
  return out;
}

inline std::vector<LabeledTrace> read_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return read_trace(in);
}

}  // namespace nuacdm
