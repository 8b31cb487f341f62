#ifndef NAUM_IO_HPP
#define NAUM_IO_HPP

#include <cerrno>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "dense_matrix.hpp"
#include "engine.hpp"
#include "errors.hpp"
#include "sparse_matrix.hpp"

namespace naum {

enum class MatrixFormat { DenseCsv, DenseBinary, SparseCoordinate };

inline MatrixFormat parse_format(const std::string& name) {
  if (name == "dense-csv") return MatrixFormat::DenseCsv;
  if (name == "dense-binary") return MatrixFormat::DenseBinary;
  if (name == "sparse-coordinate") return MatrixFormat::SparseCoordinate;
  throw InvalidParameter("unknown matrix format '" + name + "'");
}

// Exactly one of the two members is set.
struct LoadedMatrix {
  std::optional<DenseMatrix> dense;
  std::optional<SparseMatrix> sparse;
};

namespace detail {

constexpr char kDenseBinaryMagic[8] = {'N', 'A', 'U', 'M', 'M', 'A', 'T', '1'};

inline ParseError parse_error(const std::string& path, std::size_t line,
                              const std::string& what) {
  return ParseError(path + ":" + std::to_string(line) + ": " + what);
}

inline double parse_double(const std::string& token, const std::string& path,
                           std::size_t line) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  while (end && (*end == ' ' || *end == '\t' || *end == '\r')) ++end;
  if (end == token.c_str() || (end && *end != '\0'))
    throw parse_error(path, line, "cannot parse number '" + token + "'");
  return v;
}

inline std::uint64_t read_u64_le(std::istream& in) {
  unsigned char buf[8];
  in.read(reinterpret_cast<char*>(buf), 8);
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | buf[i];
  return v;
}

inline void write_u64_le(std::ostream& out, std::uint64_t v) {
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(buf), 8);
}

}  // namespace detail

inline DenseMatrix load_dense_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open file");
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    bool blank = true;
    for (char ch : line)
      if (ch != ' ' && ch != '\t') blank = false;
    if (blank) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string token;
    while (std::getline(ss, token, ','))
      row.push_back(detail::parse_double(token, path, lineno));
    if (!rows.empty() && row.size() != rows.front().size())
      throw detail::parse_error(path, lineno,
                                "row has " + std::to_string(row.size()) +
                                    " entries, expected " +
                                    std::to_string(rows.front().size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(path + ": no data rows");
  DenseMatrix m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  return m;
}

inline void save_dense_csv(const std::string& path, const DenseMatrix& m) {
  std::ofstream out(path);
  if (!out) throw ParseError(path + ": cannot open file for writing");
  char buf[32];
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
      if (j) out << ',';
      out << buf;
    }
    out << '\n';
  }
}

// Layout: 8-byte magic, then rows and cols as little-endian 64-bit unsigned,
// then rows*cols IEEE doubles in row-major order.
inline DenseMatrix load_dense_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path + ": cannot open file");
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, detail::kDenseBinaryMagic, 8) != 0)
    throw ParseError(path + ": bad magic, not a dense binary matrix file");
  const std::uint64_t rows = detail::read_u64_le(in);
  const std::uint64_t cols = detail::read_u64_le(in);
  if (!in) throw ParseError(path + ": truncated header");
  if (rows == 0 || cols == 0 || rows * cols > (1ull << 40))
    throw ParseError(path + ": implausible dimensions");
  DenseMatrix m(rows, cols);
  in.read(reinterpret_cast<char*>(m.data()),
          static_cast<std::streamsize>(sizeof(double) * m.size()));
  if (!in) throw ParseError(path + ": truncated payload");
  return m;
}

inline void save_dense_binary(const std::string& path, const DenseMatrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError(path + ": cannot open file for writing");
  out.write(detail::kDenseBinaryMagic, 8);
  detail::write_u64_le(out, m.rows());
  detail::write_u64_le(out, m.cols());
  out.write(reinterpret_cast<const char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double) * m.size()));
}

// Coordinate text: optional '%' comment lines, a "rows cols nnz" header line,
// then one "i j value" line per entry with 1-based indices. Duplicate
// positions are rejected.
inline SparseMatrix load_sparse_coordinate(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open file");
  std::string line;
  std::size_t lineno = 0;
  auto next_data_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      std::size_t pos = line.find_first_not_of(" \t");
      if (pos == std::string::npos) continue;
      if (line[pos] == '%') continue;
      return true;
    }
    return false;
  };
  if (!next_data_line()) throw ParseError(path + ": missing size header");
  std::uint64_t rows = 0, cols = 0, nnz = 0;
  {
    std::stringstream ss(line);
    if (!(ss >> rows >> cols >> nnz))
      throw detail::parse_error(path, lineno, "bad size header");
    std::string rest;
    if (ss >> rest) throw detail::parse_error(path, lineno, "bad size header");
  }
  std::vector<std::tuple<std::uint64_t, std::uint64_t, double>> triples;
  triples.reserve(nnz);
  for (std::uint64_t t = 0; t < nnz; ++t) {
    if (!next_data_line())
      throw detail::parse_error(path, lineno, "expected " + std::to_string(nnz) +
                                                  " entries, file ended early");
    std::stringstream ss(line);
    long long i = 0, j = 0;
    std::string vtok;
    if (!(ss >> i >> j >> vtok))
      throw detail::parse_error(path, lineno, "bad coordinate entry");
    std::string rest;
    if (ss >> rest) throw detail::parse_error(path, lineno, "trailing junk");
    if (i < 1 || j < 1 || static_cast<std::uint64_t>(i) > rows ||
        static_cast<std::uint64_t>(j) > cols)
      throw detail::parse_error(path, lineno, "index out of range");
    triples.emplace_back(i - 1, j - 1, detail::parse_double(vtok, path, lineno));
  }
  try {
    return SparseMatrix(rows, cols, std::move(triples));
  } catch (const InvalidData& e) {
    throw ParseError(path + ": " + e.what());
  }
}

inline LoadedMatrix load_matrix(const std::string& path, MatrixFormat format) {
  LoadedMatrix out;
  switch (format) {
    case MatrixFormat::DenseCsv:
      out.dense = load_dense_csv(path);
      break;
    case MatrixFormat::DenseBinary:
      out.dense = load_dense_binary(path);
      break;
    case MatrixFormat::SparseCoordinate:
      out.sparse = load_sparse_coordinate(path);
      break;
  }
  return out;
}

// One row per accepted iteration, preceded by a row for the starting point
// (k = 0, time 0). Numbers are written with %.17g so reading them back is
// lossless.
inline void write_trace_csv(const std::string& path, const Trace& trace) {
  std::ofstream out(path);
  if (!out) throw ParseError(path + ": cannot open file for writing");
  out << "k,objective,seconds,mu,sigma,inner_iters,dx,dy\n";
  char buf[420];
  std::snprintf(buf, sizeof buf, "0,%.17g,0,0,0,0,0,0\n", trace.initial_objective);
  out << buf;
  for (const IterRecord& r : trace.records) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g,%d,%.17g,%.17g\n",
                  r.k, r.objective, r.seconds, r.mu, r.sigma, r.inner_iters, r.dx,
                  r.dy);
    out << buf;
  }
}

// Inverse of write_trace_csv. The stop reason is not stored in the file, so
// the returned trace carries the default one.
inline Trace load_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open file");
  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(in, line) || line != "k,objective,seconds,mu,sigma,inner_iters,dx,dy")
    throw detail::parse_error(path, lineno, "bad trace header");
  Trace trace;
  bool first = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> tok;
    std::size_t start = 0;
    for (;;) {
      const std::size_t comma = line.find(',', start);
      tok.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (tok.size() != 8) throw detail::parse_error(path, lineno, "expected 8 columns");
    IterRecord r;
    try {
      r.k = std::stoul(tok[0]);
      r.inner_iters = std::stoi(tok[5]);
    } catch (const std::exception&) {
      throw detail::parse_error(path, lineno, "bad integer field");
    }
    r.objective = detail::parse_double(tok[1], path, lineno);
    r.seconds = detail::parse_double(tok[2], path, lineno);
    r.mu = detail::parse_double(tok[3], path, lineno);
    r.sigma = detail::parse_double(tok[4], path, lineno);
    r.dx = detail::parse_double(tok[6], path, lineno);
    r.dy = detail::parse_double(tok[7], path, lineno);
    if (first) {
      if (r.k != 0) throw detail::parse_error(path, lineno, "first row must have k = 0");
      trace.initial_objective = r.objective;
      first = false;
    } else {
      trace.records.push_back(r);
    }
  }
  if (first) throw detail::parse_error(path, lineno, "missing starting-point row");
  return trace;
}

}  // namespace naum

#endif
