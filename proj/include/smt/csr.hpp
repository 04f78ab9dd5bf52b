#ifndef SMT_CSR_HPP
#define SMT_CSR_HPP

#include <algorithm>
#include <bit>
#include <cctype>
#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "smt/dense.hpp"
#include "smt/errors.hpp"

namespace smt {

struct Triplet {
  std::size_t row = 0;
  std::size_t col = 0;
  double value = 0.0;
};

// The (row, col) set of a sparse matrix, without values. Stored in canonical
// CSR order so equality and subset tests are linear scans.
struct SparsityPattern {
  std::size_t n_rows = 0;
  std::size_t n_cols = 0;
  std::vector<std::uint64_t> row_ptr{0};
  std::vector<std::uint64_t> col_idx;

  bool operator==(const SparsityPattern&) const = default;

  // True when every (row, col) of *this also appears in other.
  bool is_subset_of(const SparsityPattern& other) const {
    if (n_rows != other.n_rows || n_cols != other.n_cols) return false;
    for (std::size_t i = 0; i < n_rows; ++i) {
      std::size_t a = row_ptr[i], b = other.row_ptr[i];
      const std::size_t a_end = row_ptr[i + 1], b_end = other.row_ptr[i + 1];
      while (a < a_end) {
        while (b < b_end && other.col_idx[b] < col_idx[a]) ++b;
        if (b == b_end || other.col_idx[b] != col_idx[a]) return false;
        ++a;
        ++b;
      }
    }
    return true;
  }
};

// Immutable compressed-sparse-row matrix with canonical storage: rows in
// order, columns strictly increasing within a row, no stored zeros.
class CsrMatrix {
 public:
  CsrMatrix() = default;
  CsrMatrix(std::size_t n_rows, std::size_t n_cols)
      : n_rows_(n_rows), n_cols_(n_cols), row_ptr_(n_rows + 1, 0) {}

  static CsrMatrix from_triplets(std::vector<Triplet> triplets,
                                 std::size_t n_rows, std::size_t n_cols) {
    for (const Triplet& t : triplets) {
      if (t.row >= n_rows || t.col >= n_cols) {
        throw IndexOutOfRange("triplet (" + std::to_string(t.row) + ", " +
                              std::to_string(t.col) + ") outside " +
                              std::to_string(n_rows) + "x" +
                              std::to_string(n_cols) + " matrix");
      }
    }
    std::sort(triplets.begin(), triplets.end(),
              [](const Triplet& a, const Triplet& b) {
                return a.row != b.row ? a.row < b.row : a.col < b.col;
              });
    CsrMatrix m(n_rows, n_cols);
    m.col_idx_.reserve(triplets.size());
    m.values_.reserve(triplets.size());
    for (std::size_t k = 0; k < triplets.size(); ++k) {
      const Triplet& t = triplets[k];
      if (k > 0 && t.row == triplets[k - 1].row && t.col == triplets[k - 1].col) {
        throw DuplicateEntry("duplicate entry at (" + std::to_string(t.row) +
                             ", " + std::to_string(t.col) + ")");
      }
      if (t.value == 0.0) continue;
      m.col_idx_.push_back(t.col);
      m.values_.push_back(t.value);
      m.row_ptr_[t.row + 1] += 1;
    }
    for (std::size_t i = 0; i < n_rows; ++i) m.row_ptr_[i + 1] += m.row_ptr_[i];
    return m;
  }

  // Builds a matrix from already-canonical parts (rows in order, columns
  // strictly increasing). Unlike from_triplets, stored values are kept as-is,
  // including exact zeros; used for value transforms that must preserve the
  // observation pattern (e.g. label standardization).
  static CsrMatrix from_parts(std::size_t n_rows, std::size_t n_cols,
                              std::vector<std::uint64_t> row_ptr,
                              std::vector<std::uint64_t> col_idx,
                              std::vector<double> values) {
    if (row_ptr.size() != n_rows + 1 || row_ptr.front() != 0 ||
        row_ptr.back() != col_idx.size() || col_idx.size() != values.size())
      throw ShapeMismatch("from_parts: inconsistent CSR arrays");
    for (std::size_t i = 0; i < n_rows; ++i) {
      if (row_ptr[i] > row_ptr[i + 1]) throw ShapeMismatch("from_parts: decreasing row_ptr");
      for (std::size_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
        if (col_idx[k] >= n_cols) throw IndexOutOfRange("from_parts: column index out of range");
        if (k > row_ptr[i] && col_idx[k] <= col_idx[k - 1])
          throw ShapeMismatch("from_parts: columns not strictly increasing");
      }
    }
    CsrMatrix m;
    m.n_rows_ = n_rows;
    m.n_cols_ = n_cols;
    m.row_ptr_ = std::move(row_ptr);
    m.col_idx_ = std::move(col_idx);
    m.values_ = std::move(values);
    return m;
  }

  std::size_t n_rows() const { return n_rows_; }
  std::size_t n_cols() const { return n_cols_; }
  std::size_t nnz() const { return values_.size(); }

  std::span<const std::uint64_t> row_ptr() const { return row_ptr_; }
  std::span<const std::uint64_t> col_idx() const { return col_idx_; }
  std::span<const double> values() const { return values_; }

  std::size_t row_begin(std::size_t i) const { return row_ptr_[i]; }
  std::size_t row_end(std::size_t i) const { return row_ptr_[i + 1]; }

  bool operator==(const CsrMatrix&) const = default;

  SparsityPattern pattern() const {
    return SparsityPattern{n_rows_, n_cols_, row_ptr_, col_idx_};
  }

  // New matrix whose r-th row is row rows[r] of *this (a gather, so the same
  // source row may appear more than once).
  CsrMatrix select_rows(std::span<const std::size_t> rows) const {
    CsrMatrix out(rows.size(), n_cols_);
    std::size_t total = 0;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r] >= n_rows_) throw IndexOutOfRange("select_rows: row index out of range");
      total += row_end(rows[r]) - row_begin(rows[r]);
    }
    out.col_idx_.reserve(total);
    out.values_.reserve(total);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const std::size_t i = rows[r];
      for (std::size_t k = row_begin(i); k < row_end(i); ++k) {
        out.col_idx_.push_back(col_idx_[k]);
        out.values_.push_back(values_[k]);
      }
      out.row_ptr_[r + 1] = out.col_idx_.size();
    }
    return out;
  }

  // Optional value lookup; O(log nnz(row)).
  const double* find(std::size_t row, std::size_t col) const {
    const auto first = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_begin(row));
    const auto last = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_end(row));
    const auto it = std::lower_bound(first, last, col);
    if (it == last || *it != col) return nullptr;
    return &values_[static_cast<std::size_t>(it - col_idx_.begin())];
  }

 private:
  std::size_t n_rows_ = 0;
  std::size_t n_cols_ = 0;
  std::vector<std::uint64_t> row_ptr_{0};
  std::vector<std::uint64_t> col_idx_;
  std::vector<double> values_;
};

// result[i, k] = sum_j x[i, j] * w[j, k]; accumulation runs over the stored
// entries of row i in ascending column order.
inline Matrix spmm_dense(const CsrMatrix& x, const Matrix& w) {
  if (x.n_cols() != w.rows()) {
    throw ShapeMismatch("spmm_dense: x has " + std::to_string(x.n_cols()) +
                        " columns but w has " + std::to_string(w.rows()) + " rows");
  }
  Matrix out(x.n_rows(), w.cols());
  for (std::size_t i = 0; i < x.n_rows(); ++i) {
    for (std::size_t k = x.row_begin(i); k < x.row_end(i); ++k) {
      const std::size_t j = x.col_idx()[k];
      const double v = x.values()[k];
      for (std::size_t c = 0; c < w.cols(); ++c) out(i, c) += v * w(j, c);
    }
  }
  return out;
}

// result = x^T * g; accumulation runs row-major over x.
inline Matrix spmm_transpose_dense(const CsrMatrix& x, const Matrix& g) {
  if (x.n_rows() != g.rows()) {
    throw ShapeMismatch("spmm_transpose_dense: x has " + std::to_string(x.n_rows()) +
                        " rows but g has " + std::to_string(g.rows()) + " rows");
  }
  Matrix out(x.n_cols(), g.cols());
  for (std::size_t i = 0; i < x.n_rows(); ++i) {
    for (std::size_t k = x.row_begin(i); k < x.row_end(i); ++k) {
      const std::size_t j = x.col_idx()[k];
      const double v = x.values()[k];
      for (std::size_t c = 0; c < g.cols(); ++c) out(j, c) += v * g(i, c);
    }
  }
  return out;
}

inline Matrix densify(const CsrMatrix& x) {
  Matrix out(x.n_rows(), x.n_cols());
  for (std::size_t i = 0; i < x.n_rows(); ++i)
    for (std::size_t k = x.row_begin(i); k < x.row_end(i); ++k)
      out(i, x.col_idx()[k]) = x.values()[k];
  return out;
}

// ---------------------------------------------------------------------------
// Matrix Market coordinate format (real/integer field, general symmetry).

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& tok, const std::string& where) {
  const char* s = tok.c_str();
  char* end = nullptr;
  const double v = std::strtod(s, &end);
  if (end == s || *end != '\0') throw ParseError(where + ": bad numeric value '" + tok + "'");
  return v;
}

inline std::size_t parse_index(const std::string& tok, const std::string& where) {
  const char* s = tok.c_str();
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s, &end, 10);
  if (end == s || *end != '\0' || tok.find('-') != std::string::npos)
    throw ParseError(where + ": bad index '" + tok + "'");
  return static_cast<std::size_t>(v);
}

inline std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace detail

inline CsrMatrix read_matrix_market(std::istream& in, const std::string& name) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(name + ": empty file");
  std::istringstream banner(line);
  std::string tag, object, format, field, symmetry;
  banner >> tag >> object >> format >> field >> symmetry;
  if (detail::lower(tag) != "%%matrixmarket" || detail::lower(object) != "matrix")
    throw ParseError(name + ": not a Matrix Market file");
  if (detail::lower(format) != "coordinate")
    throw ParseError(name + ": only coordinate format is supported");
  const std::string f = detail::lower(field);
  if (f != "real" && f != "integer")
    throw ParseError(name + ": unsupported field '" + field + "'");
  if (detail::lower(symmetry) != "general")
    throw ParseError(name + ": only general symmetry is supported");

  // Comment lines, then the size line.
  std::size_t n_rows = 0, n_cols = 0, nnz = 0;
  bool have_size = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] == '%') continue;
    bool blank = true;
    for (char ch : line)
      if (!std::isspace(static_cast<unsigned char>(ch))) blank = false;
    if (blank) continue;
    std::istringstream ss(line);
    std::string a, b, c, extra;
    if (!(ss >> a >> b >> c) || (ss >> extra))
      throw ParseError(name + ": malformed size line '" + line + "'");
    n_rows = detail::parse_index(a, name);
    n_cols = detail::parse_index(b, name);
    nnz = detail::parse_index(c, name);
    have_size = true;
    break;
  }
  if (!have_size) throw ParseError(name + ": missing size line");

  std::vector<Triplet> triplets;
  triplets.reserve(nnz);
  std::size_t seen = 0;
  while (seen < nnz) {
    if (!std::getline(in, line)) throw ParseError(name + ": expected " + std::to_string(nnz) +
                                                  " entries, found " + std::to_string(seen));
    if (line.empty() || line[0] == '%') continue;
    std::istringstream ss(line);
    std::string a, b, c, extra;
    if (!(ss >> a >> b >> c) || (ss >> extra))
      throw ParseError(name + ": malformed entry '" + line + "'");
    const std::size_t i = detail::parse_index(a, name);
    const std::size_t j = detail::parse_index(b, name);
    if (i == 0 || j == 0) throw ParseError(name + ": entries are 1-indexed, got '" + line + "'");
    triplets.push_back({i - 1, j - 1, detail::parse_double(c, name)});
    ++seen;
  }
  while (std::getline(in, line)) {
    for (char ch : line)
      if (!std::isspace(static_cast<unsigned char>(ch)))
        throw ParseError(name + ": trailing content '" + line + "'");
  }
  return CsrMatrix::from_triplets(std::move(triplets), n_rows, n_cols);
}

inline CsrMatrix read_matrix_market(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path + ": cannot open for reading");
  return read_matrix_market(in, path);
}

inline void write_matrix_market(const CsrMatrix& m, std::ostream& out) {
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << m.n_rows() << " " << m.n_cols() << " " << m.nnz() << "\n";
  for (std::size_t i = 0; i < m.n_rows(); ++i)
    for (std::size_t k = m.row_begin(i); k < m.row_end(i); ++k)
      out << i + 1 << " " << m.col_idx()[k] + 1 << " "
          << detail::format_double(m.values()[k]) << "\n";
}

inline void write_matrix_market(const CsrMatrix& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError(path + ": cannot open for writing");
  write_matrix_market(m, out);
  out.flush();
  if (!out) throw IoError(path + ": write failed");
}

// ---------------------------------------------------------------------------
// SCSR binary container: magic "SCSR", version u32, n_rows u64, n_cols u64,
// nnz u64, then row_ptr u64[n_rows+1], col_idx u64[nnz], values f64[nnz].
// All fields little-endian.

namespace detail {

inline void put_u32_le(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 4);
}

inline void put_u64_le(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

inline void put_f64_le(std::ostream& out, double v) {
  put_u64_le(out, std::bit_cast<std::uint64_t>(v));
}

inline std::uint32_t get_u32_le(std::istream& in, const std::string& where) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw FormatError(where + ": truncated file");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

inline std::uint64_t get_u64_le(std::istream& in, const std::string& where) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw FormatError(where + ": truncated file");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

inline double get_f64_le(std::istream& in, const std::string& where) {
  return std::bit_cast<double>(get_u64_le(in, where));
}

}  // namespace detail

inline constexpr std::uint32_t kScsrVersion = 1;

inline void write_scsr(const CsrMatrix& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path + ": cannot open for writing");
  out.write("SCSR", 4);
  detail::put_u32_le(out, kScsrVersion);
  detail::put_u64_le(out, m.n_rows());
  detail::put_u64_le(out, m.n_cols());
  detail::put_u64_le(out, m.nnz());
  for (std::uint64_t v : m.row_ptr()) detail::put_u64_le(out, v);
  for (std::uint64_t v : m.col_idx()) detail::put_u64_le(out, v);
  for (double v : m.values()) detail::put_f64_le(out, v);
  out.flush();
  if (!out) throw IoError(path + ": write failed");
}

inline CsrMatrix read_scsr(std::istream& in, const std::string& name) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "SCSR", 4) != 0)
    throw FormatError(name + ": bad magic, not an SCSR file");
  const std::uint32_t version = detail::get_u32_le(in, name);
  if (version != kScsrVersion)
    throw VersionError(name + ": unsupported SCSR version " + std::to_string(version));
  const std::uint64_t n_rows = detail::get_u64_le(in, name);
  const std::uint64_t n_cols = detail::get_u64_le(in, name);
  const std::uint64_t nnz = detail::get_u64_le(in, name);
  std::vector<Triplet> triplets;
  triplets.reserve(nnz);
  std::vector<std::uint64_t> row_ptr(n_rows + 1);
  for (auto& v : row_ptr) v = detail::get_u64_le(in, name);
  if (row_ptr.front() != 0 || row_ptr.back() != nnz)
    throw FormatError(name + ": inconsistent row pointers");
  for (std::size_t i = 0; i < n_rows; ++i)
    if (row_ptr[i] > row_ptr[i + 1] || row_ptr[i + 1] > nnz)
      throw FormatError(name + ": inconsistent row pointers");
  std::vector<std::uint64_t> col_idx(nnz);
  for (auto& v : col_idx) v = detail::get_u64_le(in, name);
  for (std::size_t i = 0; i < n_rows; ++i)
    for (std::size_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k)
      triplets.push_back({i, col_idx[k], 0.0});
  for (auto& t : triplets) t.value = detail::get_f64_le(in, name);
  return CsrMatrix::from_triplets(std::move(triplets), n_rows, n_cols);
}

inline CsrMatrix read_scsr(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path + ": cannot open for reading");
  return read_scsr(in, path);
}

// Sniffs the on-disk format: SCSR magic selects the binary container,
// anything else is parsed as Matrix Market.
inline CsrMatrix load_matrix(const std::string& path) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw IoError(path + ": cannot open for reading");
  char magic[4] = {0, 0, 0, 0};
  probe.read(magic, 4);
  probe.close();
  if (std::memcmp(magic, "SCSR", 4) == 0) return read_scsr(path);
  return read_matrix_market(path);
}

}  // namespace smt

#endif  // SMT_CSR_HPP
