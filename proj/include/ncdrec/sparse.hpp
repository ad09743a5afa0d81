#pragma once

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "errors.hpp"

namespace ncdrec {

using Index = std::ptrdiff_t;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, Index>;
using Triplet = Eigen::Triplet<double, Index>;

/// Builds a compressed row-major matrix. Duplicate coordinates are summed and
/// explicit zeros are dropped.
inline SparseMatrix make_sparse(Index rows, Index cols, const std::vector<Triplet>& entries) {
  SparseMatrix out(rows, cols);
  out.setFromTriplets(entries.begin(), entries.end());
  out.prune(0.0, 0.0);
  out.makeCompressed();
  return out;
}

/// Row sums of a sparse matrix.
inline Vector row_sums(const SparseMatrix& a) {
  Vector s = Vector::Zero(a.rows());
  for (Index r = 0; r < a.outerSize(); ++r)
    for (SparseMatrix::InnerIterator it(a, r); it; ++it) s[r] += it.value();
  return s;
}

/// diag(s)^-1 * a for rows with nonzero sum; zero rows are left untouched.
inline SparseMatrix row_normalized(const SparseMatrix& a) {
  SparseMatrix out = a;
  for (Index r = 0; r < out.outerSize(); ++r) {
    double s = 0.0;
    for (SparseMatrix::InnerIterator it(out, r); it; ++it) s += it.value();
    if (s == 0.0) continue;
    for (SparseMatrix::InnerIterator it(out, r); it; ++it) it.valueRef() /= s;
  }
  return out;
}

/// Writes "row col value" lines (0-based) preceded by a "# rows cols nnz" header.
inline void write_coordinate(const std::string& path, const SparseMatrix& a) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::data, "cannot write " + path);
  out << "# " << a.rows() << ' ' << a.cols() << ' ' << a.nonZeros() << '\n';
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (Index r = 0; r < a.outerSize(); ++r)
    for (SparseMatrix::InnerIterator it(a, r); it; ++it)
      out << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
}

inline SparseMatrix read_coordinate(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::data, "cannot read " + path);
  char hash = 0;
  Index rows = 0, cols = 0, nnz = 0;
  if (!(in >> hash >> rows >> cols >> nnz) || hash != '#')
    throw ParseError(path, 1, "missing coordinate header");
  std::vector<Triplet> entries;
  entries.reserve(static_cast<std::size_t>(nnz));
  Index r = 0, c = 0;
  double v = 0.0;
  while (in >> r >> c >> v) entries.emplace_back(r, c, v);
  if (static_cast<Index>(entries.size()) != nnz) throw ParseError(path, 0, "entry count does not match header");
  return make_sparse(rows, cols, entries);
}

/// Dense matrix container: magic, rows, cols, then column-major doubles.
inline void write_dense(std::ostream& out, const Matrix& a) {
  const std::int64_t dims[2] = {a.rows(), a.cols()};
  out.write(reinterpret_cast<const char*>(dims), sizeof dims);
  out.write(reinterpret_cast<const char*>(a.data()), static_cast<std::streamsize>(sizeof(double) * a.size()));
}

inline Matrix read_dense(std::istream& in) {
  std::int64_t dims[2] = {0, 0};
  in.read(reinterpret_cast<char*>(dims), sizeof dims);
  if (!in || dims[0] < 0 || dims[1] < 0) throw Error(ErrorKind::data, "truncated dense matrix");
  Matrix a(dims[0], dims[1]);
  in.read(reinterpret_cast<char*>(a.data()), static_cast<std::streamsize>(sizeof(double) * a.size()));
  if (!in) throw Error(ErrorKind::data, "truncated dense matrix");
  return a;
}

}  // namespace ncdrec
