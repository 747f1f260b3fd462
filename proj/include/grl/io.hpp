#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "grl/common.hpp"
#include "grl/potts.hpp"
#include "grl/sampling.hpp"

namespace grl {

// Flat binary container: magic "GRL1", u32 n (columns), row-major f64
// payload. Square matrices carry n*n values; sample sets carry p*n values
// with p recovered from the file size.

inline void write_matrix_binary(const std::string& path,
                                const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols())
    throw InvalidInputError("write_matrix_binary: matrix must be square");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInputError("write_matrix_binary: cannot open " + path);
  out.write("GRL1", 4);
  const std::uint32_t n = static_cast<std::uint32_t>(m.cols());
  out.write(reinterpret_cast<const char*>(&n), 4);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const double v = m(i, j);
      out.write(reinterpret_cast<const char*>(&v), 8);
    }
}

inline Eigen::MatrixXd read_matrix_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInputError("read_matrix_binary: cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (std::string(magic, 4) != "GRL1")
    throw InvalidInputError("read_matrix_binary: bad magic");
  std::uint32_t n = 0;
  in.read(reinterpret_cast<char*>(&n), 4);
  Eigen::MatrixXd m(n, n);
  for (std::uint32_t i = 0; i < n; ++i)
    for (std::uint32_t j = 0; j < n; ++j) {
      double v;
      in.read(reinterpret_cast<char*>(&v), 8);
      m(i, j) = v;
    }
  if (!in) throw InvalidInputError("read_matrix_binary: truncated file");
  return m;
}

inline void write_samples_binary(const std::string& path, const SampleSet& s) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInputError("write_samples_binary: cannot open " + path);
  out.write("GRL1", 4);
  const std::uint32_t n = static_cast<std::uint32_t>(s.n);
  out.write(reinterpret_cast<const char*>(&n), 4);
  for (int k = 0; k < s.p; ++k)
    for (int i = 0; i < s.n; ++i) {
      const double v = s.data(k, i);
      out.write(reinterpret_cast<const char*>(&v), 8);
    }
}

inline SampleSet read_samples_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInputError("read_samples_binary: cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (std::string(magic, 4) != "GRL1")
    throw InvalidInputError("read_samples_binary: bad magic");
  std::uint32_t n = 0;
  in.read(reinterpret_cast<char*>(&n), 4);
  const auto bytes = std::filesystem::file_size(path);
  const std::uint64_t payload = bytes - 8;
  if (n == 0 || payload % (8ull * n) != 0)
    throw InvalidInputError("read_samples_binary: size mismatch");
  const int p = static_cast<int>(payload / (8ull * n));
  SampleSet s;
  s.n = static_cast<int>(n);
  s.p = p;
  s.alpha = static_cast<double>(p) / n;
  s.data.resize(p, n);
  for (int k = 0; k < p; ++k)
    for (std::uint32_t i = 0; i < n; ++i) {
      double v;
      in.read(reinterpret_cast<char*>(&v), 8);
      s.data(k, i) = v;
    }
  return s;
}

// All floats in text output use 17 significant decimal digits so that CSV
// round-trips are exact.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

inline void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m) {
  std::ofstream out(path);
  if (!out) throw InvalidInputError("write_matrix_csv: cannot open " + path);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
}

inline void write_potts_samples_csv(const std::string& path,
                                    const PottsSampleSet& s) {
  std::ofstream out(path);
  if (!out)
    throw InvalidInputError("write_potts_samples_csv: cannot open " + path);
  for (const auto& x : s.configs) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (i) out << ',';
      out << x[i];
    }
    out << '\n';
  }
}

// PottsParams as a structured text document: sites, states, edge list,
// then every dense block.
inline void write_potts_params(const std::string& path, const PottsParams& p) {
  std::ofstream out(path);
  if (!out) throw InvalidInputError("write_potts_params: cannot open " + path);
  out << "potts v1\n";
  out << "sites " << p.n << "\nstates " << p.q << "\n";
  out << "edges " << p.edges.size() << "\n";
  for (const auto& [i, j] : p.edges) out << i << ' ' << j << '\n';
  out << "fields\n";
  for (int i = 0; i < p.n; ++i) {
    for (int a = 0; a < p.q; ++a) {
      if (a) out << ' ';
      out << format_double(p.h(i, a));
    }
    out << '\n';
  }
  out << "blocks\n";
  for (int i = 0; i < p.n; ++i)
    for (int j = i + 1; j < p.n; ++j) {
      out << "pair " << i << ' ' << j << '\n';
      const Eigen::MatrixXd& b = p.blocks[p.pair_index(i, j)];
      for (int a = 0; a < p.q; ++a) {
        for (int c = 0; c < p.q; ++c) {
          if (c) out << ' ';
          out << format_double(b(a, c));
        }
        out << '\n';
      }
    }
}

inline PottsParams read_potts_params(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInputError("read_potts_params: cannot open " + path);
  std::string tag, version;
  in >> tag >> version;
  if (tag != "potts" || version != "v1")
    throw InvalidInputError("read_potts_params: bad header");
  int n = 0, q = 0;
  std::size_t num_edges = 0;
  in >> tag >> n >> tag >> q >> tag >> num_edges;
  PottsParams p(n, q);
  for (std::size_t e = 0; e < num_edges; ++e) {
    int i, j;
    in >> i >> j;
    p.edges.emplace_back(i, j);
  }
  in >> tag;  // fields
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < q; ++a) in >> p.h(i, a);
  in >> tag;  // blocks
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      int pi, pj;
      in >> tag >> pi >> pj;
      Eigen::MatrixXd& b = p.blocks[p.pair_index(i, j)];
      for (int a = 0; a < q; ++a)
        for (int c = 0; c < q; ++c) in >> b(a, c);
    }
  if (!in) throw InvalidInputError("read_potts_params: truncated file");
  return p;
}

}  // namespace grl
