#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "vtlab/core.hpp"

namespace vtlab {

inline constexpr double kPi = 3.14159265358979323846264338327950288;

// --- tridiagonal quadratic -------------------------------------------------

namespace detail {

// Thomas algorithm for the constant tridiagonal system (a on the diagonal,
// b off-diagonal), used once to pin down the quadratic's exact minimum.
inline Vec solve_tridiag_const(int d, double diag, double off, const Vec& rhs) {
  Vec c(static_cast<std::size_t>(d), 0.0);
  Vec x(static_cast<std::size_t>(d), 0.0);
  double beta = diag;
  x[0] = rhs[0] / beta;
  for (int i = 1; i < d; ++i) {
    c[static_cast<std::size_t>(i - 1)] = off / beta;
    beta = diag - off * c[static_cast<std::size_t>(i - 1)];
    x[static_cast<std::size_t>(i)] =
        (rhs[static_cast<std::size_t>(i)] -
         off * x[static_cast<std::size_t>(i - 1)]) /
        beta;
  }
  for (int i = d - 2; i >= 0; --i) {
    x[static_cast<std::size_t>(i)] -=
        c[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(i + 1)];
  }
  return x;
}

}  // namespace detail

// f(x) = 1/2 x'Ax - b'x with A = 1/4 tridiag(-1, 2, -1) and b = 1/4 e1 * (-1).
// The smoothness constant is the exact top eigenvalue of the tridiagonal
// Toeplitz matrix, and the minimum comes from one exact tridiagonal solve.
inline ProblemSpec quadratic_problem(int d) {
  if (d < 2) throw ConfigError("quadratic problem needs dimension >= 2");

  const double diag = 0.5;
  const double off = -0.25;

  auto apply_a = [d, diag, off](const Vec& x, Vec& out) {
    for (int i = 0; i < d; ++i) {
      double v = diag * x[static_cast<std::size_t>(i)];
      if (i > 0) v += off * x[static_cast<std::size_t>(i - 1)];
      if (i + 1 < d) v += off * x[static_cast<std::size_t>(i + 1)];
      out[static_cast<std::size_t>(i)] = v;
    }
  };

  Vec b(static_cast<std::size_t>(d), 0.0);
  b[0] = -0.25;

  ProblemSpec p;
  p.dim = d;
  p.value = [d, apply_a, b](const Vec& x) {
    Vec ax(static_cast<std::size_t>(d));
    apply_a(x, ax);
    return 0.5 * dot(x, ax) - dot(b, x);
  };
  p.grad_into = [d, apply_a, b](const Vec& x, Vec& g) {
    apply_a(x, g);
    for (int i = 0; i < d; ++i)
      g[static_cast<std::size_t>(i)] -= b[static_cast<std::size_t>(i)];
  };

  // lambda_max of 1/4 tridiag(-1,2,-1) = sin^2(d pi / (2(d+1))).
  const double s = std::sin(static_cast<double>(d) * kPi /
                            (2.0 * (static_cast<double>(d) + 1.0)));
  p.smoothness = s * s;

  const Vec x_star = detail::solve_tridiag_const(d, diag, off, b);
  p.f_star = -0.5 * dot(b, x_star);
  return p;
}

// --- datasets ---------------------------------------------------------------

struct Dataset {
  Matrix features;          // one sample per row
  std::vector<double> labels;  // values in {0, 1}

  std::size_t size() const { return labels.size(); }
};

// Text formats: CSV rows "label,f1,f2,..." or sparse rows "label i:v i:v ..."
// with 1-based feature indices. Lines starting with '#' are skipped.
inline Dataset parse_dataset(std::istream& in) {
  std::vector<std::vector<double>> dense_rows;
  std::vector<std::vector<std::pair<int, double>>> sparse_rows;
  std::vector<double> labels;
  int max_feature = 0;
  bool sparse = false;
  bool first_row = true;

  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (first_row) {
      sparse = line.find(':') != std::string::npos;
      first_row = false;
    }
    std::istringstream ls(line);
    if (sparse) {
      double label;
      if (!(ls >> label)) throw ConfigError("dataset: bad label in line: " + line);
      labels.push_back(label);
      std::vector<std::pair<int, double>> row;
      std::string tok;
      while (ls >> tok) {
        const auto colon = tok.find(':');
        if (colon == std::string::npos)
          throw ConfigError("dataset: expected idx:val, got: " + tok);
        const int idx = std::stoi(tok.substr(0, colon));
        const double val = std::stod(tok.substr(colon + 1));
        if (idx < 1) throw ConfigError("dataset: feature indices are 1-based");
        max_feature = std::max(max_feature, idx);
        row.emplace_back(idx - 1, val);
      }
      sparse_rows.push_back(std::move(row));
    } else {
      std::vector<double> row;
      std::string cell;
      while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
      if (row.empty()) throw ConfigError("dataset: empty row");
      labels.push_back(row.front());
      row.erase(row.begin());
      max_feature = std::max(max_feature, static_cast<int>(row.size()));
      dense_rows.push_back(std::move(row));
    }
  }
  if (labels.empty()) throw ConfigError("dataset: no samples");
  for (double y : labels) {
    if (y != 0.0 && y != 1.0)
      throw ConfigError("dataset: labels must be 0 or 1");
  }

  Dataset ds;
  ds.labels = std::move(labels);
  ds.features = Matrix(ds.labels.size(), static_cast<std::size_t>(max_feature));
  if (sparse) {
    for (std::size_t r = 0; r < sparse_rows.size(); ++r)
      for (auto& [c, v] : sparse_rows[r])
        ds.features.at(r, static_cast<std::size_t>(c)) = v;
  } else {
    for (std::size_t r = 0; r < dense_rows.size(); ++r)
      for (std::size_t c = 0; c < dense_rows[r].size(); ++c)
        ds.features.at(r, c) = dense_rows[r][c];
  }
  return ds;
}

inline Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open dataset file: " + path);
  return parse_dataset(in);
}

inline void write_dataset_csv(const Dataset& ds, std::ostream& out) {
  char buf[64];
  for (std::size_t r = 0; r < ds.size(); ++r) {
    std::snprintf(buf, sizeof(buf), "%.17g", ds.labels[r]);
    out << buf;
    for (std::size_t c = 0; c < ds.features.cols; ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", ds.features.at(r, c));
      out << ',' << buf;
    }
    out << '\n';
  }
}

// --- logistic regression ----------------------------------------------------

namespace detail {

// log(1 + e^z) without overflow.
inline double log1pexp(double z) {
  if (z > 0.0) return z + std::log1p(std::exp(-z));
  return std::log1p(std::exp(z));
}

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

inline double logreg_sample_loss(const Dataset& ds, std::size_t i,
                                 const Vec& w) {
  const double z = std::inner_product(w.begin(), w.end(), ds.features.row(i), 0.0);
  return log1pexp(z) - ds.labels[i] * z;
}

inline void logreg_sample_grad_acc(const Dataset& ds, std::size_t i,
                                   const Vec& w, double weight, Vec& acc) {
  const double z = std::inner_product(w.begin(), w.end(), ds.features.row(i), 0.0);
  const double coef = weight * (sigmoid(z) - ds.labels[i]);
  const double* row = ds.features.row(i);
  for (std::size_t c = 0; c < acc.size(); ++c) acc[c] += coef * row[c];
}

}  // namespace detail

// Regularized binary logistic loss over a dataset, analytic gradient.
// Smoothness uses the standard bound L <= lambda_max(X'X)/(4m) + reg, with
// the top eigenvalue estimated by a fixed-iteration power method.
inline ProblemSpec logreg_problem(const Dataset& ds, double reg) {
  if (ds.size() == 0) throw ConfigError("logreg: empty dataset");
  if (reg < 0.0) throw ConfigError("logreg: regularization must be >= 0");
  const std::size_t m = ds.size();
  const std::size_t d = ds.features.cols;

  ProblemSpec p;
  p.dim = static_cast<int>(d);
  p.value = [ds, reg, m](const Vec& w) {
    double loss = 0.0;
    for (std::size_t i = 0; i < m; ++i)
      loss += detail::logreg_sample_loss(ds, i, w);
    return loss / static_cast<double>(m) + 0.5 * reg * norm_sq(w);
  };
  p.grad_into = [ds, reg, m](const Vec& w, Vec& g) {
    std::fill(g.begin(), g.end(), 0.0);
    for (std::size_t i = 0; i < m; ++i)
      detail::logreg_sample_grad_acc(ds, i, w, 1.0 / static_cast<double>(m), g);
    axpy(reg, w, g);
  };

  // Power iteration on X'X with a deterministic start.
  Vec v(d, 1.0 / std::sqrt(static_cast<double>(d)));
  double lam = 0.0;
  for (int it = 0; it < 100; ++it) {
    Vec xv(m, 0.0);
    for (std::size_t i = 0; i < m; ++i)
      xv[i] = std::inner_product(v.begin(), v.end(), ds.features.row(i), 0.0);
    Vec xtxv(d, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      const double* row = ds.features.row(i);
      for (std::size_t c = 0; c < d; ++c) xtxv[c] += xv[i] * row[c];
    }
    lam = norm(xtxv);
    if (lam == 0.0) break;
    for (std::size_t c = 0; c < d; ++c) v[c] = xtxv[c] / lam;
  }
  p.smoothness = lam / (4.0 * static_cast<double>(m)) + reg;
  return p;
}

}  // namespace vtlab
