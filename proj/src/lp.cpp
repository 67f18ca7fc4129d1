#include "mgtrade/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace mgtrade::lp {

void Problem::add(std::initializer_list<std::pair<int, double>> terms, Sense sense, double rhs) {
  Row r;
  r.coeffs.assign(static_cast<std::size_t>(num_vars), 0.0);
  for (const auto& [idx, v] : terms) r.coeffs.at(static_cast<std::size_t>(idx)) += v;
  r.sense = sense;
  r.rhs = rhs;
  rows.push_back(std::move(r));
}

void Problem::add_dense(std::vector<double> coeffs, Sense sense, double rhs) {
  if (coeffs.size() != static_cast<std::size_t>(num_vars)) {
    throw std::invalid_argument("lp row width mismatch");
  }
  rows.push_back({std::move(coeffs), sense, rhs});
}

namespace {

constexpr double kPivotTol = 1e-9;

// Tableau layout: rows 0..m-1 constraints, columns 0..n-1 variables, column n rhs.
class Tableau {
 public:
  Tableau(int m, int n) : m_(m), n_(n), data_(static_cast<std::size_t>(m) * (n + 1), 0.0) {}

  double& at(int r, int c) { return data_[static_cast<std::size_t>(r) * (n_ + 1) + c]; }
  double at(int r, int c) const { return data_[static_cast<std::size_t>(r) * (n_ + 1) + c]; }
  double& rhs(int r) { return at(r, n_); }

  void pivot(int pr, int pc) {
    const double pv = at(pr, pc);
    for (int c = 0; c <= n_; ++c) at(pr, c) /= pv;
    for (int r = 0; r < m_; ++r) {
      if (r == pr) continue;
      const double f = at(r, pc);
      if (f == 0.0) continue;
      for (int c = 0; c <= n_; ++c) at(r, c) -= f * at(pr, c);
    }
  }

  int rows() const { return m_; }
  int cols() const { return n_; }

 private:
  int m_;
  int n_;
  std::vector<double> data_;
};

// Runs the simplex on `cost` (length n) with the given basis. Returns false if
// unbounded. `allowed` masks columns that may enter.
bool run_simplex(Tableau& t, std::vector<int>& basis, const std::vector<double>& cost,
                 const std::vector<char>& allowed) {
  const int m = t.rows();
  const int n = t.cols();
  std::vector<double> reduced(static_cast<std::size_t>(n));
  for (int iter = 0; iter < 50000; ++iter) {
    // reduced cost d_j = c_j - c_B^T column_j
    int enter = -1;
    for (int j = 0; j < n; ++j) {
      if (!allowed[static_cast<std::size_t>(j)]) continue;
      double d = cost[static_cast<std::size_t>(j)];
      for (int r = 0; r < m; ++r) d -= cost[static_cast<std::size_t>(basis[static_cast<std::size_t>(r)])] * t.at(r, j);
      if (d < -kPivotTol) {
        enter = j;  // Bland: lowest index
        break;
      }
    }
    if (enter < 0) return true;
    int leave = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int r = 0; r < m; ++r) {
      const double a = t.at(r, enter);
      if (a > kPivotTol) {
        const double ratio = t.rhs(r) / a;
        if (ratio < best - 1e-12 ||
            (std::abs(ratio - best) <= 1e-12 && leave >= 0 &&
             basis[static_cast<std::size_t>(r)] < basis[static_cast<std::size_t>(leave)])) {
          best = ratio;
          leave = r;
        }
      }
    }
    if (leave < 0) return false;
    t.pivot(leave, enter);
    basis[static_cast<std::size_t>(leave)] = enter;
  }
  throw std::runtime_error("simplex iteration limit reached");
}

}  // namespace

Result solve_lp(const Problem& p) {
  const int n = p.num_vars;
  const int m = static_cast<int>(p.rows.size());
  if (static_cast<int>(p.objective.size()) != n) throw std::invalid_argument("lp objective width");

  // Normalize to rhs >= 0, then add one slack per inequality and one artificial per row
  // that lacks a ready basic column.
  std::vector<Row> rows = p.rows;
  for (auto& r : rows) {
    if (r.rhs < 0.0) {
      for (double& c : r.coeffs) c = -c;
      r.rhs = -r.rhs;
      if (r.sense == Sense::LessEq) r.sense = Sense::GreaterEq;
      else if (r.sense == Sense::GreaterEq) r.sense = Sense::LessEq;
    }
  }
  int num_slack = 0;
  int num_art = 0;
  for (const auto& r : rows) {
    if (r.sense != Sense::Equal) ++num_slack;
    if (r.sense != Sense::LessEq) ++num_art;
  }
  const int total = n + num_slack + num_art;
  Tableau t(m, total);
  std::vector<int> basis(static_cast<std::size_t>(m), -1);
  int slack_col = n;
  int art_col = n + num_slack;
  for (int i = 0; i < m; ++i) {
    const Row& r = rows[static_cast<std::size_t>(i)];
    for (int j = 0; j < n; ++j) t.at(i, j) = r.coeffs[static_cast<std::size_t>(j)];
    t.rhs(i) = r.rhs;
    if (r.sense == Sense::LessEq) {
      t.at(i, slack_col) = 1.0;
      basis[static_cast<std::size_t>(i)] = slack_col++;
    } else if (r.sense == Sense::GreaterEq) {
      t.at(i, slack_col++) = -1.0;
      t.at(i, art_col) = 1.0;
      basis[static_cast<std::size_t>(i)] = art_col++;
    } else {
      t.at(i, art_col) = 1.0;
      basis[static_cast<std::size_t>(i)] = art_col++;
    }
  }

  std::vector<char> allowed(static_cast<std::size_t>(total), 1);
  Result res;
  if (num_art > 0) {
    std::vector<double> phase1(static_cast<std::size_t>(total), 0.0);
    for (int j = n + num_slack; j < total; ++j) phase1[static_cast<std::size_t>(j)] = 1.0;
    run_simplex(t, basis, phase1, allowed);
    double infeas = 0.0;
    for (int i = 0; i < m; ++i) {
      if (basis[static_cast<std::size_t>(i)] >= n + num_slack) infeas += t.rhs(i);
    }
    if (infeas > 1e-7) {
      res.status = Status::Infeasible;
      return res;
    }
    // Drive remaining zero-level artificials out of the basis where possible.
    for (int i = 0; i < m; ++i) {
      if (basis[static_cast<std::size_t>(i)] < n + num_slack) continue;
      for (int j = 0; j < n + num_slack; ++j) {
        if (std::abs(t.at(i, j)) > kPivotTol) {
          t.pivot(i, j);
          basis[static_cast<std::size_t>(i)] = j;
          break;
        }
      }
    }
    for (int j = n + num_slack; j < total; ++j) allowed[static_cast<std::size_t>(j)] = 0;
  }

  std::vector<double> cost(static_cast<std::size_t>(total), 0.0);
  std::copy(p.objective.begin(), p.objective.end(), cost.begin());
  if (!run_simplex(t, basis, cost, allowed)) {
    res.status = Status::Unbounded;
    return res;
  }
  res.status = Status::Optimal;
  res.x.assign(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < m; ++i) {
    const int b = basis[static_cast<std::size_t>(i)];
    if (b < n) res.x[static_cast<std::size_t>(b)] = t.rhs(i);
  }
  res.objective = 0.0;
  for (int j = 0; j < n; ++j) res.objective += p.objective[static_cast<std::size_t>(j)] * res.x[static_cast<std::size_t>(j)];
  return res;
}

namespace {

// Solves the k x k system M y = r in place with partial pivoting. Returns false
// when singular.
bool solve_square(std::vector<double>& mat, std::vector<double>& r, int k) {
  for (int col = 0; col < k; ++col) {
    int piv = col;
    for (int row = col + 1; row < k; ++row) {
      if (std::abs(mat[static_cast<std::size_t>(row * k + col)]) >
          std::abs(mat[static_cast<std::size_t>(piv * k + col)])) {
        piv = row;
      }
    }
    if (std::abs(mat[static_cast<std::size_t>(piv * k + col)]) < 1e-12) return false;
    if (piv != col) {
      for (int c = 0; c < k; ++c) {
        std::swap(mat[static_cast<std::size_t>(piv * k + c)], mat[static_cast<std::size_t>(col * k + c)]);
      }
      std::swap(r[static_cast<std::size_t>(piv)], r[static_cast<std::size_t>(col)]);
    }
    for (int row = 0; row < k; ++row) {
      if (row == col) continue;
      const double f = mat[static_cast<std::size_t>(row * k + col)] / mat[static_cast<std::size_t>(col * k + col)];
      if (f == 0.0) continue;
      for (int c = col; c < k; ++c) {
        mat[static_cast<std::size_t>(row * k + c)] -= f * mat[static_cast<std::size_t>(col * k + c)];
      }
      r[static_cast<std::size_t>(row)] -= f * r[static_cast<std::size_t>(col)];
    }
  }
  for (int i = 0; i < k; ++i) r[static_cast<std::size_t>(i)] /= mat[static_cast<std::size_t>(i * k + i)];
  return true;
}

bool better(double obj, const std::vector<double>& x, double best_obj,
            const std::vector<double>& best_x, double tie_tol) {
  const double scale = std::max({1.0, std::abs(obj), std::abs(best_obj)});
  if (obj < best_obj - tie_tol * scale) return true;
  if (obj > best_obj + tie_tol * scale) return false;
  const double s1 = std::accumulate(x.begin(), x.end(), 0.0);
  const double s2 = std::accumulate(best_x.begin(), best_x.end(), 0.0);
  if (s1 < s2 - 1e-12) return true;
  if (s1 > s2 + 1e-12) return false;
  return x < best_x;
}

}  // namespace

VertexResult minimize_by_vertices(std::span<const double> c, std::span<const HalfSpace> rows,
                                  double feas_tol, double tie_tol) {
  const int k = static_cast<int>(c.size());
  const int m = static_cast<int>(rows.size());
  VertexResult best;
  if (k == 0) {
    best.feasible = std::all_of(rows.begin(), rows.end(),
                                [&](const HalfSpace& h) { return 0.0 <= h.b + feas_tol; });
    return best;
  }
  std::vector<int> pick(static_cast<std::size_t>(k));
  std::iota(pick.begin(), pick.end(), 0);
  std::vector<double> mat(static_cast<std::size_t>(k * k));
  std::vector<double> rhs(static_cast<std::size_t>(k));
  if (m < k) return best;
  while (true) {
    for (int i = 0; i < k; ++i) {
      const HalfSpace& h = rows[static_cast<std::size_t>(pick[static_cast<std::size_t>(i)])];
      for (int j = 0; j < k; ++j) mat[static_cast<std::size_t>(i * k + j)] = h.a[static_cast<std::size_t>(j)];
      rhs[static_cast<std::size_t>(i)] = h.b;
    }
    if (solve_square(mat, rhs, k)) {
      bool ok = true;
      for (const HalfSpace& h : rows) {
        double lhs = 0.0;
        for (int j = 0; j < k; ++j) lhs += h.a[static_cast<std::size_t>(j)] * rhs[static_cast<std::size_t>(j)];
        if (lhs > h.b + feas_tol * std::max(1.0, std::abs(h.b))) {
          ok = false;
          break;
        }
      }
      if (ok) {
        double obj = 0.0;
        for (int j = 0; j < k; ++j) obj += c[static_cast<std::size_t>(j)] * rhs[static_cast<std::size_t>(j)];
        if (!best.feasible || better(obj, rhs, best.objective, best.x, tie_tol)) {
          best.feasible = true;
          best.objective = obj;
          best.x = rhs;
        }
      }
    }
    // next combination
    int i = k - 1;
    while (i >= 0 && pick[static_cast<std::size_t>(i)] == m - k + i) --i;
    if (i < 0) break;
    ++pick[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < k; ++j) pick[static_cast<std::size_t>(j)] = pick[static_cast<std::size_t>(j - 1)] + 1;
  }
  return best;
}

}  // namespace mgtrade::lp
