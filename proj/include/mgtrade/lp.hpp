#pragma once

// Small dense linear-programming solvers.
//
// solve_lp is a two-phase tableau simplex (Bland's rule) for a few hundred
// variables; enough for the clairvoyant full-horizon program. minimize_by_vertices
// enumerates the vertices of a bounded polytope in at most four variables and
// is what the per-slot controller uses.

#include <span>
#include <vector>

namespace mgtrade::lp {

enum class Sense { LessEq, GreaterEq, Equal };

struct Row {
  std::vector<double> coeffs;
  Sense sense = Sense::LessEq;
  double rhs = 0.0;
};

/// minimize objective . x  subject to rows, x >= 0.
struct Problem {
  int num_vars = 0;
  std::vector<double> objective;
  std::vector<Row> rows;

  /// Appends a row; coeffs are given sparsely as (index, value) pairs.
  void add(std::initializer_list<std::pair<int, double>> terms, Sense sense, double rhs);
  void add_dense(std::vector<double> coeffs, Sense sense, double rhs);
};

enum class Status { Optimal, Infeasible, Unbounded };

struct Result {
  Status status = Status::Infeasible;
  double objective = 0.0;
  std::vector<double> x;
};

Result solve_lp(const Problem& problem);

/// One half-space a . x <= b in the vertex solver.
struct HalfSpace {
  std::vector<double> a;
  double b = 0.0;
};

struct VertexResult {
  bool feasible = false;
  double objective = 0.0;
  std::vector<double> x;
};

/// Minimizes c . x over the polytope {x : a_k . x <= b_k}. The polytope must be
/// bounded (callers add explicit box rows). Ties within `tie_tol` (relative to
/// the objective scale) go to the vertex with the smallest coordinate sum,
/// then the lexicographically smallest one.
VertexResult minimize_by_vertices(std::span<const double> c, std::span<const HalfSpace> rows,
                                  double feas_tol = 1e-9, double tie_tol = 1e-12);

}  // namespace mgtrade::lp
