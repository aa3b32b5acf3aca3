#pragma once

// Linearized graph-convolution label model and its alternating closed-form
// optimizer.
//
// The objective over the weight vector W, bias b and label vector y is
//
//   ||S W + 1 b - y||^2 + alpha y^T L y + beta ||y_prev - f||^2,   y >= 0,
//
// where S is the propagated feature matrix, L the combinatorial Laplacian of
// the two-frame graph, f the target indicator over the previous frame's nodes
// and y_prev the first n_prev entries of y.

#include <iosfwd>
#include <string_view>
#include <vector>

#include "gcntrack/graph.hpp"

namespace gcntrack {

/// How the y-subproblem is solved.
enum class Fidelity {
  /// Exact minimizer of the non-negative y-subproblem (monotone descent).
  exact_minimizer,
  /// Prediction masked to frame t-1 nodes, clamped, then (I + alpha L)^{-1}.
  paper_literal,
};

std::string_view to_string(Fidelity fidelity);
Fidelity parse_fidelity(std::string_view text);

struct SolverConfig {
  double alpha = 0.001;
  double beta = 50.0;
  /// Stop once |loss_k - loss_{k-1}| / loss_{k-1} drops below this.
  double min_error = 1e-4;
  int max_iter = 100;
  /// Tikhonov term added to S^T S in the W-update.
  double ridge = 0.0;
  Fidelity fidelity = Fidelity::exact_minimizer;

  void validate() const;
};

struct Problem {
  Matrix features;   ///< S, n x d
  Matrix laplacian;  ///< L, n x n
  Vector indicator;  ///< f, n_prev entries in {0,1}
  Index n_prev = 0;
  Index n_curr = 0;

  Index size() const { return n_prev + n_curr; }
  Index dims() const { return features.cols(); }
  void validate() const;
};

struct SolverState {
  Vector weights;  ///< W, d entries
  double bias = 0.0;
  Vector labels;   ///< y, n entries
  /// Loss after each completed iteration.
  std::vector<double> loss_trace;
  int iterations = 0;
  bool converged = false;
};

/// operator * features.
Matrix propagate(const PropagationOperator& op, const FeatureMatrix& features);

/// Problem for a graph, raw features and previous-frame indicator.
Problem make_problem(const SpatioTemporalGraph& graph, const FeatureMatrix& features,
                     const Vector& indicator, const PropagationOperator& op);

/// W = 0, b = 0, y = (f, 0).
SolverState initial_state(const Problem& problem);

double loss(const Problem& problem, const SolverState& state, const SolverConfig& config);

/// Least-squares W for fixed b and y: (S^T S + ridge I)^{-1} S^T (y - 1 b).
/// Throws NumericalError when the normal matrix is singular.
Vector update_w(const Problem& problem, const SolverState& state, double ridge);

/// Mean of y - S W.
double update_b(const Problem& problem, const SolverState& state);

/// Label vector for fixed W and b; always non-negative.
Vector update_y(const Problem& problem, const SolverState& state,
                const SolverConfig& config);

/// Alternates a (W, b) step and update_y until the relative loss change drops
/// below config.min_error or config.max_iter iterations have run. In
/// exact-minimizer mode the (W, b) step is the joint least-squares fit; in
/// paper-literal mode it is update_w followed by update_b.
SolverState solve(const Problem& problem, const SolverConfig& config);

/// Plain-text problem format: a header line "gcntrack-problem 1", a line
/// "n_prev n_curr d", then blocks "S", "L" and "f" holding row-major values
/// printed with %.17g.
void write_problem(std::ostream& out, const Problem& problem);
Problem read_problem(std::istream& in);

}  // namespace gcntrack
