#include "gcntrack/solver.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <tuple>
#include <utility>

#include "gcntrack/errors.hpp"

namespace gcntrack {

std::string_view to_string(Fidelity fidelity) {
  return fidelity == Fidelity::paper_literal ? "paper-literal" : "exact-minimizer";
}

Fidelity parse_fidelity(std::string_view text) {
  if (text == "exact-minimizer" || text == "exact") return Fidelity::exact_minimizer;
  if (text == "paper-literal" || text == "literal") return Fidelity::paper_literal;
  throw ParameterError("unknown fidelity '" + std::string(text) + "'");
}

void SolverConfig::validate() const {
  if (!(alpha >= 0.0)) throw ParameterError("alpha must be >= 0");
  if (!(beta >= 0.0)) throw ParameterError("beta must be >= 0");
  if (!(min_error >= 0.0)) throw ParameterError("min_error must be >= 0");
  if (max_iter < 1) throw ParameterError("max_iter must be >= 1");
  if (!(ridge >= 0.0)) throw ParameterError("ridge must be >= 0");
}

void Problem::validate() const {
  const Index n = size();
  if (n_prev < 0 || n_curr < 0) throw InputError("negative node count");
  if (features.rows() != n) throw InputError("feature rows differ from node count");
  if (laplacian.rows() != n || laplacian.cols() != n) {
    throw InputError("Laplacian must be n x n");
  }
  if (indicator.size() != n_prev) throw InputError("indicator must have n_prev entries");
  for (Index i = 0; i < indicator.size(); ++i) {
    if (indicator(i) != 0.0 && indicator(i) != 1.0) {
      throw InputError("indicator entries must be 0 or 1");
    }
  }
}

Matrix propagate(const PropagationOperator& op, const FeatureMatrix& features) {
  return op.apply(features);
}

Problem make_problem(const SpatioTemporalGraph& graph, const FeatureMatrix& features,
                     const Vector& indicator, const PropagationOperator& op) {
  Problem problem;
  problem.n_prev = graph.n_prev;
  problem.n_curr = graph.n_curr;
  problem.features = propagate(op, features);
  problem.laplacian = combinatorial_laplacian(graph);
  problem.indicator = indicator;
  problem.validate();
  return problem;
}

SolverState initial_state(const Problem& problem) {
  SolverState state;
  state.weights = Vector::Zero(problem.dims());
  state.bias = 0.0;
  state.labels = Vector::Zero(problem.size());
  state.labels.head(problem.n_prev) = problem.indicator;
  return state;
}

namespace {

void check_state(const Problem& problem, const SolverState& state) {
  if (state.weights.size() != problem.dims() || state.labels.size() != problem.size()) {
    throw InputError("solver state does not match problem dimensions");
  }
}

Vector prediction(const Problem& problem, const SolverState& state) {
  Vector p = problem.features * state.weights;
  p.array() += state.bias;
  return p;
}

// Solves the y-subproblem for one problem; keeps factorizations that do not
// depend on W and b so that repeated calls inside `solve` reuse them.
class LabelUpdater {
 public:
  LabelUpdater(const Problem& problem, const SolverConfig& config)
      : problem_(problem), config_(config) {}

  Vector operator()(const Vector& p) {
    return config_.fidelity == Fidelity::exact_minimizer ? exact(p) : literal(p);
  }

 private:
  // Minimizes ||p - y||^2 + alpha y^T L y + beta ||y_prev - f||^2 over y >= 0,
  // i.e. the linear complementarity problem
  //   H y - c >= 0, y >= 0, y^T (H y - c) = 0,
  // with H = Lambda + alpha L and c = p + beta (f, 0). H is a nonsingular
  // M-matrix, so growing the free set by every index with negative gradient
  // and re-solving on it increases y monotonically and stops at the exact
  // solution after at most n rounds.
  Vector exact(const Vector& p) {
    const Index n = problem_.size();
    const Index np = problem_.n_prev;
    if (hessian_.size() == 0) {
      hessian_ = config_.alpha * problem_.laplacian;
      hessian_.diagonal().head(np).array() += 1.0 + config_.beta;
      hessian_.diagonal().tail(n - np).array() += 1.0;
    }
    Vector c = p;
    c.head(np) += config_.beta * problem_.indicator;

    std::vector<char> free(n, 0);
    Vector y = Vector::Zero(n);
    Vector gradient = -c;
    for (Index round = 0; round <= n; ++round) {
      bool grew = false;
      for (Index i = 0; i < n; ++i) {
        if (!free[i] && gradient(i) < 0.0) {
          free[i] = 1;
          grew = true;
        }
      }
      if (!grew) break;
      std::vector<Index> idx;
      for (Index i = 0; i < n; ++i) {
        if (free[i]) idx.push_back(i);
      }
      y.setZero();
      if (static_cast<Index>(idx.size()) == n) {
        y = full_factor().solve(c);
      } else {
        const auto sub = static_cast<Index>(idx.size());
        Matrix h(sub, sub);
        Vector rhs(sub);
        for (Index a = 0; a < sub; ++a) {
          rhs(a) = c(idx[a]);
          for (Index b = 0; b < sub; ++b) h(a, b) = hessian_(idx[a], idx[b]);
        }
        Eigen::LLT<Matrix> llt(h);
        if (llt.info() != Eigen::Success) {
          throw NumericalError("label system factorization failed");
        }
        const Vector ys = llt.solve(rhs);
        for (Index a = 0; a < sub; ++a) y(idx[a]) = ys(a);
      }
      gradient = hessian_ * y - c;
    }
    return y.cwiseMax(0.0);
  }

  // q = Gamma (p + beta f) keeps only frame t-1 entries, q_hat = max(q, 0),
  // y = (I + alpha L)^{-1} q_hat.
  Vector literal(const Vector& p) {
    const Index n = problem_.size();
    const Index np = problem_.n_prev;
    Vector q = Vector::Zero(n);
    q.head(np) = (p.head(np) + config_.beta * problem_.indicator).cwiseMax(0.0);
    if (!literal_llt_) {
      Matrix system = config_.alpha * problem_.laplacian;
      system.diagonal().array() += 1.0;
      literal_llt_.emplace(system);
      if (literal_llt_->info() != Eigen::Success) {
        throw NumericalError("(I + alpha L) factorization failed");
      }
    }
    return literal_llt_->solve(q).cwiseMax(0.0);
  }

  const Eigen::LLT<Matrix>& full_factor() {
    if (!full_llt_) {
      full_llt_.emplace(hessian_);
      if (full_llt_->info() != Eigen::Success) {
        throw NumericalError("label system factorization failed");
      }
    }
    return *full_llt_;
  }

  const Problem& problem_;
  const SolverConfig& config_;
  Matrix hessian_;
  std::optional<Eigen::LLT<Matrix>> full_llt_;
  std::optional<Eigen::LLT<Matrix>> literal_llt_;
};

}  // namespace

double loss(const Problem& problem, const SolverState& state, const SolverConfig& config) {
  check_state(problem, state);
  const Vector& y = state.labels;
  const double data = (prediction(problem, state) - y).squaredNorm();
  const double smooth = config.alpha * y.dot(problem.laplacian * y);
  const double fit =
      config.beta * (y.head(problem.n_prev) - problem.indicator).squaredNorm();
  return data + smooth + fit;
}

namespace {

// Cholesky of a W normal matrix. Without ridge a numerically singular matrix
// is an error; with ridge the matrix is positive definite by construction.
Eigen::LLT<Matrix> factor_normal(const Matrix& normal, double ridge) {
  Eigen::LLT<Matrix> llt(normal);
  constexpr double kMinRcond = 1e3 * std::numeric_limits<double>::epsilon();
  if (normal.rows() > 0 &&
      (llt.info() != Eigen::Success || (ridge == 0.0 && llt.rcond() < kMinRcond))) {
    throw NumericalError("singular normal matrix in W-update; use a positive ridge");
  }
  return llt;
}

// Joint minimizer of ||S W + 1 b - y||^2 (+ ridge |W|^2) over (W, b). With
// centered features the intercept decouples: W solves the centered normal
// equations and b = mean(y) - mean(S) W.
class AffineFit {
 public:
  AffineFit(const Problem& problem, double ridge) {
    const Index n = problem.size();
    mean_ = n > 0 ? Vector(problem.features.colwise().mean().transpose())
                  : Vector::Zero(problem.dims());
    centered_ = problem.features.rowwise() - mean_.transpose();
    Matrix normal = centered_.transpose() * centered_;
    normal.diagonal().array() += ridge;
    llt_ = factor_normal(normal, ridge);
  }

  std::pair<Vector, double> operator()(const Vector& y) const {
    if (y.size() == 0) return {Vector::Zero(mean_.size()), 0.0};
    const Vector w = mean_.size() > 0 ? Vector(llt_.solve(centered_.transpose() * y))
                                      : Vector();
    return {w, y.mean() - mean_.dot(w)};
  }

 private:
  Vector mean_;
  Matrix centered_;
  Eigen::LLT<Matrix> llt_;
};

}  // namespace

Vector update_w(const Problem& problem, const SolverState& state, double ridge) {
  check_state(problem, state);
  if (ridge < 0.0) throw ParameterError("ridge must be >= 0");
  const Index d = problem.dims();
  Matrix normal = problem.features.transpose() * problem.features;
  normal.diagonal().array() += ridge;
  Vector target = state.labels;
  target.array() -= state.bias;
  const Vector rhs = problem.features.transpose() * target;

  const Eigen::LLT<Matrix> llt = factor_normal(normal, ridge);
  return d > 0 ? Vector(llt.solve(rhs)) : Vector();
}

double update_b(const Problem& problem, const SolverState& state) {
  check_state(problem, state);
  if (problem.size() == 0) return 0.0;
  return (state.labels - problem.features * state.weights).mean();
}

Vector update_y(const Problem& problem, const SolverState& state,
                const SolverConfig& config) {
  check_state(problem, state);
  config.validate();
  LabelUpdater updater(problem, config);
  return updater(prediction(problem, state));
}

SolverState solve(const Problem& problem, const SolverConfig& config) {
  problem.validate();
  config.validate();
  SolverState state = initial_state(problem);
  LabelUpdater updater(problem, config);
  std::optional<AffineFit> fit;
  if (config.fidelity == Fidelity::exact_minimizer) fit.emplace(problem, config.ridge);
  double previous = loss(problem, state, config);
  for (int k = 1; k <= config.max_iter; ++k) {
    if (fit) {
      std::tie(state.weights, state.bias) = (*fit)(state.labels);
    } else {
      state.weights = update_w(problem, state, config.ridge);
      state.bias = update_b(problem, state);
    }
    state.labels = updater(prediction(problem, state));
    const double current = loss(problem, state, config);
    state.loss_trace.push_back(current);
    state.iterations = k;
    const double change = std::abs(previous - current);
    const double relative =
        previous > 0.0 ? change / previous
                       : (change == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
    if (relative < config.min_error) {
      state.converged = true;
      break;
    }
    previous = current;
  }
  return state;
}

void write_problem(std::ostream& out, const Problem& problem) {
  problem.validate();
  char buffer[32];
  auto put = [&](double v, bool first) {
    std::snprintf(buffer, sizeof buffer, "%.17g", v);
    if (!first) out << ' ';
    out << buffer;
  };
  out << "gcntrack-problem 1\n";
  out << problem.n_prev << ' ' << problem.n_curr << ' ' << problem.dims() << '\n';
  out << "S\n";
  for (Index i = 0; i < problem.size(); ++i) {
    for (Index j = 0; j < problem.dims(); ++j) put(problem.features(i, j), j == 0);
    out << '\n';
  }
  out << "L\n";
  for (Index i = 0; i < problem.size(); ++i) {
    for (Index j = 0; j < problem.size(); ++j) put(problem.laplacian(i, j), j == 0);
    out << '\n';
  }
  out << "f\n";
  for (Index i = 0; i < problem.n_prev; ++i) put(problem.indicator(i), i == 0);
  out << '\n';
}

Problem read_problem(std::istream& in) {
  auto expect = [&](const std::string& word) {
    std::string token;
    if (!(in >> token) || token != word) {
      throw FormatError("problem file: expected '" + word + "'");
    }
  };
  auto number = [&]() {
    double v = 0.0;
    if (!(in >> v)) throw FormatError("problem file: truncated or non-numeric value");
    return v;
  };
  expect("gcntrack-problem");
  expect("1");
  long long np = 0, nc = 0, d = 0;
  if (!(in >> np >> nc >> d) || np < 0 || nc < 0 || d < 0) {
    throw FormatError("problem file: bad dimension line");
  }
  Problem problem;
  problem.n_prev = np;
  problem.n_curr = nc;
  const Index n = np + nc;
  problem.features.resize(n, d);
  problem.laplacian.resize(n, n);
  problem.indicator.resize(np);
  expect("S");
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j) problem.features(i, j) = number();
  expect("L");
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) problem.laplacian(i, j) = number();
  expect("f");
  for (Index i = 0; i < np; ++i) problem.indicator(i) = number();
  try {
    problem.validate();
  } catch (const InputError& e) {
    throw FormatError(std::string("problem file: ") + e.what());
  }
  return problem;
}

}  // namespace gcntrack
