#include "gcntrack/graph.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <string>

#include "gcntrack/errors.hpp"

namespace gcntrack {

std::string_view to_string(PropagationMode mode) {
  switch (mode) {
    case PropagationMode::mixed: return "mixed";
    case PropagationMode::smoothing_only: return "only-smoothing";
    case PropagationMode::identity: return "none";
  }
  return "mixed";
}

PropagationMode parse_propagation_mode(std::string_view text) {
  if (text == "mixed") return PropagationMode::mixed;
  if (text == "only-smoothing" || text == "smoothing-only" || text == "smoothing_only") {
    return PropagationMode::smoothing_only;
  }
  if (text == "none" || text == "identity") return PropagationMode::identity;
  throw ParameterError("unknown propagation mode '" + std::string(text) + "'");
}

std::string_view to_string(SpatialTopology topology) {
  return topology == SpatialTopology::full ? "full" : "touching";
}

SpatialTopology parse_spatial_topology(std::string_view text) {
  if (text == "touching") return SpatialTopology::touching;
  if (text == "full") return SpatialTopology::full;
  throw ParameterError("unknown spatial topology '" + std::string(text) + "'");
}

double spatial_edge_weight(const Eigen::Ref<const Eigen::RowVectorXd>& xi,
                           const Eigen::Ref<const Eigen::RowVectorXd>& xj, double sigma) {
  if (xi.size() != xj.size()) throw InputError("feature vectors differ in dimension");
  if (!(sigma > 0.0)) throw ParameterError("sigma must be positive");
  return std::exp(-(xi - xj).norm() / sigma);
}

Matrix build_spatial_adjacency(const FeatureMatrix& features,
                               std::span<const NodePair> neighbors, double sigma) {
  if (!(sigma > 0.0)) throw ParameterError("sigma must be positive");
  const Index n = features.rows();
  Matrix adjacency = Matrix::Zero(n, n);
  for (const auto& [i, j] : neighbors) {
    if (i == j) throw InputError("self pair in neighbor set");
    if (i < 0 || j < 0 || i >= n || j >= n) throw InputError("neighbor index out of range");
    const double w = spatial_edge_weight(features.row(i), features.row(j), sigma);
    adjacency(i, j) = w;
    adjacency(j, i) = w;
  }
  return adjacency;
}

Matrix build_full_spatial_adjacency(const FeatureMatrix& features, double sigma) {
  if (!(sigma > 0.0)) throw ParameterError("sigma must be positive");
  const Index n = features.rows();
  Matrix adjacency = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      const double w = spatial_edge_weight(features.row(i), features.row(j), sigma);
      adjacency(i, j) = w;
      adjacency(j, i) = w;
    }
  }
  return adjacency;
}

namespace {

bool is_symmetric(const Matrix& m) {
  return m.size() == 0 || (m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-12;
}

}  // namespace

SpatioTemporalGraph assemble(const Matrix& spatial_prev, const Matrix& spatial_curr,
                             const Matrix& temporal) {
  const Index np = spatial_prev.rows();
  const Index nc = spatial_curr.rows();
  if (spatial_prev.cols() != np || spatial_curr.cols() != nc) {
    throw InputError("spatial blocks must be square");
  }
  if (temporal.rows() != np || temporal.cols() != nc) {
    throw InputError("temporal block must be n_prev x n_curr");
  }
  if (!is_symmetric(spatial_prev) || !is_symmetric(spatial_curr)) {
    throw InputError("spatial blocks must be symmetric");
  }
  if (np > 0 && nc > 0 && temporal.minCoeff() < 0.0) {
    throw InputError("negative temporal weight");
  }
  SpatioTemporalGraph graph;
  graph.n_prev = np;
  graph.n_curr = nc;
  graph.adjacency.resize(np + nc, np + nc);
  graph.adjacency.topLeftCorner(np, np) = spatial_prev;
  graph.adjacency.topRightCorner(np, nc) = temporal;
  graph.adjacency.bottomLeftCorner(nc, np) = temporal.transpose();
  graph.adjacency.bottomRightCorner(nc, nc) = spatial_curr;
  return graph;
}

Vector degrees(const Matrix& adjacency) { return adjacency.rowwise().sum(); }

Matrix degree_matrix(const SpatioTemporalGraph& graph) {
  return degrees(graph.adjacency).asDiagonal();
}

Matrix repair_isolated_nodes(const Matrix& adjacency) {
  Matrix repaired = adjacency;
  const Vector deg = degrees(adjacency);
  for (Index i = 0; i < deg.size(); ++i) {
    if (deg(i) <= 0.0) repaired(i, i) += kIsolatedNodeSelfLoop;
  }
  return repaired;
}

Matrix normalized_adjacency(const Matrix& adjacency) {
  const Vector deg = degrees(adjacency);
  Vector inv_sqrt(deg.size());
  for (Index i = 0; i < deg.size(); ++i) {
    if (!(deg(i) > 0.0)) {
      throw NumericalError("node " + std::to_string(i) + " has zero degree");
    }
    inv_sqrt(i) = 1.0 / std::sqrt(deg(i));
  }
  Matrix normalized = inv_sqrt.asDiagonal() * adjacency * inv_sqrt.asDiagonal();
  return (0.5 * (normalized + normalized.transpose())).eval();
}

Matrix smoothing_operator(const Matrix& normalized, double lambda1) {
  const Index n = normalized.rows();
  return Matrix::Identity(n, n) - lambda1 * (Matrix::Identity(n, n) - normalized);
}

Matrix sharpening_operator(const Matrix& normalized, double lambda2) {
  const Index n = normalized.rows();
  return Matrix::Identity(n, n) + lambda2 * (Matrix::Identity(n, n) - normalized);
}

Matrix PropagationOperator::matrix() const { return smoothing * sharpening; }

Matrix PropagationOperator::apply(const Matrix& features) const {
  if (features.rows() != order()) {
    throw InputError("operator order differs from feature row count");
  }
  switch (mode) {
    case PropagationMode::identity: return features;
    case PropagationMode::smoothing_only: return smoothing * features;
    case PropagationMode::mixed: break;
  }
  const Matrix sharpened = sharpening * features;
  return smoothing * sharpened;
}

PropagationOperator propagation_operator(const SpatioTemporalGraph& graph,
                                         PropagationMode mode, double lambda1,
                                         double lambda2) {
  if (lambda1 < 0.0 || lambda2 < 0.0) throw ParameterError("lambda must be non-negative");
  const Index n = graph.size();
  PropagationOperator op;
  op.mode = mode;
  op.lambda1 = lambda1;
  op.lambda2 = lambda2;
  if (mode == PropagationMode::identity) {
    op.smoothing = Matrix::Identity(n, n);
    op.sharpening = Matrix::Identity(n, n);
    return op;
  }
  const Matrix normalized = normalized_adjacency(repair_isolated_nodes(graph.adjacency));
  op.smoothing = smoothing_operator(normalized, lambda1);
  op.sharpening = mode == PropagationMode::mixed ? sharpening_operator(normalized, lambda2)
                                                 : Matrix::Identity(n, n);
  return op;
}

Matrix combinatorial_laplacian(const SpatioTemporalGraph& graph) {
  Matrix laplacian = -graph.adjacency;
  laplacian.diagonal() += degrees(graph.adjacency);
  return laplacian;
}

void write_matrix_text(const std::filesystem::path& path, const Matrix& matrix) {
  std::unique_ptr<std::FILE, int (*)(std::FILE*)> file(std::fopen(path.c_str(), "w"),
                                                       &std::fclose);
  if (!file) throw InputError("cannot open " + path.string() + " for writing");
  for (Index i = 0; i < matrix.rows(); ++i) {
    for (Index j = 0; j < matrix.cols(); ++j) {
      std::fprintf(file.get(), j == 0 ? "%.12g" : " %.12g", matrix(i, j));
    }
    std::fputc('\n', file.get());
  }
}

}  // namespace gcntrack
