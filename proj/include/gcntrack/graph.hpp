#pragma once

// Spatio-temporal superpixel graph over two consecutive frames and the
// Laplacian smoothing / sharpening operators built on it.

#include <Eigen/Dense>

#include <compare>
#include <filesystem>
#include <span>
#include <string_view>

namespace gcntrack {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Superpixel descriptors, one row per node (n x d).
using FeatureMatrix = Eigen::MatrixXd;

/// Self-loop weight given to nodes without any edge before normalization.
inline constexpr double kIsolatedNodeSelfLoop = 1e-6;

struct NodePair {
  int first = 0;
  int second = 0;
  auto operator<=>(const NodePair&) const = default;
};

/// Which superpixel pairs inside one frame receive an edge.
enum class SpatialTopology {
  touching,  ///< pairs whose pixel regions are 8-adjacent
  full,      ///< every pair
};

enum class PropagationMode {
  mixed,           ///< smoothing after sharpening
  smoothing_only,  ///< one Laplacian smoothing layer
  identity,        ///< raw features
};

std::string_view to_string(PropagationMode mode);
/// Accepts "mixed", "only-smoothing"/"smoothing-only", "none"/"identity".
PropagationMode parse_propagation_mode(std::string_view text);
std::string_view to_string(SpatialTopology topology);
SpatialTopology parse_spatial_topology(std::string_view text);

/// exp(-||xi - xj||_2 / sigma).
double spatial_edge_weight(const Eigen::Ref<const Eigen::RowVectorXd>& xi,
                           const Eigen::Ref<const Eigen::RowVectorXd>& xj,
                           double sigma);

Matrix build_spatial_adjacency(const FeatureMatrix& features,
                               std::span<const NodePair> neighbors, double sigma);
Matrix build_full_spatial_adjacency(const FeatureMatrix& features, double sigma);

/// Block adjacency [[A_prev, B], [B^T, A_curr]].
struct SpatioTemporalGraph {
  Index n_prev = 0;
  Index n_curr = 0;
  Matrix adjacency;

  Index size() const { return n_prev + n_curr; }
};

SpatioTemporalGraph assemble(const Matrix& spatial_prev, const Matrix& spatial_curr,
                             const Matrix& temporal);

/// Row sums of the adjacency, without repair.
Vector degrees(const Matrix& adjacency);
Matrix degree_matrix(const SpatioTemporalGraph& graph);

/// Adds a kIsolatedNodeSelfLoop self-loop on every zero-degree node.
Matrix repair_isolated_nodes(const Matrix& adjacency);

/// D^{-1/2} A D^{-1/2}. Throws NumericalError if some degree is zero.
Matrix normalized_adjacency(const Matrix& adjacency);

/// I - lambda1 (I - N) for a normalized adjacency N.
Matrix smoothing_operator(const Matrix& normalized, double lambda1);
/// I + lambda2 (I - N) for a normalized adjacency N.
Matrix sharpening_operator(const Matrix& normalized, double lambda2);

/// Feature propagation operator. The mixed operator is the product
/// smoothing * sharpening; it is kept factored so that applying it to an
/// n x d feature matrix costs O(n^2 d).
struct PropagationOperator {
  PropagationMode mode = PropagationMode::mixed;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  Matrix smoothing;   ///< identity in identity mode
  Matrix sharpening;  ///< identity unless mode is mixed

  Index order() const { return smoothing.rows(); }
  /// The dense operator matrix.
  Matrix matrix() const;
  /// matrix() * features, evaluated right to left.
  Matrix apply(const Matrix& features) const;
};

/// Builds the operator after repairing zero-degree nodes.
PropagationOperator propagation_operator(const SpatioTemporalGraph& graph,
                                         PropagationMode mode, double lambda1,
                                         double lambda2);

/// L_S = D - A.
Matrix combinatorial_laplacian(const SpatioTemporalGraph& graph);

/// Writes a matrix as row-major, space separated "%.12g" text.
void write_matrix_text(const std::filesystem::path& path, const Matrix& matrix);

}  // namespace gcntrack
