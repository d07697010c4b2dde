#pragma once

// Gram and scatter geometry of embedding batches: centering, interaction energy,
// rank-r spectral projectors and their Frobenius overlaps.
//
// Everything here is a pure function of its arguments. Matrices are dense Eigen
// types templated on the scalar; `double` is what the rest of the library uses.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "crcgram/errors.hpp"

namespace crcgram {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
using Index = Eigen::Index;

enum class ClassLabel { good, bad };

inline std::string_view to_string(ClassLabel label) { return label == ClassLabel::good ? "good" : "bad"; }

inline std::optional<ClassLabel> parse_class_label(std::string_view text) {
  if (text == "good") return ClassLabel::good;
  if (text == "bad") return ClassLabel::bad;
  return std::nullopt;
}

/// Embeddings of one response queue, one row per response.
template <typename Scalar = double>
struct EmbeddingBatch {
  Matrix<Scalar> rows;
  std::string group_id;
  std::optional<ClassLabel> class_label;
  // Per-row labels for mixed batches as read from disk; empty otherwise.
  std::vector<std::optional<ClassLabel>> row_labels;
  bool l2_normalized = false;

  Index size() const { return rows.rows(); }
  Index dim() const { return rows.cols(); }
};

template <typename Scalar>
bool rows_unit_norm(const Matrix<Scalar>& rows, Scalar tol = Scalar(1e-9)) {
  for (Index i = 0; i < rows.rows(); ++i)
    if (std::abs(rows.row(i).norm() - Scalar(1)) > tol) return false;
  return true;
}

template <typename Scalar>
void validate(const EmbeddingBatch<Scalar>& batch) {
  require(batch.size() >= 1 && batch.dim() >= 1, ErrorCode::dimension_mismatch, "batch must have n >= 1 and d >= 1");
  require(batch.rows.allFinite(), ErrorCode::value_out_of_range, "batch contains non-finite entries");
  require(batch.row_labels.empty() || static_cast<Index>(batch.row_labels.size()) == batch.size(),
          ErrorCode::dimension_mismatch, "row label count does not match row count");
  if (batch.l2_normalized)
    require(rows_unit_norm(batch.rows), ErrorCode::value_out_of_range, "batch flagged l2-normalized has non-unit rows");
}

template <typename Scalar>
EmbeddingBatch<Scalar> make_batch(Matrix<Scalar> rows, std::string group_id = {},
                                  std::optional<ClassLabel> label = std::nullopt) {
  EmbeddingBatch<Scalar> batch;
  batch.rows = std::move(rows);
  batch.group_id = std::move(group_id);
  batch.class_label = label;
  batch.l2_normalized = batch.rows.size() > 0 && rows_unit_norm(batch.rows);
  validate(batch);
  return batch;
}

/// Batch made of the given rows of `batch` (repeats allowed, as in bootstrap draws).
template <typename Scalar>
EmbeddingBatch<Scalar> select_rows(const EmbeddingBatch<Scalar>& batch, std::span<const Index> indices) {
  EmbeddingBatch<Scalar> out;
  out.rows.resize(static_cast<Index>(indices.size()), batch.dim());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    require(indices[k] >= 0 && indices[k] < batch.size(), ErrorCode::index_out_of_range, "row index out of range");
    out.rows.row(static_cast<Index>(k)) = batch.rows.row(indices[k]);
    if (!batch.row_labels.empty()) out.row_labels.push_back(batch.row_labels[static_cast<std::size_t>(indices[k])]);
  }
  out.group_id = batch.group_id;
  out.class_label = batch.class_label;
  out.l2_normalized = batch.l2_normalized;
  return out;
}

template <typename Derived>
Matrix<typename Derived::Scalar> l2_normalize_rows(const Eigen::MatrixBase<Derived>& v) {
  using Scalar = typename Derived::Scalar;
  Matrix<Scalar> out = v;
  for (Index i = 0; i < out.rows(); ++i) {
    const Scalar norm = out.row(i).norm();
    require(norm > Scalar(0), ErrorCode::zero_row, "row " + std::to_string(i) + " has zero norm");
    out.row(i) /= norm;
  }
  return out;
}

/// Z = HV: subtracts the column means.
template <typename Derived>
Matrix<typename Derived::Scalar> center_rows(const Eigen::MatrixBase<Derived>& v) {
  Matrix<typename Derived::Scalar> z = v;
  if (z.rows() > 0) z.rowwise() -= z.colwise().mean();
  return z;
}

/// H = I - (1/n) 1 1^T.
template <typename Scalar>
Matrix<Scalar> centering_matrix(Index n) {
  return Matrix<Scalar>::Identity(n, n) - Matrix<Scalar>::Constant(n, n, Scalar(1) / Scalar(n));
}

template <typename Scalar>
struct GramMatrices {
  Matrix<Scalar> gram;             // G = V V^T
  Matrix<Scalar> centered_gram;    // HGH
  Matrix<Scalar> feature_scatter;  // V^T H V when centered, V^T V otherwise
  bool centered = false;
};

/// Rows after the optional L2 renormalization a pipeline asks for.
template <typename Scalar>
Matrix<Scalar> preprocess_rows(const EmbeddingBatch<Scalar>& batch, bool l2) {
  validate(batch);
  if (l2 && !batch.l2_normalized) return l2_normalize_rows(batch.rows);
  return batch.rows;
}

template <typename Scalar>
GramMatrices<Scalar> build_gram(const EmbeddingBatch<Scalar>& batch, bool center, bool l2) {
  const Matrix<Scalar> v = preprocess_rows(batch, l2);
  const Matrix<Scalar> z = center_rows(v);
  GramMatrices<Scalar> out;
  out.gram = v * v.transpose();
  // n = 1 gives H = 0; the centered row is exactly zero so the product is too.
  out.centered_gram = z * z.transpose();
  out.feature_scatter = center ? Matrix<Scalar>(z.transpose() * z) : Matrix<Scalar>(v.transpose() * v);
  out.centered = center;
  return out;
}

/// Feature-space scatter V^T H V (or V^T V) of already-preprocessed rows.
template <typename Derived>
Matrix<typename Derived::Scalar> feature_scatter(const Eigen::MatrixBase<Derived>& v, bool center) {
  if (!center) return v.transpose() * v;
  const auto z = center_rows(v);
  return z.transpose() * z;
}

// ---------------------------------------------------------------------------
// Interaction energy

/// e(i;G) = ||G_{:,i}||_2. For unit-norm rows 1 <= e <= sqrt(n).
template <typename Derived>
typename Derived::Scalar interaction_energy(const Eigen::MatrixBase<Derived>& gram, Index i) {
  require(gram.rows() == gram.cols(), ErrorCode::dimension_mismatch, "Gram matrix must be square");
  require(i >= 0 && i < gram.cols(), ErrorCode::index_out_of_range,
          "index " + std::to_string(i) + " outside [0, " + std::to_string(gram.cols()) + ")");
  return gram.col(i).norm();
}

/// E(i) = e(i;G) / sqrt(n), in [0,1] for unit-norm rows.
template <typename Derived>
typename Derived::Scalar normalized_energy(const Eigen::MatrixBase<Derived>& gram, Index i) {
  using Scalar = typename Derived::Scalar;
  return interaction_energy(gram, i) / std::sqrt(Scalar(gram.cols()));
}

template <typename Derived>
Vector<typename Derived::Scalar> interaction_energies(const Eigen::MatrixBase<Derived>& gram) {
  require(gram.rows() == gram.cols(), ErrorCode::dimension_mismatch, "Gram matrix must be square");
  return gram.colwise().norm().transpose();
}

template <typename Derived>
Vector<typename Derived::Scalar> normalized_energies(const Eigen::MatrixBase<Derived>& gram) {
  using Scalar = typename Derived::Scalar;
  return interaction_energies(gram) / std::sqrt(Scalar(gram.cols()));
}

/// Normalized energies of every row of a batch, computed on the uncentered Gram of
/// the L2-normalized rows. This is the Q_E policy score fed to the calibrators.
template <typename Scalar>
Vector<Scalar> energy_scores(const EmbeddingBatch<Scalar>& batch) {
  const Matrix<Scalar> v = preprocess_rows(batch, true);
  const Matrix<Scalar> gram = v * v.transpose();
  return normalized_energies(gram).cwiseMin(Scalar(1));
}

// ---------------------------------------------------------------------------
// Spectra and projectors

template <typename Derived>
bool is_symmetric(const Eigen::MatrixBase<Derived>& s, double rel_tol = 1e-8) {
  if (s.rows() != s.cols()) return false;
  const double asym = static_cast<double>((s - s.transpose()).norm());
  return asym <= rel_tol * std::max(1.0, static_cast<double>(s.norm()));
}

template <typename Scalar>
struct DescendingEigen {
  Vector<Scalar> values;   // sorted descending
  Matrix<Scalar> vectors;  // columns match `values`
};

/// Eigendecomposition of (S + S^T)/2 with eigenvalues sorted descending.
template <typename Derived>
DescendingEigen<typename Derived::Scalar> descending_eigen(const Eigen::MatrixBase<Derived>& s) {
  using Scalar = typename Derived::Scalar;
  require(is_symmetric(s), ErrorCode::not_symmetric, "matrix is not symmetric within 1e-8 relative Frobenius");
  const Matrix<Scalar> sym = (s + s.transpose()) / Scalar(2);
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> solver(sym);
  // Ascending from Eigen; reverse.
  DescendingEigen<Scalar> out;
  out.values = solver.eigenvalues().reverse();
  out.vectors = solver.eigenvectors().rowwise().reverse();
  return out;
}

template <typename Derived>
Vector<typename Derived::Scalar> descending_eigenvalues(const Eigen::MatrixBase<Derived>& s) {
  using Scalar = typename Derived::Scalar;
  require(is_symmetric(s), ErrorCode::not_symmetric, "matrix is not symmetric within 1e-8 relative Frobenius");
  const Matrix<Scalar> sym = (s + s.transpose()) / Scalar(2);
  return Eigen::SelfAdjointEigenSolver<Matrix<Scalar>>(sym, Eigen::EigenvaluesOnly).eigenvalues().reverse();
}

/// Orthogonal projector onto a top-r eigenspace plus the eigengap at the cut.
template <typename Scalar = double>
struct RankRProjector {
  Matrix<Scalar> matrix;
  Index rank = 0;
  // lambda_r - lambda_{r+1}; 0 on a tie at the cut, +inf when r equals the dimension.
  Scalar eigengap = 0;

  Index dim() const { return matrix.rows(); }
};

namespace detail {
template <typename Scalar>
Scalar gap_at(const Vector<Scalar>& desc, Index r) {
  if (r >= desc.size()) return std::numeric_limits<Scalar>::infinity();
  const Scalar scale = std::max(Scalar(1), desc.cwiseAbs().maxCoeff());
  const Scalar gap = desc(r - 1) - desc(r);
  return gap <= Scalar(64) * std::numeric_limits<Scalar>::epsilon() * scale ? Scalar(0) : gap;
}
}  // namespace detail

template <typename Derived>
RankRProjector<typename Derived::Scalar> top_r_projector(const Eigen::MatrixBase<Derived>& s, Index r) {
  using Scalar = typename Derived::Scalar;
  require(s.rows() == s.cols(), ErrorCode::not_symmetric, "matrix is not square");
  require(r >= 1 && r <= s.rows(), ErrorCode::rank_too_large,
          "rank " + std::to_string(r) + " not in [1, " + std::to_string(s.rows()) + "]");
  const auto eig = descending_eigen(s);
  const auto basis = eig.vectors.leftCols(r);
  RankRProjector<Scalar> out;
  out.matrix = basis * basis.transpose();
  out.matrix = (out.matrix + out.matrix.transpose()) / Scalar(2);
  out.rank = r;
  out.eigengap = detail::gap_at(eig.values, r);
  return out;
}

/// Smallest j in [1, r_max] maximizing lambda_j - lambda_{j+1} over a descending list.
template <typename Scalar>
Index eigengap_rank(std::span<const Scalar> desc, Index r_max) {
  require(desc.size() >= 2, ErrorCode::too_few_eigenvalues, "need at least two eigenvalues");
  require(r_max >= 1, ErrorCode::rank_too_large, "r_max must be at least 1");
  const Index last = std::min<Index>(r_max, static_cast<Index>(desc.size()) - 1);
  Index best = 1;
  Scalar best_gap = desc[0] - desc[1];
  for (Index j = 2; j <= last; ++j) {
    const Scalar gap = desc[static_cast<std::size_t>(j - 1)] - desc[static_cast<std::size_t>(j)];
    if (gap > best_gap) {
      best_gap = gap;
      best = j;
    }
  }
  return best;
}

template <typename Scalar>
Index eigengap_rank(const Vector<Scalar>& desc, Index r_max) {
  return eigengap_rank(std::span<const Scalar>(desc.data(), static_cast<std::size_t>(desc.size())), r_max);
}

/// <A, B>_F = trace(A^T B).
template <typename DA, typename DB>
typename DA::Scalar frobenius_inner(const Eigen::MatrixBase<DA>& a, const Eigen::MatrixBase<DB>& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), ErrorCode::dimension_mismatch,
          "projectors live in different ambient dimensions");
  return a.cwiseProduct(b).sum();
}

template <typename Scalar>
Scalar projector_overlap(const RankRProjector<Scalar>& a, const RankRProjector<Scalar>& b) {
  return frobenius_inner(a.matrix, b.matrix);
}

template <typename Scalar>
Scalar projector_distance(const RankRProjector<Scalar>& a, const RankRProjector<Scalar>& b) {
  require(a.dim() == b.dim(), ErrorCode::dimension_mismatch, "projectors live in different ambient dimensions");
  return (a.matrix - b.matrix).norm();
}

/// Largest absolute eigenvalue of a symmetric matrix.
template <typename Derived>
typename Derived::Scalar operator_norm(const Eigen::MatrixBase<Derived>& s) {
  if (s.size() == 0) return 0;
  return descending_eigenvalues(s).cwiseAbs().maxCoeff();
}

// ---------------------------------------------------------------------------
// Feature-space projectors via either spectral route

/// Where the eigendecomposition behind a feature-space projector runs. The item
/// route eigendecomposes the n x n Gram ZZ^T and lifts with W = Z^T U / sigma;
/// both give the same projector since ZZ^T and Z^T Z share their nonzero spectrum.
enum class SpectralRoute { automatic, feature_space, item_space };

/// Rank-r projector of the d x d scatter of `v` (rows already preprocessed).
template <typename Derived>
RankRProjector<typename Derived::Scalar> scatter_projector(const Eigen::MatrixBase<Derived>& v, bool center, Index r,
                                                           SpectralRoute route = SpectralRoute::automatic) {
  using Scalar = typename Derived::Scalar;
  const Index n = v.rows();
  const Index d = v.cols();
  require(r >= 1 && r <= d, ErrorCode::rank_too_large,
          "rank " + std::to_string(r) + " not in [1, " + std::to_string(d) + "]");
  const Matrix<Scalar> z = center ? center_rows(v) : Matrix<Scalar>(v);

  if (route == SpectralRoute::automatic) route = d < n ? SpectralRoute::feature_space : SpectralRoute::item_space;

  if (route == SpectralRoute::item_space) {
    const auto eig = descending_eigen(Matrix<Scalar>(z * z.transpose()));
    const Scalar scale = std::max(Scalar(1), eig.values.size() ? eig.values.cwiseAbs().maxCoeff() : Scalar(0));
    const Scalar floor = Scalar(1e-10) * scale;
    const bool liftable = r <= n && eig.values(r - 1) > floor;
    if (liftable) {
      Matrix<Scalar> w = z.transpose() * eig.vectors.leftCols(r);
      for (Index j = 0; j < r; ++j) w.col(j) /= std::sqrt(eig.values(j));
      Vector<Scalar> feature_spectrum = Vector<Scalar>::Zero(d);
      const Index shared = std::min(n, d);
      feature_spectrum.head(shared) = eig.values.head(shared).cwiseMax(Scalar(0));
      RankRProjector<Scalar> out;
      out.matrix = w * w.transpose();
      out.matrix = (out.matrix + out.matrix.transpose()) / Scalar(2);
      out.rank = r;
      out.eigengap = detail::gap_at(feature_spectrum, r);
      return out;
    }
    // The lift needs sigma_r > 0; a rank-deficient batch falls through to the
    // direct feature-space decomposition.
  }
  return top_r_projector(Matrix<Scalar>(z.transpose() * z), r);
}

/// Rank-r projector of the n x n item-space Gram ZZ^T (Z = HV when centered).
template <typename Derived>
RankRProjector<typename Derived::Scalar> item_projector(const Eigen::MatrixBase<Derived>& v, bool center, Index r) {
  using Scalar = typename Derived::Scalar;
  const Matrix<Scalar> z = center ? center_rows(v) : Matrix<Scalar>(v);
  return top_r_projector(Matrix<Scalar>(z * z.transpose()), r);
}

}  // namespace crcgram
