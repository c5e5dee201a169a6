#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "logcoral/linalg.hpp"
#include "logcoral/statistics.hpp"

namespace logcoral {

/// Two-domain Gaussian mixture. Source rows of class c are drawn from
/// N(class_means.row(c), class_cov); target rows are drawn from the same
/// distribution and mapped through x -> rotation * (scale o x) + translation.
struct ShiftSpec {
  int num_classes = 5;
  int dim = 16;
  Matrix class_means;            // num_classes x dim
  Matrix class_cov;              // dim x dim, symmetric PSD
  Matrix rotation;               // dim x dim, orthogonal
  Vector scale;                  // dim, positive
  Vector translation;            // dim
  int source_per_class = 200;
  int target_per_class = 200;
  std::uint64_t seed = 0;

  /// Throws InvalidInput describing the first violated constraint.
  void validate() const;
};

/// Both domains keep their labels; the trainer reads target labels only for
/// evaluation.
struct DatasetPair {
  FeatureBatch source;
  FeatureBatch target;
};

enum class ShiftKind { kNone, kTranslate, kScale, kRotate, kAffine };

/// "none", "translate", "scale", "rotate" or "affine"; throws InvalidInput otherwise.
ShiftKind parse_shift_kind(std::string_view name);
std::string to_string(ShiftKind kind);

/// Shift magnitudes of the built-in benchmark.
struct BenchmarkKnobs {
  double class_separation = 0.8;  // std of each class-mean coordinate
  double rotation_angle = 0.6;    // radians, per rotated plane
  int rotated_planes = 4;
  double log_scale_range = 1.5;   // log(scale) ~ U(-r, r)
  double translation_norm = 2.0;
};

/// Deterministic benchmark spec: classes, covariance and transform are all
/// derived from `seed`. Only the requested parts of the transform are active.
ShiftSpec benchmark_spec(ShiftKind kind, std::uint64_t seed, int num_classes = 5, int dim = 16,
                         const BenchmarkKnobs& knobs = {});

/// Samples both domains. Deterministic for a given spec (including its seed).
DatasetPair generate(const ShiftSpec& spec);

/// Analytic target covariance R diag(s) C diag(s) R^T of `spec` for one class.
Matrix target_class_covariance(const ShiftSpec& spec);

/// Reads comma-separated rows. Lines starting with '#' and blank lines are
/// skipped; CRLF endings are accepted. With `has_labels` the last column is
/// an integer class label. Throws ParseError carrying the 1-based line number.
FeatureBatch load_csv(const std::filesystem::path& path, bool has_labels);

/// Writes rows in the format load_csv reads, labels last when present.
/// Values use the shortest round-trip decimal representation.
void save_csv(const std::filesystem::path& path, const FeatureBatch& batch);

/// Same as save_csv but into a string.
std::string to_csv(const FeatureBatch& batch);

}  // namespace logcoral
