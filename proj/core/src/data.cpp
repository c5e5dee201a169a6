#include "logcoral/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <system_error>
#include <vector>

namespace logcoral {

namespace {

Matrix gaussian_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal(rng);
  }
  return m;
}

Matrix random_orthogonal(std::mt19937_64& rng, Eigen::Index dim) {
  const Matrix g = gaussian_matrix(rng, dim, dim);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  // Fix the sign ambiguity so the draw is Haar-distributed.
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index c = 0; c < dim; ++c) {
    if (r(c, c) < 0.0) q.col(c) *= -1.0;
  }
  return q;
}

// Square root of a symmetric PSD matrix, used to colour standard normals.
Matrix psd_sqrt(const Matrix& cov) {
  const EigenPair eig = sym_eig(SymmetricMatrix::symmetrize(cov));
  const Vector root = eig.values.cwiseMax(0.0).cwiseSqrt();
  return eig.vectors * root.asDiagonal() * eig.vectors.transpose();
}

Matrix sample_domain(const ShiftSpec& spec, int per_class, std::mt19937_64& rng,
                     std::vector<int>& labels) {
  const Matrix colour = psd_sqrt(spec.class_cov);
  const Eigen::Index n = static_cast<Eigen::Index>(per_class) * spec.num_classes;
  Matrix out(n, spec.dim);
  labels.clear();
  labels.reserve(static_cast<std::size_t>(n));
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector z(spec.dim);
  Eigen::Index row = 0;
  for (int c = 0; c < spec.num_classes; ++c) {
    for (int i = 0; i < per_class; ++i, ++row) {
      for (Eigen::Index j = 0; j < spec.dim; ++j) z[j] = normal(rng);
      out.row(row) = (spec.class_means.row(c).transpose() + colour * z).transpose();
      labels.push_back(c);
    }
  }
  return out;
}

[[noreturn]] void parse_fail(const std::filesystem::path& path, std::size_t line,
                             const std::string& why) {
  std::ostringstream os;
  os << path.string() << ":" << line << ": " << why;
  throw ParseError(os.str(), line);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

}  // namespace

void ShiftSpec::validate() const {
  if (num_classes < 2) throw InvalidInput("ShiftSpec: need at least two classes");
  if (dim < 2) throw InvalidInput("ShiftSpec: feature dim must be at least 2");
  if (source_per_class < 1 || target_per_class < 1) {
    throw InvalidInput("ShiftSpec: samples per class must be positive");
  }
  if (class_means.rows() != num_classes || class_means.cols() != dim) {
    throw InvalidInput("ShiftSpec: class_means must be num_classes x dim");
  }
  if (class_cov.rows() != dim || class_cov.cols() != dim) {
    throw InvalidInput("ShiftSpec: class_cov must be dim x dim");
  }
  if (rotation.rows() != dim || rotation.cols() != dim) {
    throw InvalidInput("ShiftSpec: rotation must be dim x dim");
  }
  if (scale.size() != dim || translation.size() != dim) {
    throw InvalidInput("ShiftSpec: scale and translation must have length dim");
  }
  if (!class_means.allFinite() || !class_cov.allFinite() || !rotation.allFinite() ||
      !scale.allFinite() || !translation.allFinite()) {
    throw InvalidInput("ShiftSpec: non-finite parameter");
  }
  const Matrix gram = rotation.transpose() * rotation;
  if ((gram - Matrix::Identity(dim, dim)).cwiseAbs().maxCoeff() > 1e-8) {
    throw InvalidInput("ShiftSpec: rotation is not orthogonal");
  }
  if ((scale.array() <= 0.0).any()) throw InvalidInput("ShiftSpec: scales must be positive");
  const SymmetricMatrix cov(class_cov);
  const EigenPair eig = sym_eig(cov);
  if (eig.values[0] < -1e-12 * std::max(1.0, eig.values.cwiseAbs().maxCoeff())) {
    throw InvalidInput("ShiftSpec: class_cov is not positive semi-definite");
  }
}

ShiftKind parse_shift_kind(std::string_view name) {
  if (name == "none") return ShiftKind::kNone;
  if (name == "translate") return ShiftKind::kTranslate;
  if (name == "scale") return ShiftKind::kScale;
  if (name == "rotate") return ShiftKind::kRotate;
  if (name == "affine") return ShiftKind::kAffine;
  throw InvalidInput("unknown shift kind '" + std::string(name) +
                     "' (expected none, translate, scale, rotate or affine)");
}

std::string to_string(ShiftKind kind) {
  switch (kind) {
    case ShiftKind::kNone: return "none";
    case ShiftKind::kTranslate: return "translate";
    case ShiftKind::kScale: return "scale";
    case ShiftKind::kRotate: return "rotate";
    case ShiftKind::kAffine: return "affine";
  }
  return "unknown";
}

ShiftSpec benchmark_spec(ShiftKind kind, std::uint64_t seed, int num_classes, int dim,
                         const BenchmarkKnobs& knobs) {
  if (num_classes < 2 || dim < 2) {
    throw InvalidInput("benchmark_spec: need at least two classes and two dimensions");
  }
  std::mt19937_64 rng(seed);
  const Eigen::Index d = dim;

  ShiftSpec spec;
  spec.num_classes = num_classes;
  spec.dim = dim;
  spec.seed = seed;
  spec.class_means = knobs.class_separation * gaussian_matrix(rng, num_classes, d);

  // Anisotropic within-class covariance, spectrum log-uniform in [0.25, 2].
  const Matrix basis = random_orthogonal(rng, d);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Vector spectrum(d);
  for (Eigen::Index i = 0; i < d; ++i) spectrum[i] = std::exp(std::log(0.25) + unit(rng) * std::log(8.0));
  spec.class_cov = basis * spectrum.asDiagonal() * basis.transpose();
  spec.class_cov = 0.5 * (spec.class_cov + spec.class_cov.transpose()).eval();

  // Transform parameters are always drawn so that every kind consumes the
  // same random stream; inactive parts are reset to the identity afterwards.
  const Matrix plane_basis = random_orthogonal(rng, d);
  Matrix rotation = Matrix::Identity(d, d);
  const int planes = std::min<int>(knobs.rotated_planes, dim / 2);
  for (int p = 0; p < planes; ++p) {
    const double c = std::cos(knobs.rotation_angle);
    const double s = std::sin(knobs.rotation_angle);
    rotation(2 * p, 2 * p) = c;
    rotation(2 * p, 2 * p + 1) = -s;
    rotation(2 * p + 1, 2 * p) = s;
    rotation(2 * p + 1, 2 * p + 1) = c;
  }
  rotation = plane_basis * rotation * plane_basis.transpose();

  Vector scale(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    scale[i] = std::exp((2.0 * unit(rng) - 1.0) * knobs.log_scale_range);
  }
  Vector direction = gaussian_matrix(rng, d, 1);
  const Vector translation = knobs.translation_norm * direction.normalized();

  const bool rotate = kind == ShiftKind::kRotate || kind == ShiftKind::kAffine;
  const bool rescale = kind == ShiftKind::kScale || kind == ShiftKind::kAffine;
  const bool translate = kind == ShiftKind::kTranslate || kind == ShiftKind::kAffine;
  spec.rotation = rotate ? rotation : Matrix(Matrix::Identity(d, d));
  spec.scale = rescale ? scale : Vector(Vector::Ones(d));
  spec.translation = translate ? translation : Vector(Vector::Zero(d));
  return spec;
}

DatasetPair generate(const ShiftSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<int> source_labels;
  std::vector<int> target_labels;
  Matrix source = sample_domain(spec, spec.source_per_class, rng, source_labels);
  Matrix target = sample_domain(spec, spec.target_per_class, rng, target_labels);
  const Matrix scaled = target * spec.scale.asDiagonal();
  target = (scaled * spec.rotation.transpose()).rowwise() + spec.translation.transpose();
  return DatasetPair{FeatureBatch(std::move(source), std::move(source_labels)),
                     FeatureBatch(std::move(target), std::move(target_labels))};
}

Matrix target_class_covariance(const ShiftSpec& spec) {
  const Matrix a = spec.rotation * spec.scale.asDiagonal();
  return a * spec.class_cov * a.transpose();
}

FeatureBatch load_csv(const std::filesystem::path& path, bool has_labels) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ParseError("cannot open '" + path.string() + "'", 0);
  }

  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view text = trim(line);
    if (text.empty() || text.front() == '#') continue;

    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = text.find(',', start);
      cells.push_back(trim(text.substr(start, comma == std::string_view::npos ? text.npos
                                                                              : comma - start)));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (width == 0) {
      width = cells.size();
      if (has_labels && width < 2) parse_fail(path, line_no, "need a feature and a label column");
    } else if (cells.size() != width) {
      parse_fail(path, line_no,
                 "expected " + std::to_string(width) + " columns, found " +
                     std::to_string(cells.size()));
    }

    const std::size_t feature_cols = has_labels ? width - 1 : width;
    std::vector<double> values(feature_cols);
    for (std::size_t c = 0; c < feature_cols; ++c) {
      const std::string_view cell = cells[c];
      double v = 0.0;
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (cell.empty() || res.ec != std::errc() || res.ptr != cell.data() + cell.size()) {
        parse_fail(path, line_no, "column " + std::to_string(c + 1) + ": not a number '" +
                                      std::string(cell) + "'");
      }
      if (!std::isfinite(v)) {
        parse_fail(path, line_no, "column " + std::to_string(c + 1) + ": non-finite value");
      }
      values[c] = v;
    }
    if (has_labels) {
      const std::string_view cell = cells.back();
      int label = 0;
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), label);
      if (cell.empty() || res.ec != std::errc() || res.ptr != cell.data() + cell.size() ||
          label < 0) {
        parse_fail(path, line_no, "label column: not a non-negative integer '" +
                                      std::string(cell) + "'");
      }
      labels.push_back(label);
    }
    rows.push_back(std::move(values));
  }
  if (rows.empty()) parse_fail(path, line_no, "no data rows");

  Matrix data(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      data(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  if (has_labels) return FeatureBatch(std::move(data), std::move(labels));
  return FeatureBatch(std::move(data));
}

std::string to_csv(const FeatureBatch& batch) {
  std::string out;
  char buf[64];
  const Matrix& data = batch.data();
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    for (Eigen::Index j = 0; j < data.cols(); ++j) {
      if (j > 0) out.push_back(',');
      const auto res = std::to_chars(buf, buf + sizeof(buf), data(i, j));
      out.append(buf, res.ptr);
    }
    if (batch.has_labels()) {
      out.push_back(',');
      out += std::to_string(batch.labels()[static_cast<std::size_t>(i)]);
    }
    out.push_back('\n');
  }
  return out;
}

void save_csv(const std::filesystem::path& path, const FeatureBatch& batch) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ParseError("cannot write '" + path.string() + "'", 0);
  out << to_csv(batch);
  if (!out) throw ParseError("write failed for '" + path.string() + "'", 0);
}

}  // namespace logcoral
