// Copyright 2026 The scene_forge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "scene_forge/backend.hpp"

#include <cmath>
#include <fstream>

#include "binary_io.hpp"
#include "scene_forge/error.hpp"

namespace scene_forge {
namespace {

int resolve_classes(std::span<const int> labels, int num_classes) {
  if (num_classes > 0) return num_classes;
  int top = -1;
  for (int y : labels) top = std::max(top, y);
  return top + 1;
}

struct ClassStats {
  Eigen::MatrixXd means;  // classes x dim
  std::vector<int> counts;
};

ClassStats class_stats(const Eigen::MatrixXd& x, std::span<const int> labels, int classes) {
  if (static_cast<std::size_t>(x.rows()) != labels.size()) {
    fail(ErrorCode::kShapeMismatch, "vector and label counts differ");
  }
  if (classes < 1) fail(ErrorCode::kEmptyInput, "no labelled vectors");
  ClassStats s{Eigen::MatrixXd::Zero(classes, x.cols()), std::vector<int>(classes, 0)};
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const int y = labels[i];
    if (y < 0 || y >= classes) {
      fail(ErrorCode::kUnknownLabel, "label " + std::to_string(y) + " out of range");
    }
    s.means.row(y) += x.row(i);
    ++s.counts[y];
  }
  for (int c = 0; c < classes; ++c) {
    if (s.counts[c] < 1) {
      fail(ErrorCode::kClassTooSmall, "class " + std::to_string(c) + " has no vectors");
    }
    s.means.row(c) /= s.counts[c];
  }
  return s;
}

void put_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) detail::put_f64(out, m(r, c));
}

void get_matrix(std::istream& in, Eigen::MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = detail::get_f64(in);
}

}  // namespace

Eigen::MatrixXd XVectorSet::matrix() const {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(size()), dim());
  for (std::size_t i = 0; i < size(); ++i) {
    if (static_cast<int>(vectors[i].size()) != dim()) {
      fail(ErrorCode::kShapeMismatch, "x-vectors differ in dimension");
    }
    m.row(static_cast<Eigen::Index>(i)) =
        Eigen::Map<const Eigen::RowVectorXd>(vectors[i].data(), dim());
  }
  return m;
}

ScatterMatrices scatter_matrices(const Eigen::MatrixXd& x, std::span<const int> labels,
                                 double alpha, double beta, int num_classes) {
  const int classes = resolve_classes(labels, num_classes);
  const ClassStats s = class_stats(x, labels, classes);
  const Eigen::Index d = x.cols();

  Eigen::MatrixXd within = Eigen::MatrixXd::Zero(d, d);
  std::vector<Eigen::MatrixXd> per_class(classes, Eigen::MatrixXd::Zero(d, d));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const Eigen::RowVectorXd diff = x.row(i) - s.means.row(labels[i]);
    per_class[labels[i]].noalias() += diff.transpose() * diff;
  }
  for (int c = 0; c < classes; ++c) within += per_class[c] / s.counts[c];
  within /= classes;

  const Eigen::RowVectorXd grand = s.means.colwise().mean();
  const Eigen::MatrixXd centered = s.means.rowwise() - grand;
  Eigen::MatrixXd between = centered.transpose() * centered / classes;

  within.diagonal().array() += alpha;
  between.diagonal().array() += beta;
  // Exact symmetry regardless of accumulation order.
  within = 0.5 * (within + within.transpose()).eval();
  between = 0.5 * (between + between.transpose()).eval();
  return {std::move(within), std::move(between)};
}

RldaTransform fit_rlda(const Eigen::MatrixXd& x, std::span<const int> labels,
                       const RldaConfig& config, int num_classes) {
  const int classes = resolve_classes(labels, num_classes);
  if (config.out_dim < 1 || config.out_dim > x.cols()) {
    fail(ErrorCode::kInvalidArgument, "RLDA output dimension must be in [1, " +
                                          std::to_string(x.cols()) + "]");
  }
  const ScatterMatrices sm = scatter_matrices(x, labels, config.alpha, config.beta, classes);

  const Eigen::LLT<Eigen::MatrixXd> llt(sm.within);
  if (llt.info() != Eigen::Success) {
    fail(ErrorCode::kNumerical, "within-class scatter is not positive definite");
  }
  const auto lower = llt.matrixL();
  const Eigen::MatrixXd a = lower.solve(sm.between);             // L^-1 Sb
  Eigen::MatrixXd m = lower.solve(a.transpose());                // L^-1 Sb L^-T
  m = 0.5 * (m + m.transpose()).eval();

  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
  if (eig.info() != Eigen::Success) fail(ErrorCode::kNumerical, "eigendecomposition failed");

  const Eigen::Index d = x.cols();
  RldaTransform r;
  r.alpha = config.alpha;
  r.beta = config.beta;
  r.projection.resize(config.out_dim, d);
  r.eigenvalues.resize(config.out_dim);
  const auto upper = llt.matrixU();  // L^T
  for (int k = 0; k < config.out_dim; ++k) {
    const Eigen::Index src = d - 1 - k;  // ascending order from the solver
    r.eigenvalues(k) = eig.eigenvalues()(src);
    Eigen::VectorXd v = upper.solve(eig.eigenvectors().col(src));
    Eigen::Index peak = 0;
    v.cwiseAbs().maxCoeff(&peak);
    if (v(peak) < 0) v = -v;
    r.projection.row(k) = v.transpose();
  }

  const Eigen::MatrixXd projected = x * r.projection.transpose();
  r.class_means = class_stats(projected, labels, classes).means;
  for (int c = 0; c < classes; ++c) {
    const double n = r.class_means.row(c).norm();
    if (n > 0.0) r.class_means.row(c) /= n;
  }
  return r;
}

RldaTransform fit_rlda(const XVectorSet& set, const RldaConfig& config) {
  if (set.labels.size() != set.size()) fail(ErrorCode::kShapeMismatch, "unlabelled x-vectors");
  return fit_rlda(set.matrix(), set.labels, config);
}

Eigen::VectorXd project(const RldaTransform& rlda, std::span<const double> x) {
  if (static_cast<int>(x.size()) != rlda.in_dim()) {
    fail(ErrorCode::kShapeMismatch, "x-vector has dimension " + std::to_string(x.size()) +
                                        ", RLDA expects " + std::to_string(rlda.in_dim()));
  }
  return rlda.projection * Eigen::Map<const Eigen::VectorXd>(x.data(), rlda.in_dim());
}

CosineScores cosine_scores(const RldaTransform& rlda, std::span<const double> x) {
  const Eigen::VectorXd p = project(rlda, x);
  CosineScores out;
  out.scores.assign(rlda.num_classes(), 0.0);
  const double n = p.norm();
  if (n == 0.0 || !std::isfinite(n)) {
    out.zero_norm = true;
    return out;
  }
  const Eigen::VectorXd s = rlda.class_means * (p / n);
  for (int c = 0; c < rlda.num_classes(); ++c) out.scores[c] = s(c);
  return out;
}

std::vector<double> calibrate_cosine(std::span<const double> scores, double temperature) {
  if (!(temperature > 0.0)) fail(ErrorCode::kInvalidArgument, "temperature must be positive");
  std::vector<double> p(scores.size());
  if (scores.empty()) return p;
  const double peak = *std::max_element(scores.begin(), scores.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) sum += p[i] = std::exp((scores[i] - peak) / temperature);
  for (double& v : p) v /= sum;
  return p;
}

void save_rlda(const std::filesystem::path& path, const RldaTransform& r) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  using namespace detail;
  put_magic(out, "RLDA");
  put_u32(out, static_cast<std::uint32_t>(r.in_dim()));
  put_u32(out, static_cast<std::uint32_t>(r.out_dim()));
  put_u32(out, static_cast<std::uint32_t>(r.num_classes()));
  put_f64(out, r.alpha);
  put_f64(out, r.beta);
  put_matrix(out, r.projection);
  for (Eigen::Index k = 0; k < r.eigenvalues.size(); ++k) put_f64(out, r.eigenvalues(k));
  put_matrix(out, r.class_means);
  if (!out) fail(ErrorCode::kIo, "write failed for " + path.string());
}

RldaTransform load_rlda(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot read " + path.string());
  using namespace detail;
  expect_magic(in, "RLDA", path.string());
  const auto in_dim = get_u32(in), out_dim = get_u32(in), classes = get_u32(in);
  if (in_dim == 0 || out_dim == 0 || out_dim > in_dim || classes == 0 || in_dim > 65536 ||
      classes > 65536) {
    fail(ErrorCode::kFormat, path.string() + ": implausible RLDA dimensions");
  }
  RldaTransform r;
  r.alpha = get_f64(in);
  r.beta = get_f64(in);
  r.projection.resize(out_dim, in_dim);
  get_matrix(in, r.projection);
  r.eigenvalues.resize(out_dim);
  for (std::uint32_t k = 0; k < out_dim; ++k) r.eigenvalues(k) = get_f64(in);
  r.class_means.resize(classes, out_dim);
  get_matrix(in, r.class_means);
  return r;
}

void save_xvectors(const std::filesystem::path& path, const XVectorSet& set) {
  if (set.ids.size() != set.size() || set.labels.size() != set.size()) {
    fail(ErrorCode::kShapeMismatch, "x-vector set fields differ in length");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  using namespace detail;
  put_magic(out, "XVC1");
  put_u32(out, static_cast<std::uint32_t>(set.size()));
  put_u32(out, static_cast<std::uint32_t>(set.dim()));
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (static_cast<int>(set.vectors[i].size()) != set.dim()) {
      fail(ErrorCode::kShapeMismatch, "x-vectors differ in dimension");
    }
    put_string(out, set.ids[i]);
    put_u32(out, static_cast<std::uint32_t>(set.labels[i]));
    for (double v : set.vectors[i]) put_f64(out, v);
  }
  if (!out) fail(ErrorCode::kIo, "write failed for " + path.string());
}

XVectorSet load_xvectors(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot read " + path.string());
  using namespace detail;
  expect_magic(in, "XVC1", path.string());
  const std::uint32_t count = get_u32(in), dim = get_u32(in);
  if (dim > 65536) fail(ErrorCode::kFormat, path.string() + ": implausible x-vector dimension");
  XVectorSet set;
  for (std::uint32_t i = 0; i < count; ++i) {
    set.ids.push_back(get_string(in));
    set.labels.push_back(static_cast<int>(get_u32(in)));
    auto& v = set.vectors.emplace_back(dim);
    for (double& x : v) x = get_f64(in);
  }
  return set;
}

}  // namespace scene_forge
