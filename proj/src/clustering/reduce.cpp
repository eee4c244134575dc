#include <cmath>

#include <Eigen/Dense>

#include "motiflab/clustering.hpp"

namespace motiflab::clustering {

std::string to_string(ReducerMethod m) {
  switch (m) {
    case ReducerMethod::none: return "none";
    case ReducerMethod::pca: return "pca";
    case ReducerMethod::external: return "external";
  }
  return "?";
}

ReducerMethod parse_reducer_method(std::string_view s) {
  if (s == "none") return ReducerMethod::none;
  if (s == "pca") return ReducerMethod::pca;
  if (s == "external") return ReducerMethod::external;
  throw ConfigError("unknown reducer method '" + std::string(s) + "' (expected none, pca or external)");
}

void ReducerParams::validate() const {
  if (n_components < 2) throw ConfigError("reducer.n_components must be >= 2");
  if (n_neighbors < 2) throw ConfigError("reducer.n_neighbors must be >= 2");
  if (!(min_dist >= 0.0)) throw ConfigError("reducer.min_dist must be >= 0");
  if (method == ReducerMethod::external && external_path.empty()) {
    throw ConfigError("reducer.external_path is required for the external method");
  }
}

namespace {

Matrix pca(const Matrix& in, std::size_t k, bool normalize) {
  const auto n = static_cast<Eigen::Index>(in.rows());
  const auto d = static_cast<Eigen::Index>(in.cols());
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  RowMajor x = Eigen::Map<const RowMajor>(in.data().data(), n, d);
  if (normalize) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double norm = x.row(i).norm();
      if (norm > 0.0) x.row(i) /= norm;
    }
  }
  const Eigen::RowVectorXd mean = x.colwise().mean();
  x.rowwise() -= mean;
  const Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(std::max<Eigen::Index>(n - 1, 1));

  // Eigenvalues come back ascending; take the last k columns in reverse.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw Error("PCA: eigendecomposition did not converge");
  Eigen::MatrixXd basis(d, static_cast<Eigen::Index>(k));
  for (Eigen::Index c = 0; c < static_cast<Eigen::Index>(k); ++c) {
    Eigen::VectorXd v = solver.eigenvectors().col(d - 1 - c);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    basis.col(c) = v;
  }
  const RowMajor proj = x * basis;
  Matrix out(in.rows(), k);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index c = 0; c < static_cast<Eigen::Index>(k); ++c) {
      // Collapse signed zeros and round-off on degenerate (zero-variance) input.
      const double v = proj(i, c);
      out(static_cast<std::size_t>(i), static_cast<std::size_t>(c)) = v == 0.0 ? 0.0 : v;
    }
  }
  return out;
}

}  // namespace

Matrix reduce(const Matrix& m, const ReducerParams& p) {
  p.validate();
  switch (p.method) {
    case ReducerMethod::none:
      return m;
    case ReducerMethod::external: {
      Matrix ext = read_matrix_file(p.external_path);
      if (ext.rows() != m.rows() || ext.cols() != p.n_components) {
        throw PreconditionError("external reduced matrix is " + std::to_string(ext.rows()) + "x" +
                                std::to_string(ext.cols()) + ", expected " +
                                std::to_string(m.rows()) + "x" + std::to_string(p.n_components));
      }
      return ext;
    }
    case ReducerMethod::pca:
      if (p.n_components >= m.cols()) {
        throw PreconditionError("PCA: n_components (" + std::to_string(p.n_components) +
                                ") must be below the input dimension (" +
                                std::to_string(m.cols()) + ")");
      }
      if (m.rows() < p.n_components) {
        throw PreconditionError("PCA: need at least n_components (" +
                                std::to_string(p.n_components) + ") rows, got " +
                                std::to_string(m.rows()));
      }
      return pca(m, p.n_components, p.metric == Metric::cosine);
  }
  throw Error("reduce: unhandled method");
}

}  // namespace motiflab::clustering
