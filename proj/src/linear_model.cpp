#include <algorithm>

#include <Eigen/Dense>

#include "ascf/error.hpp"
#include "ascf/learners.hpp"
#include "ascf/rng.hpp"

namespace ascf {

Eigen::VectorXd LinearModel::predict(const Eigen::Ref<const Eigen::VectorXd>& z) const {
  if (z.size() != weights.cols()) {
    throw Error(ErrorKind::shape, "selection vector has length " + std::to_string(z.size()) +
                                      ", model expects " + std::to_string(weights.cols()));
  }
  return weights * z + intercepts;
}

Eigen::MatrixXd LinearModel::predict_rows(const Eigen::Ref<const Eigen::MatrixXd>& z) const {
  if (z.cols() != weights.cols()) throw Error(ErrorKind::shape, "selection matrix has wrong width");
  Eigen::MatrixXd out = z * weights.transpose();
  out.rowwise() += intercepts.transpose();
  return out;
}

nlohmann::json LinearModel::to_json() const {
  nlohmann::json doc;
  doc["weights"] = nlohmann::json::array();
  for (Eigen::Index d = 0; d < weights.rows(); ++d) {
    std::vector<double> row;
    for (Eigen::Index m = 0; m < weights.cols(); ++m) row.push_back(weights(d, m));
    doc["weights"].push_back(row);
  }
  doc["intercepts"] = std::vector<double>(intercepts.data(), intercepts.data() + intercepts.size());
  return doc;
}

LinearModel fit_linear(const Eigen::Ref<const Eigen::MatrixXd>& z,
                       const Eigen::Ref<const Eigen::MatrixXd>& x) {
  if (z.rows() != x.rows()) {
    throw Error(ErrorKind::shape, std::to_string(z.rows()) + " selection rows vs " +
                                      std::to_string(x.rows()) + " classification rows");
  }
  if (z.rows() < 1) throw Error(ErrorKind::shape, "need at least one row");
  if (z.cols() < 1 || x.cols() < 1) throw Error(ErrorKind::shape, "need at least one input and one output");

  const Eigen::RowVectorXd z_mean = z.colwise().mean();
  const Eigen::RowVectorXd x_mean = x.colwise().mean();
  const Eigen::MatrixXd zc = z.rowwise() - z_mean;
  const Eigen::MatrixXd xc = x.rowwise() - x_mean;

  LinearModel model;
  // columns whose pivot falls below this fraction of the largest are treated as dependent
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod;
  cod.setThreshold(1e-10 * static_cast<double>(std::max(zc.rows(), zc.cols())));
  cod.compute(zc);
  model.weights = cod.solve(xc).transpose();
  model.intercepts = x_mean.transpose() - model.weights * z_mean.transpose();
  return model;
}

BootstrapEnsemble fit_bootstrap_ensemble(const Eigen::Ref<const Eigen::MatrixXd>& z,
                                         const Eigen::Ref<const Eigen::MatrixXd>& x, int B,
                                         std::uint64_t seed) {
  if (B < 2) throw Error(ErrorKind::precondition, "bootstrap ensemble needs B >= 2");
  if (z.rows() != x.rows()) throw Error(ErrorKind::shape, "z and x row counts differ");
  const Eigen::Index n = z.rows();
  if (n < 1) throw Error(ErrorKind::precondition, "bootstrap ensemble needs acquired rows");

  BootstrapEnsemble ensemble;
  ensemble.degenerate = true;
  for (Eigen::Index i = 1; i < n && ensemble.degenerate; ++i) {
    if (z.row(i) != z.row(0) || x.row(i) != x.row(0)) ensemble.degenerate = false;
  }

  Eigen::MatrixXd zb(n, z.cols());
  Eigen::MatrixXd xb(n, x.cols());
  for (int b = 0; b < B; ++b) {
    const std::uint64_t member_seed = derive_seed(seed, static_cast<std::uint64_t>(b));
    Rng rng(member_seed);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto src = static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::size_t>(n)));
      zb.row(i) = z.row(src);
      xb.row(i) = x.row(src);
    }
    ensemble.members.push_back(fit_linear(zb, xb));
    ensemble.member_seeds.push_back(member_seed);
  }
  return ensemble;
}

}  // namespace ascf
