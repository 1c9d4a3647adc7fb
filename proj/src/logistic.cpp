#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "ascf/error.hpp"
#include "ascf/learners.hpp"

namespace ascf {

namespace {

double sigmoid(double t) {
  if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

// log(1 + exp(t)) without overflow
double softplus(double t) { return std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t))); }

Eigen::VectorXd linear_scores(const Eigen::Ref<const Eigen::MatrixXd>& x_std,
                              const Eigen::Ref<const Eigen::VectorXd>& params) {
  const Eigen::Index d = x_std.cols();
  return (x_std * params.head(d)).array() + params(d);
}

void check_design(const Eigen::Ref<const Eigen::MatrixXd>& x_std, std::span<const int> y,
                  const Eigen::Ref<const Eigen::VectorXd>& params) {
  if (static_cast<std::size_t>(x_std.rows()) != y.size()) throw Error(ErrorKind::shape, "x and y row counts differ");
  if (params.size() != x_std.cols() + 1) throw Error(ErrorKind::shape, "params must hold D weights and an intercept");
}

}  // namespace

Standardizer Standardizer::fit(const Eigen::Ref<const Eigen::MatrixXd>& x) {
  Standardizer s;
  const auto n = static_cast<double>(x.rows());
  s.mean = x.colwise().mean().transpose();
  s.scale.resize(x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double var = (x.col(j).array() - s.mean(j)).square().sum() / n;
    const double sd = std::sqrt(var);
    s.scale(j) = sd > 1e-12 * std::max(1.0, std::abs(s.mean(j))) ? sd : 0.0;
  }
  return s;
}

Eigen::MatrixXd Standardizer::transform(const Eigen::Ref<const Eigen::MatrixXd>& x) const {
  if (x.cols() != mean.size()) throw Error(ErrorKind::shape, "feature count differs from the fitted standardizer");
  Eigen::MatrixXd out(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    if (scale(j) == 0.0) {
      out.col(j).setZero();
    } else {
      out.col(j) = (x.col(j).array() - mean(j)) / scale(j);
    }
  }
  return out;
}

Eigen::VectorXd Standardizer::transform_one(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != mean.size()) throw Error(ErrorKind::shape, "feature count differs from the fitted standardizer");
  Eigen::VectorXd out(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) out(j) = scale(j) == 0.0 ? 0.0 : (x(j) - mean(j)) / scale(j);
  return out;
}

double ProbClassifier::score(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  return weights.dot(standardizer.transform_one(x)) + intercept;
}

double ProbClassifier::posterior(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  const double p = sigmoid(score(x));
  return std::clamp(p, std::numeric_limits<double>::min(), std::nextafter(1.0, 0.0));
}

std::vector<int> ProbClassifier::predict_rows(const Eigen::Ref<const Eigen::MatrixXd>& x) const {
  std::vector<int> out(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) out[static_cast<std::size_t>(i)] = predict(x.row(i).transpose());
  return out;
}

nlohmann::json ProbClassifier::to_json() const {
  auto vec = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  nlohmann::json doc;
  doc["weights"] = vec(weights);
  doc["intercept"] = intercept;
  doc["C"] = C;
  doc["standardizer"] = {{"mean", vec(standardizer.mean)}, {"scale", vec(standardizer.scale)}};
  doc["converged"] = converged;
  doc["iterations"] = iterations;
  doc["gradient_norm"] = gradient_norm;
  return doc;
}

double logistic_objective(const Eigen::Ref<const Eigen::MatrixXd>& x_std, std::span<const int> y,
                          const Eigen::Ref<const Eigen::VectorXd>& params, double C) {
  check_design(x_std, y, params);
  const Eigen::VectorXd t = linear_scores(x_std, params);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < t.size(); ++i) loss += softplus(t(i)) - y[static_cast<std::size_t>(i)] * t(i);
  return 0.5 * params.head(x_std.cols()).squaredNorm() + C * loss;
}

Eigen::VectorXd logistic_gradient(const Eigen::Ref<const Eigen::MatrixXd>& x_std, std::span<const int> y,
                                  const Eigen::Ref<const Eigen::VectorXd>& params, double C) {
  check_design(x_std, y, params);
  const Eigen::Index d = x_std.cols();
  const Eigen::VectorXd t = linear_scores(x_std, params);
  Eigen::VectorXd residual(t.size());
  for (Eigen::Index i = 0; i < t.size(); ++i) residual(i) = sigmoid(t(i)) - y[static_cast<std::size_t>(i)];
  Eigen::VectorXd grad(d + 1);
  grad.head(d) = params.head(d) + C * x_std.transpose() * residual;
  grad(d) = C * residual.sum();
  return grad;
}

ProbClassifier fit_logistic(const Eigen::Ref<const Eigen::MatrixXd>& x, std::span<const int> y,
                            const LogisticOptions& options) {
  if (static_cast<std::size_t>(x.rows()) != y.size()) throw Error(ErrorKind::shape, "x and y row counts differ");
  if (!(options.C > 0.0)) throw Error(ErrorKind::precondition, "C must be positive");
  const auto positives = std::count(y.begin(), y.end(), 1);
  if (positives == 0 || positives == static_cast<std::ptrdiff_t>(y.size())) {
    throw Error(ErrorKind::single_class, "training rows contain a single class");
  }
  if (!x.allFinite()) throw Error(ErrorKind::domain, "non-finite feature value");

  ProbClassifier model;
  model.C = options.C;
  model.standardizer = Standardizer::fit(x);
  const Eigen::MatrixXd xs = model.standardizer.transform(x);
  const Eigen::Index d = xs.cols();
  const Eigen::Index n = xs.rows();

  Eigen::MatrixXd design(n, d + 1);
  design.leftCols(d) = xs;
  design.col(d).setOnes();

  Eigen::VectorXd params = Eigen::VectorXd::Zero(d + 1);
  double objective = logistic_objective(xs, y, params, options.C);
  Eigen::VectorXd grad = logistic_gradient(xs, y, params, options.C);

  int iter = 0;
  for (; iter < options.max_iter && grad.norm() > options.tol; ++iter) {
    const Eigen::VectorXd t = design * params;
    Eigen::VectorXd w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double p = sigmoid(t(i));
      w(i) = p * (1.0 - p);
    }
    Eigen::MatrixXd hessian = options.C * design.transpose() * w.asDiagonal() * design;
    hessian.diagonal().head(d).array() += 1.0;
    // the intercept row is unpenalised; keep it invertible when every
    // training point is already fitted with near-certainty
    hessian(d, d) += 1e-12 * std::max(1.0, hessian(d, d));

    Eigen::LDLT<Eigen::MatrixXd> ldlt(hessian);
    Eigen::VectorXd direction = ldlt.solve(grad);
    if (ldlt.info() != Eigen::Success || !direction.allFinite() || direction.dot(grad) <= 0.0) {
      direction = grad;  // fall back to steepest descent
    }

    double step = 1.0;
    bool accepted = false;
    const double slope = direction.dot(grad);
    for (int k = 0; k < 60; ++k, step *= 0.5) {
      const Eigen::VectorXd trial = params - step * direction;
      const double trial_objective = logistic_objective(xs, y, trial, options.C);
      if (trial_objective <= objective - 1e-4 * step * slope) {
        params = trial;
        objective = trial_objective;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    grad = logistic_gradient(xs, y, params, options.C);
  }

  model.weights = params.head(d);
  model.intercept = params(d);
  model.iterations = iter;
  model.gradient_norm = grad.norm();
  model.converged = model.gradient_norm <= options.tol;
  return model;
}

}  // namespace ascf
