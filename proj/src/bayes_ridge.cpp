#include "margin_probe/bayes_ridge.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "margin_probe/errors.hpp"
#include "margin_probe/units.hpp"

namespace margin_probe::bayes {
namespace {

using nlohmann::json;

json vector_to_json(const Eigen::VectorXd& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

Eigen::VectorXd vector_from_json(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

double Posterior::predict_mean(const Eigen::VectorXd& phi) const {
  return mean.dot(phi - design_mean) + target_mean;
}

double Posterior::predict_variance(const Eigen::VectorXd& phi) const {
  const Eigen::VectorXd c = phi - design_mean;
  return 1.0 / noise_precision + c.dot(covariance * c);
}

double log_evidence(std::size_t n, const Eigen::VectorXd& s, double lambda, double beta, double rss,
                    double weight_sq_norm, const FitOptions& o) {
  const auto nd = static_cast<double>(n);
  const auto p = static_cast<double>(s.size());
  double logdet_a = 0.0;
  for (Eigen::Index i = 0; i < s.size(); ++i) logdet_a += std::log(lambda + beta * s[i]);
  const double prior = o.hyper_a * std::log(lambda) - o.hyper_b * lambda + o.hyper_a * std::log(beta) -
                       o.hyper_b * beta;
  return prior + 0.5 * (p * std::log(lambda) + nd * std::log(beta) - beta * rss - lambda * weight_sq_norm -
                        logdet_a - nd * std::log(2.0 * kPi));
}

Posterior fit_posterior(Eigen::MatrixXd phi, const Eigen::VectorXd& y, const FitOptions& o) {
  const auto n = static_cast<std::size_t>(phi.rows());
  if (n < 2) throw InvalidArgument("Bayesian ridge needs at least 2 rows");
  if (y.size() != phi.rows()) throw InvalidArgument("design/target row mismatch");
  if (!phi.allFinite() || !y.allFinite()) throw SingularDesign("design or targets contain non-finite values");

  Posterior post;
  post.design_mean = phi.colwise().mean().transpose();
  phi.rowwise() -= post.design_mean.transpose();
  post.target_mean = y.mean();
  const Eigen::VectorXd yc = y.array() - post.target_mean;

  const Eigen::MatrixXd gram = phi.transpose() * phi;
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  if (eig.info() != Eigen::Success) throw SingularDesign("eigendecomposition of the Gram matrix failed");
  const Eigen::MatrixXd& v = eig.eigenvectors();
  const Eigen::VectorXd s = eig.eigenvalues().cwiseMax(0.0);
  const Eigen::VectorXd proj = v.transpose() * (phi.transpose() * yc);

  double lambda = o.initial_weight_precision;
  double beta = 0.0;
  if (o.fixed_precisions) {
    lambda = o.fixed_precisions->first;
    beta = o.fixed_precisions->second;
  } else {
    const double var = yc.squaredNorm() / static_cast<double>(n);
    beta = var > 0.0 ? 1.0 / var : std::numeric_limits<double>::infinity();
  }
  if (!(lambda > 0.0) || !(beta > 0.0) || !std::isfinite(lambda) || !std::isfinite(beta)) {
    throw SingularDesign("starting precisions are not finite and positive (constant targets?)");
  }
  const double cond = (lambda + beta * s.maxCoeff()) / (lambda + beta * s.minCoeff());
  if (!(cond < 1.0 / std::numeric_limits<double>::epsilon())) {
    throw SingularDesign("lambda I + beta Phi^T Phi is numerically singular (condition " + std::to_string(cond) + ")");
  }

  auto solve_mean = [&](double lam, double bet) -> Eigen::VectorXd {
    const Eigen::VectorXd shrink = (bet / (lam + bet * s.array())).matrix();
    return v * proj.cwiseProduct(shrink);
  };

  Eigen::VectorXd m = solve_mean(lambda, beta);
  if (!o.fixed_precisions) {
    Eigen::VectorXd prev;
    for (int it = 1; it <= o.max_iterations; ++it) {
      m = solve_mean(lambda, beta);
      const double rss = (yc - phi * m).squaredNorm();
      const double msq = m.squaredNorm();
      post.log_evidence.push_back(log_evidence(n, s, lambda, beta, rss, msq, o));
      post.iterations = it;
      if (it > 1 && (m - prev).cwiseAbs().maxCoeff() < o.tolerance) {
        post.converged = true;
        break;
      }
      prev = m;
      const double gamma_eff = (beta * s.array() / (lambda + beta * s.array())).sum();
      lambda = (gamma_eff + 2.0 * o.hyper_a) / (msq + 2.0 * o.hyper_b);
      beta = std::min((static_cast<double>(n) - gamma_eff + 2.0 * o.hyper_a) / (rss + 2.0 * o.hyper_b),
                      o.noise_precision_cap);
    }
    if (!post.converged) m = solve_mean(lambda, beta);
  }
  post.mean = m;
  post.weight_precision = lambda;
  post.noise_precision = beta;
  const Eigen::VectorXd inv = (1.0 / (lambda + beta * s.array())).matrix();
  post.covariance = v * inv.asDiagonal() * v.transpose();
  // Exact symmetry for the persisted matrix.
  post.covariance = 0.5 * (post.covariance + post.covariance.transpose()).eval();
  return post;
}

Prediction BayesRidgeModel::predict(const features::RawFeatures& raw) const {
  const Eigen::VectorXd phi = monomials.expand(scaler.transform(raw));
  return {posterior.predict_mean(phi), std::sqrt(posterior.predict_variance(phi))};
}

double BayesRidgeModel::predict_mean(const features::RawFeatures& raw) const {
  return posterior.predict_mean(monomials.expand(scaler.transform(raw)));
}

BayesRidgeModel train(std::span<const features::RawFeatures> x, std::span<const double> y, std::uint64_t seed,
                      const FitOptions& options, int degree) {
  if (x.size() != y.size()) throw InvalidArgument("feature/label count mismatch");
  BayesRidgeModel model;
  model.monomials = features::MonomialTable(degree);
  model.scaler = features::fit_scaler(x);
  Eigen::MatrixXd phi = features::design_matrix(x, model.scaler, model.monomials);
  const Eigen::VectorXd targets = Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size()));
  model.posterior = fit_posterior(std::move(phi), targets, options);
  model.training = {x.size(), seed};
  return model;
}

BayesRidgeModel train(const std::vector<dataset::ProbeRecord>& rows, std::uint64_t seed, const FitOptions& options,
                      int degree) {
  std::vector<features::RawFeatures> x;
  std::vector<double> y;
  x.reserve(rows.size());
  y.reserve(rows.size());
  for (const auto& r : rows) {
    x.push_back(features::raw_features(r));
    y.push_back(r.margin_db);
  }
  return train(x, y, seed, options, degree);
}

double rmse(std::span<const double> predictions, std::span<const double> labels) {
  if (predictions.empty() || predictions.size() != labels.size()) {
    throw InvalidArgument("rmse needs matching, nonempty prediction and label sets");
  }
  double ss = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) ss += (predictions[i] - labels[i]) * (predictions[i] - labels[i]);
  return std::sqrt(ss / static_cast<double>(labels.size()));
}

double rmse(const BayesRidgeModel& model, const std::vector<dataset::ProbeRecord>& rows) {
  std::vector<double> pred, lab;
  pred.reserve(rows.size());
  lab.reserve(rows.size());
  for (const auto& r : rows) {
    pred.push_back(model.predict_mean(features::raw_features(r)));
    lab.push_back(r.margin_db);
  }
  return rmse(pred, lab);
}

std::string to_json(const BayesRidgeModel& model) {
  json j;
  j["schema"] = kModelSchema;
  j["version"] = kModelSchemaVersion;
  j["scaler"] = {{"mean", model.scaler.mean}, {"stddev", model.scaler.stddev}};
  json exps = json::array();
  for (const auto& e : model.monomials.exponents()) exps.push_back(std::vector<int>(e.begin(), e.end()));
  j["monomials"] = {{"max_degree", model.monomials.max_degree()}, {"exponents", exps}};
  const auto& p = model.posterior;
  json cov = json::array();
  for (Eigen::Index r = 0; r < p.covariance.rows(); ++r) cov.push_back(vector_to_json(p.covariance.row(r)));
  j["posterior"] = {{"mean", vector_to_json(p.mean)},
                    {"covariance", cov},
                    {"design_mean", vector_to_json(p.design_mean)},
                    {"target_mean", p.target_mean},
                    {"weight_precision", p.weight_precision},
                    {"noise_precision", p.noise_precision}};
  j["training"] = {{"n_rows", model.training.n_rows},
                   {"seed", model.training.seed},
                   {"iterations", p.iterations},
                   {"converged", p.converged},
                   {"log_evidence", p.log_evidence}};
  return j.dump(1) + "\n";
}

BayesRidgeModel from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    if (j.at("schema") != kModelSchema) throw FormatError("not a margin-probe model file");
    if (j.at("version").get<int>() != kModelSchemaVersion) {
      throw FormatError("unsupported model schema version " + j.at("version").dump());
    }
    BayesRidgeModel m;
    m.scaler.mean = j.at("scaler").at("mean").get<features::RawFeatures>();
    m.scaler.stddev = j.at("scaler").at("stddev").get<features::RawFeatures>();
    m.monomials = features::MonomialTable(j.at("monomials").at("max_degree").get<int>());
    const auto& exps = j.at("monomials").at("exponents");
    if (exps.size() != m.monomials.size()) throw FormatError("monomial table size mismatch");
    for (std::size_t k = 0; k < exps.size(); ++k) {
      const auto e = exps[k].get<std::vector<int>>();
      const auto& expect = m.monomials.exponents()[k];
      if (!std::equal(e.begin(), e.end(), expect.begin(), expect.end())) {
        throw FormatError("monomial table order mismatch at entry " + std::to_string(k));
      }
    }
    const auto& p = j.at("posterior");
    m.posterior.mean = vector_from_json(p.at("mean"));
    m.posterior.design_mean = vector_from_json(p.at("design_mean"));
    m.posterior.target_mean = p.at("target_mean").get<double>();
    m.posterior.weight_precision = p.at("weight_precision").get<double>();
    m.posterior.noise_precision = p.at("noise_precision").get<double>();
    const auto& cov = p.at("covariance");
    const auto dim = static_cast<Eigen::Index>(m.monomials.size());
    if (m.posterior.mean.size() != dim || m.posterior.design_mean.size() != dim ||
        static_cast<Eigen::Index>(cov.size()) != dim) {
      throw FormatError("posterior dimensions do not match the monomial table");
    }
    m.posterior.covariance.resize(dim, dim);
    for (Eigen::Index r = 0; r < dim; ++r) {
      const Eigen::VectorXd row = vector_from_json(cov[static_cast<std::size_t>(r)]);
      if (row.size() != dim) throw FormatError("covariance row has the wrong length");
      m.posterior.covariance.row(r) = row.transpose();
    }
    const auto& t = j.at("training");
    m.training.n_rows = t.at("n_rows").get<std::size_t>();
    m.training.seed = t.at("seed").get<std::uint64_t>();
    m.posterior.iterations = t.at("iterations").get<int>();
    m.posterior.converged = t.at("converged").get<bool>();
    m.posterior.log_evidence = t.at("log_evidence").get<std::vector<double>>();
    return m;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed model file: ") + e.what());
  }
}

void save_model(const BayesRidgeModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write model '" + path + "'");
  out << to_json(model);
  if (!out) throw FormatError("write failed for model '" + path + "'");
}

BayesRidgeModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open model '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

}  // namespace margin_probe::bayes
