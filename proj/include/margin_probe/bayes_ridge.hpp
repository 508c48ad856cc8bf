#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "margin_probe/dataset.hpp"
#include "margin_probe/features.hpp"

namespace margin_probe::bayes {

struct FitOptions {
  double hyper_a = 1e-6;  // Gamma hyperprior shape terms for both precisions
  double hyper_b = 1e-6;  // and rate terms; 1e-6 is effectively flat
  int max_iterations = 300;
  double tolerance = 1e-4;  // max |delta m| between iterations
  double noise_precision_cap = 1e12;
  double initial_weight_precision = 1.0;

  /// When set, (weight precision, noise precision) are held fixed and no
  /// evidence updates run.
  std::optional<std::pair<double, double>> fixed_precisions;
};

/// Gaussian posterior over weights of a linear model on a centered design.
/// The intercept is not a weight: it follows from the target and design means
/// and is never regularized.
struct Posterior {
  Eigen::VectorXd mean;        // m
  Eigen::MatrixXd covariance;  // S = (lambda I + beta Phi^T Phi)^-1
  Eigen::VectorXd design_mean;
  double target_mean = 0.0;
  double weight_precision = 1.0;  // lambda
  double noise_precision = 1.0;   // beta
  int iterations = 0;
  bool converged = false;
  std::vector<double> log_evidence;  // one entry per evaluated (lambda, beta)

  double predict_mean(const Eigen::VectorXd& phi) const;
  double predict_variance(const Eigen::VectorXd& phi) const;
};

/// Evidence-maximization fit. `phi` is N x p (not centered), `targets` N.
/// Throws SingularDesign when lambda I + beta Phi^T Phi is numerically singular
/// at the starting hyperparameters (e.g. constant targets).
Posterior fit_posterior(Eigen::MatrixXd phi, const Eigen::VectorXd& targets, const FitOptions& options = {});

/// Log marginal likelihood including the Gamma hyperprior terms.
double log_evidence(std::size_t n, const Eigen::VectorXd& gram_eigenvalues, double weight_precision,
                    double noise_precision, double rss, double weight_sq_norm, const FitOptions& options);

struct Prediction {
  double mean = 0.0;
  double stddev = 0.0;
};

struct TrainingInfo {
  std::size_t n_rows = 0;
  std::uint64_t seed = 0;
};

struct BayesRidgeModel {
  features::ScalerStats scaler;
  features::MonomialTable monomials{4};
  Posterior posterior;
  TrainingInfo training;

  Prediction predict(const features::RawFeatures& raw) const;
  double predict_mean(const features::RawFeatures& raw) const;
};

/// Fits scaler, expansion and posterior on raw features and margin labels.
BayesRidgeModel train(std::span<const features::RawFeatures> x, std::span<const double> y, std::uint64_t seed,
                      const FitOptions& options = {}, int degree = 4);
BayesRidgeModel train(const std::vector<dataset::ProbeRecord>& rows, std::uint64_t seed,
                      const FitOptions& options = {}, int degree = 4);

double rmse(std::span<const double> predictions, std::span<const double> labels);
double rmse(const BayesRidgeModel& model, const std::vector<dataset::ProbeRecord>& rows);

inline constexpr const char* kModelSchema = "margin-probe/bayes-ridge";
inline constexpr int kModelSchemaVersion = 1;

std::string to_json(const BayesRidgeModel& model);
BayesRidgeModel from_json(const std::string& text);
void save_model(const BayesRidgeModel& model, const std::string& path);
BayesRidgeModel load_model(const std::string& path);

}  // namespace margin_probe::bayes
