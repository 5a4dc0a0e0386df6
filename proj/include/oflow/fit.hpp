#pragma once

// Maximum-likelihood calibration: box-constrained quasi-Newton optimization in
// log-parameter space with deterministic multi-start, plus AIC model ranking.

#include <string>
#include <vector>

#include "oflow/likelihood.hpp"

namespace oflow {

struct FitConfig {
  enum class Model { Univariate, Bivariate, Poisson };

  Model model = Model::Bivariate;
  Baseline::Kind baseline = Baseline::Kind::Constant;
  int n_basis = 10;       // spline baseline resolution
  int n_piecewise = 8;    // piecewise baseline: uniform segment count
  double m1 = 1.0;        // constant mark size carried into the spec

  int restarts = 5;
  int max_iterations = 500;
  double grad_tol = 1e-5;
  double f_rel_tol = 1e-9;
  double log_bound = 20.0;  // box half-width for log(alpha), log(beta), xi
};

struct FitResult {
  HawkesSpec spec;
  double loglik = 0.0;
  int n_params = 0;  // K, count of optimized parameters
  double aic = 0.0;  // -2 loglik + 2 K
  bool converged = false;
  int iterations = 0;
  double gradient_norm = 0.0;  // projected-gradient norm in scaled space
  std::string data_id;         // identity of the fitted dataset
};

// Fit the configured model to the event streams (one per component; the
// bivariate model expects {buy, sell} in that order). Requires >= 10 events
// per component. Never throws on non-convergence: the flag reports it.
FitResult fit_mle(const std::vector<EventStream>& events, const FitConfig& config,
                  const std::string& data_id = "");

struct ModelRanking {
  std::vector<std::size_t> order;                 // fit indices, best AIC first
  std::vector<std::vector<double>> delta_aic;     // [i][j] = aic_i - aic_j
  std::vector<std::vector<double>> delta_loglik;  // [i][j] = ll_i - ll_j
};

// Rank fits of the same data by AIC (ascending). Mixing datasets is an error.
ModelRanking select_model(const std::vector<FitResult>& fits);

}  // namespace oflow
