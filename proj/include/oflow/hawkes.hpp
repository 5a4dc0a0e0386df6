#pragma once

// Bivariate (or univariate) exponential-kernel marked Hawkes model: kernel
// matrix, stability check, intensity and compensator evaluation, and the
// symmetric execution-state reduction (kappa_t, gamma_t) used by the
// liquidation strategy.

#include <array>
#include <vector>

#include "oflow/baseline.hpp"
#include "oflow/common.hpp"

namespace oflow {

struct KernelMatrix {
  int P = 1;  // number of components, 1 or 2
  std::array<std::array<double, 2>, 2> alpha{{{0.0, 0.0}, {0.0, 0.0}}};  // jump sizes, 1/s
  std::array<std::array<double, 2>, 2> beta{{{1.0, 1.0}, {1.0, 1.0}}};   // decay rates, 1/s

  void validate() const;  // alpha >= 0, beta > 0, P in {1,2}
  // Spectral radius of the branching matrix [alpha_ij / beta_ij].
  double spectral_radius() const;
  bool stable() const { return spectral_radius() < 1.0; }
};

struct HawkesSpec {
  KernelMatrix kernel;
  std::vector<Baseline> baselines;  // one per component
  double m1 = 1.0;                  // constant mark size, MWh

  void validate() const;
};

// An event tagged with its component index (0 = buy, 1 = sell for P = 2).
struct MarkedEvent {
  double time = 0.0;
  int component = 0;
};

// Merge per-component streams into one time-ordered sequence. Each stream must
// be strictly increasing; ties across components keep the lower component
// first (deterministic ordering).
std::vector<MarkedEvent> merge_events(const std::vector<EventStream>& streams);

// Left-limit conditional intensity vector at time t: only events strictly
// before t contribute. O(total events) by exponential-decay recursion.
std::vector<double> intensity(const HawkesSpec& spec,
                              const std::vector<EventStream>& history, double t);

// Integrated intensity over [a, b] per component; kernel part in closed form,
// baseline part exact (constant/piecewise) or by adaptive quadrature (spline).
std::vector<double> compensator(const HawkesSpec& spec,
                                const std::vector<EventStream>& history, double a,
                                double b);

// Symmetric kernel (alpha_s self, alpha_c cross, common beta) assumed by the
// closed-form strategy.
struct SymmetricKernel {
  double alpha_s = 0.0;
  double alpha_c = 0.0;
  double beta = 1.0;

  double imbalance_jump() const { return alpha_s - alpha_c; }       // per-event kappa jump
  double kappa_decay() const { return beta; }                       // kernel decay of kappa
  double mean_reversion() const { return beta - (alpha_s - alpha_c); }  // eta = beta - atilde
};

// True when the kernel is already in symmetric form (equal diagonals, equal
// off-diagonals, one common beta).
bool is_symmetric(const KernelMatrix& k, double rel_tol = 1e-12);

// Map an arbitrary fitted kernel to the symmetric form: alpha_s and alpha_c by
// averaging, beta by alpha-weighted mean of the beta entries.
SymmetricKernel symmetric_reduction(const KernelMatrix& k);

// Extract the symmetric parameters; throws ConfigError when the kernel is not
// symmetric (callers reduce first).
SymmetricKernel as_symmetric(const KernelMatrix& k);

// The spec with its kernel replaced by the symmetric reduction (identity when
// already symmetric); baselines and mark size carry over. Requires P = 2.
HawkesSpec symmetrize(const HawkesSpec& spec);

// Execution state (kappa_t, gamma_t) of a symmetric bivariate model. `theta`
// stores the kernel part of kappa at `last_time` (the running jump accumulator
// discounted to last_time — keeping it discounted avoids the exp(beta t)
// overflow of the raw accumulator).
struct ExecState {
  double kappa = 0.0;      // lambda_plus - lambda_minus at last_time
  double gamma = 0.0;      // lambda_plus + lambda_minus at last_time
  double theta = 0.0;      // kernel part of kappa at last_time
  double gamma_kernel = 0.0;  // kernel part of gamma at last_time
  double last_time = 0.0;
};

// Full-history evaluation at time t (left limit).
ExecState exec_state(const HawkesSpec& spec, const std::vector<EventStream>& history,
                     double t);

// Incremental update: advance `state` through `events` (time-ordered, all in
// (state.last_time, t]) up to time t. Equivalent to recomputing from scratch.
ExecState advance_exec_state(const HawkesSpec& spec, ExecState state,
                             const std::vector<MarkedEvent>& events, double t);

}  // namespace oflow
