#pragma once

// Exact log-likelihood, gradient, and Hessian of the exponential-kernel Hawkes
// model via the O(n) decay recursions R, R', R''. The likelihood separates
// across target components, so the Hessian is block-diagonal per component.
//
// Parameter vector layout (natural space): for each component m in order,
//   [baseline params of m] [alpha_m0 .. alpha_m,P-1] [beta_m0 .. beta_m,P-1]
// where baseline params are: Constant -> (rate), Piecewise -> (rates...),
// Spline -> (xi_1 .. xi_N).

#include <string>
#include <vector>

#include "oflow/hawkes.hpp"

namespace oflow {

struct ParamLayout {
  int P = 1;
  std::vector<int> baseline_size;  // per component
  std::vector<int> offset;         // start of each component's block
  int total = 0;
  std::vector<std::string> names;

  int kernel_offset(int m) const { return offset[m] + baseline_size[m]; }
};

ParamLayout layout_of(const HawkesSpec& spec);

// Spec <-> flat parameter vector (natural space; positivity not enforced here).
std::vector<double> pack_params(const HawkesSpec& spec);
HawkesSpec unpack_params(const HawkesSpec& prototype, const std::vector<double>& theta);

// Log-likelihood over the events' window. Returns -infinity (never throws)
// when an event falls at non-positive intensity (possible only through
// baseline underflow).
double log_likelihood(const HawkesSpec& spec, const std::vector<EventStream>& events);

struct LikelihoodDerivatives {
  double loglik = 0.0;
  std::vector<double> gradient;
  std::vector<std::vector<double>> hessian;  // symmetric, dense
};

LikelihoodDerivatives grad_hessian(const HawkesSpec& spec,
                                   const std::vector<EventStream>& events,
                                   bool want_hessian = true);

}  // namespace oflow
