#include "oflow/json_io.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace oflow {

namespace {

using nlohmann::json;

// Doubles that may legitimately be NaN (undefined relative improvements,
// missing spreads) are stored as null; nlohmann also dumps NaN as null, so
// this keeps write/read symmetric and the files valid JSON.
json num_or_null(double x) {
  if (std::isfinite(x)) return json(x);
  return json(nullptr);
}

double num_from(const json& j, const std::string& context) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (!j.is_number()) throw DataError(context + ": expected a number");
  return j.get<double>();
}

const json& require(const json& obj, const std::string& key, const std::string& context) {
  auto it = obj.find(key);
  if (it == obj.end()) throw DataError(context + ": missing key '" + key + "'");
  return *it;
}

std::vector<double> double_vector(const json& j, const std::string& context) {
  if (!j.is_array()) throw DataError(context + ": expected an array");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& v : j) out.push_back(num_from(v, context));
  return out;
}

}  // namespace

std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t hash = 14695981039346656037ull;
  for (unsigned char c : data) {
    hash ^= static_cast<std::uint64_t>(c);
    hash *= 1099511628211ull;
  }
  return hash;
}

json manifest_to_json(const Manifest& m) {
  json j;
  j["config_hash"] = m.config_hash;
  j["seed"] = m.seed;
  j["version"] = m.version;
  return j;
}

Manifest manifest_from_json(const json& j) {
  if (!j.is_object()) throw DataError("manifest: expected an object");
  reject_unknown_keys(j, {"config_hash", "seed", "version"}, "manifest");
  Manifest m;
  m.config_hash = require(j, "config_hash", "manifest").get<std::uint64_t>();
  m.seed = require(j, "seed", "manifest").get<std::uint64_t>();
  m.version = require(j, "version", "manifest").get<std::string>();
  return m;
}

void write_manifest(const std::string& output_path, const Manifest& m) {
  write_json_file(output_path + ".manifest.json", manifest_to_json(m));
}

json load_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw DataError(path + ": JSON parse error: " + e.what());
  }
  return j;
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw DataError("write failed: " + path);
}

void reject_unknown_keys(const json& obj, const std::vector<std::string>& allowed,
                         const std::string& context) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const auto& k : allowed) {
      if (it.key() == k) {
        known = true;
        break;
      }
    }
    if (!known) throw ConfigError(context + ": unknown key '" + it.key() + "'");
  }
}

json baseline_to_json(const Baseline& b) {
  json j;
  switch (b.kind()) {
    case Baseline::Kind::Constant:
      j["kind"] = "constant";
      j["rate"] = b.constant_rate();
      break;
    case Baseline::Kind::Piecewise:
      j["kind"] = "piecewise";
      j["breakpoints"] = b.piecewise_breakpoints();
      j["rates"] = b.piecewise_rates();
      break;
    case Baseline::Kind::Spline: {
      const SplineBaseline& s = b.spline_data();
      j["kind"] = "spline";
      j["n_basis"] = s.n_basis;
      j["coeffs"] = s.coeffs;
      j["window"] = json{{"begin", s.window.begin}, {"end", s.window.end}};
      break;
    }
  }
  return j;
}

Baseline baseline_from_json(const json& j) {
  if (!j.is_object()) throw DataError("baseline: expected an object");
  const std::string kind = require(j, "kind", "baseline").get<std::string>();
  if (kind == "constant") {
    reject_unknown_keys(j, {"kind", "rate"}, "baseline");
    return Baseline::constant(num_from(require(j, "rate", "baseline"), "baseline.rate"));
  }
  if (kind == "piecewise") {
    reject_unknown_keys(j, {"kind", "breakpoints", "rates"}, "baseline");
    return Baseline::piecewise(
        double_vector(require(j, "breakpoints", "baseline"), "baseline.breakpoints"),
        double_vector(require(j, "rates", "baseline"), "baseline.rates"));
  }
  if (kind == "spline") {
    reject_unknown_keys(j, {"kind", "n_basis", "coeffs", "window"}, "baseline");
    SplineBaseline s;
    s.n_basis = require(j, "n_basis", "baseline").get<int>();
    s.coeffs = double_vector(require(j, "coeffs", "baseline"), "baseline.coeffs");
    const json& w = require(j, "window", "baseline");
    reject_unknown_keys(w, {"begin", "end"}, "baseline.window");
    s.window.begin = num_from(require(w, "begin", "baseline.window"), "baseline.window.begin");
    s.window.end = num_from(require(w, "end", "baseline.window"), "baseline.window.end");
    return Baseline::spline(std::move(s));
  }
  throw DataError("baseline: unknown kind '" + kind + "'");
}

json spec_to_json(const HawkesSpec& spec) {
  const int P = spec.kernel.P;
  json alpha = json::array();
  json beta = json::array();
  for (int i = 0; i < P; ++i) {
    json arow = json::array();
    json brow = json::array();
    for (int m = 0; m < P; ++m) {
      arow.push_back(spec.kernel.alpha[i][m]);
      brow.push_back(spec.kernel.beta[i][m]);
    }
    alpha.push_back(std::move(arow));
    beta.push_back(std::move(brow));
  }
  json baselines = json::array();
  for (const Baseline& b : spec.baselines) baselines.push_back(baseline_to_json(b));
  json j;
  j["P"] = P;
  j["alpha"] = std::move(alpha);
  j["beta"] = std::move(beta);
  j["baseline"] = std::move(baselines);
  j["m1"] = spec.m1;
  return j;
}

HawkesSpec spec_from_json(const json& j) {
  if (!j.is_object()) throw DataError("model spec: expected an object");
  reject_unknown_keys(j, {"P", "alpha", "beta", "baseline", "m1"}, "model spec");
  HawkesSpec spec;
  const int P = require(j, "P", "model spec").get<int>();
  if (P != 1 && P != 2) throw DataError("model spec: P must be 1 or 2");
  spec.kernel.P = P;
  const json& alpha = require(j, "alpha", "model spec");
  const json& beta = require(j, "beta", "model spec");
  if (!alpha.is_array() || static_cast<int>(alpha.size()) != P ||
      !beta.is_array() || static_cast<int>(beta.size()) != P)
    throw DataError("model spec: alpha/beta must be PxP arrays");
  for (int i = 0; i < P; ++i) {
    const std::vector<double> arow = double_vector(alpha[i], "model spec.alpha");
    const std::vector<double> brow = double_vector(beta[i], "model spec.beta");
    if (static_cast<int>(arow.size()) != P || static_cast<int>(brow.size()) != P)
      throw DataError("model spec: alpha/beta must be PxP arrays");
    for (int m = 0; m < P; ++m) {
      spec.kernel.alpha[i][m] = arow[m];
      spec.kernel.beta[i][m] = brow[m];
    }
  }
  const json& baseline = require(j, "baseline", "model spec");
  if (baseline.is_array()) {
    for (const auto& b : baseline) spec.baselines.push_back(baseline_from_json(b));
  } else {
    // A single object is shorthand for the same baseline on every component.
    for (int i = 0; i < P; ++i) spec.baselines.push_back(baseline_from_json(baseline));
  }
  if (static_cast<int>(spec.baselines.size()) != P)
    throw DataError("model spec: expected one baseline per component");
  spec.m1 = num_from(require(j, "m1", "model spec"), "model spec.m1");
  spec.validate();
  return spec;
}

json fit_to_json(const FitResult& fit) {
  json j;
  j["spec"] = spec_to_json(fit.spec);
  j["loglik"] = fit.loglik;
  j["n_params"] = fit.n_params;
  j["aic"] = fit.aic;
  j["converged"] = fit.converged;
  j["iterations"] = fit.iterations;
  j["gradient_norm"] = fit.gradient_norm;
  j["data_id"] = fit.data_id;
  return j;
}

FitResult fit_from_json(const json& j) {
  if (!j.is_object()) throw DataError("fit: expected an object");
  reject_unknown_keys(j,
                      {"spec", "loglik", "n_params", "aic", "converged", "iterations",
                       "gradient_norm", "data_id"},
                      "fit");
  FitResult fit;
  fit.spec = spec_from_json(require(j, "spec", "fit"));
  fit.loglik = num_from(require(j, "loglik", "fit"), "fit.loglik");
  fit.n_params = require(j, "n_params", "fit").get<int>();
  fit.aic = num_from(require(j, "aic", "fit"), "fit.aic");
  fit.converged = require(j, "converged", "fit").get<bool>();
  fit.iterations = require(j, "iterations", "fit").get<int>();
  fit.gradient_norm = num_from(require(j, "gradient_norm", "fit"), "fit.gradient_norm");
  fit.data_id = require(j, "data_id", "fit").get<std::string>();
  return fit;
}

void write_fits_file(const std::string& path, const std::vector<FitResult>& fits,
                     const Manifest& manifest) {
  json arr = json::array();
  for (const FitResult& f : fits) arr.push_back(fit_to_json(f));
  write_json_file(path, arr);
  write_manifest(path, manifest);
}

std::vector<FitResult> read_fits_file(const std::string& path) {
  const json j = load_json_file(path);
  if (!j.is_array()) throw DataError(path + ": expected an array of fits");
  std::vector<FitResult> fits;
  fits.reserve(j.size());
  for (const auto& f : j) fits.push_back(fit_from_json(f));
  return fits;
}

void write_impact_file(const std::string& path, const std::vector<ImpactBin>& bins,
                       const Manifest& manifest) {
  json root = json::object();
  for (const ImpactBin& b : bins) {
    json cell;
    cell["eta"] = b.eta;
    cell["sigma"] = b.sigma;
    cell["mean_bas"] = b.mean_bas ? json(*b.mean_bas) : json(nullptr);
    root[b.product_id][std::to_string(b.hours_to_close)] = std::move(cell);
  }
  write_json_file(path, root);
  write_manifest(path, manifest);
}

std::vector<ImpactBin> read_impact_file(const std::string& path) {
  const json root = load_json_file(path);
  if (!root.is_object()) throw DataError(path + ": expected an object keyed by product");
  std::vector<ImpactBin> bins;
  for (auto p = root.begin(); p != root.end(); ++p) {
    if (!p.value().is_object())
      throw DataError(path + ": product '" + p.key() + "' must map bins to cells");
    for (auto c = p.value().begin(); c != p.value().end(); ++c) {
      const json& cell = c.value();
      reject_unknown_keys(cell, {"eta", "sigma", "mean_bas"}, path + ": impact cell");
      ImpactBin b;
      b.product_id = p.key();
      try {
        b.hours_to_close = std::stoi(c.key());
      } catch (const std::exception&) {
        throw DataError(path + ": bin key '" + c.key() + "' is not an integer");
      }
      b.eta = num_from(require(cell, "eta", "impact cell"), "impact.eta");
      b.sigma = num_from(require(cell, "sigma", "impact cell"), "impact.sigma");
      const double bas = num_from(require(cell, "mean_bas", "impact cell"), "impact.mean_bas");
      if (std::isfinite(bas)) b.mean_bas = bas;
      bins.push_back(std::move(b));
    }
  }
  return bins;
}

namespace {

json cost_to_json(const CostBreakdown& c) {
  json j;
  j["propagator_cost"] = c.propagator_cost;
  j["market_flow_cost"] = c.market_flow_cost;
  j["spread_cost"] = c.spread_cost;
  j["temporary_cost"] = c.temporary_cost;
  j["total"] = c.total;
  return j;
}

CostBreakdown cost_from_json(const json& j) {
  reject_unknown_keys(
      j, {"propagator_cost", "market_flow_cost", "spread_cost", "temporary_cost", "total"},
      "cost breakdown");
  CostBreakdown c;
  c.propagator_cost = num_from(require(j, "propagator_cost", "cost"), "cost.propagator");
  c.market_flow_cost = num_from(require(j, "market_flow_cost", "cost"), "cost.market_flow");
  c.spread_cost = num_from(require(j, "spread_cost", "cost"), "cost.spread");
  c.temporary_cost = num_from(require(j, "temporary_cost", "cost"), "cost.temporary");
  c.total = num_from(require(j, "total", "cost"), "cost.total");
  return c;
}

json aggregate_to_json(const Aggregate& a) {
  return json{{"mean", num_or_null(a.mean)}, {"sd", num_or_null(a.sd)}, {"n", a.n}};
}

Aggregate aggregate_from_json(const json& j) {
  reject_unknown_keys(j, {"mean", "sd", "n"}, "aggregate");
  Aggregate a;
  a.mean = num_from(require(j, "mean", "aggregate"), "aggregate.mean");
  a.sd = num_from(require(j, "sd", "aggregate"), "aggregate.sd");
  a.n = require(j, "n", "aggregate").get<std::size_t>();
  return a;
}

json ci_to_json(const MeanCi& ci) {
  return json{{"mean", num_or_null(ci.mean)}, {"lo", num_or_null(ci.lo)},
              {"hi", num_or_null(ci.hi)}};
}

MeanCi ci_from_json(const json& j) {
  reject_unknown_keys(j, {"mean", "lo", "hi"}, "confidence interval");
  MeanCi ci;
  ci.mean = num_from(require(j, "mean", "ci"), "ci.mean");
  ci.lo = num_from(require(j, "lo", "ci"), "ci.lo");
  ci.hi = num_from(require(j, "hi", "ci"), "ci.hi");
  return ci;
}

json nan_matrix_to_json(const std::vector<std::vector<double>>& m) {
  json rows = json::array();
  for (const auto& row : m) {
    json r = json::array();
    for (double x : row) r.push_back(num_or_null(x));
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<std::vector<double>> nan_matrix_from_json(const json& j, const std::string& ctx) {
  if (!j.is_array()) throw DataError(ctx + ": expected an array of arrays");
  std::vector<std::vector<double>> m;
  for (const auto& row : j) m.push_back(double_vector(row, ctx));
  return m;
}

}  // namespace

json report_to_json(const BacktestReport& report) {
  json j;
  j["strategy_names"] = report.strategy_names;
  json runs = json::array();
  for (const auto& per_strategy : report.run_costs) {
    json row = json::array();
    for (const CostBreakdown& c : per_strategy) row.push_back(cost_to_json(c));
    runs.push_back(std::move(row));
  }
  j["run_costs"] = std::move(runs);
  j["relative_improvement"] = nan_matrix_to_json(report.relative_improvement);
  json cost_agg = json::array();
  for (const Aggregate& a : report.cost_agg) cost_agg.push_back(aggregate_to_json(a));
  j["cost_agg"] = std::move(cost_agg);
  json r_agg = json::array();
  for (const Aggregate& a : report.r_agg) r_agg.push_back(aggregate_to_json(a));
  j["r_agg"] = std::move(r_agg);
  json r_ci = json::array();
  for (const MeanCi& ci : report.r_ci) r_ci.push_back(ci_to_json(ci));
  j["r_ci"] = std::move(r_ci);
  j["curve_times"] = report.curve_times;
  j["mean_cum_diff"] = nan_matrix_to_json(report.mean_cum_diff);
  return j;
}

BacktestReport report_from_json(const json& j) {
  if (!j.is_object()) throw DataError("report: expected an object");
  reject_unknown_keys(j,
                      {"strategy_names", "run_costs", "relative_improvement", "cost_agg",
                       "r_agg", "r_ci", "curve_times", "mean_cum_diff"},
                      "report");
  BacktestReport report;
  for (const auto& s : require(j, "strategy_names", "report"))
    report.strategy_names.push_back(s.get<std::string>());
  for (const auto& row : require(j, "run_costs", "report")) {
    std::vector<CostBreakdown> per_strategy;
    for (const auto& c : row) per_strategy.push_back(cost_from_json(c));
    report.run_costs.push_back(std::move(per_strategy));
  }
  report.relative_improvement =
      nan_matrix_from_json(require(j, "relative_improvement", "report"), "report.r");
  for (const auto& a : require(j, "cost_agg", "report"))
    report.cost_agg.push_back(aggregate_from_json(a));
  for (const auto& a : require(j, "r_agg", "report"))
    report.r_agg.push_back(aggregate_from_json(a));
  for (const auto& ci : require(j, "r_ci", "report"))
    report.r_ci.push_back(ci_from_json(ci));
  report.curve_times = double_vector(require(j, "curve_times", "report"), "report.curve_times");
  report.mean_cum_diff =
      nan_matrix_from_json(require(j, "mean_cum_diff", "report"), "report.mean_cum_diff");
  return report;
}

void write_report_file(const std::string& path, const BacktestReport& report,
                       const Manifest& manifest) {
  write_json_file(path, report_to_json(report));
  write_manifest(path, manifest);
}

BacktestReport read_report_file(const std::string& path) {
  const json j = load_json_file(path);
  return report_from_json(j);
}

}  // namespace oflow
