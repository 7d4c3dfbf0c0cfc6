#include "ruelle/cli.hpp"

#include <omp.h>

#include <CLI11.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <set>
#include <stdexcept>

#include "ruelle/error.hpp"
#include "ruelle/fit.hpp"
#include "ruelle/io.hpp"
#include "ruelle/limits.hpp"
#include "ruelle/maps.hpp"
#include "ruelle/perturb.hpp"
#include "ruelle/spectral.hpp"
#include "ruelle/toral.hpp"
#include "ruelle/transfer.hpp"

namespace ruelle::cli {

namespace {

using io::format_double;

// Raised for malformed or out-of-range configuration (exit 2).
struct ValidationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

class Params {
 public:
  Params(const json& j, std::set<std::string> allowed) : j_(j) {
    allowed.insert({"command", "seed"});
    for (const auto& [key, value] : j.items())
      if (!allowed.count(key)) throw ValidationError("unknown field '" + key + "' for command " + command());
  }

  std::string command() const { return j_.value("command", std::string()); }
  bool has(const std::string& key) const { return j_.contains(key); }
  const json& raw(const std::string& key) const { return j_.at(key); }

  double num(const std::string& key, double def, double lo, double hi) const {
    double v = def;
    if (j_.contains(key)) {
      if (!j_.at(key).is_number()) throw ValidationError("'" + key + "' must be a number");
      v = j_.at(key).get<double>();
    }
    if (!(v >= lo && v <= hi)) {
      throw ValidationError("'" + key + "' = " + format_double(v) + " outside [" + format_double(lo) + ", " +
                            format_double(hi) + "]");
    }
    return v;
  }

  int integer(const std::string& key, int def, int lo, int hi) const {
    int v = def;
    if (j_.contains(key)) {
      if (!j_.at(key).is_number_integer()) throw ValidationError("'" + key + "' must be an integer");
      v = j_.at(key).get<int>();
    }
    if (v < lo || v > hi)
      throw ValidationError("'" + key + "' = " + std::to_string(v) + " outside [" + std::to_string(lo) + ", " +
                            std::to_string(hi) + "]");
    return v;
  }

  bool flag(const std::string& key, bool def) const {
    if (!j_.contains(key)) return def;
    if (!j_.at(key).is_boolean()) throw ValidationError("'" + key + "' must be a boolean");
    return j_.at(key).get<bool>();
  }

  std::string str(const std::string& key, const std::string& def) const {
    if (!j_.contains(key)) return def;
    if (!j_.at(key).is_string()) throw ValidationError("'" + key + "' must be a string");
    return j_.at(key).get<std::string>();
  }

  std::vector<double> list(const std::string& key, std::vector<double> def, double lo, double hi) const {
    if (j_.contains(key)) {
      if (!j_.at(key).is_array() || j_.at(key).empty()) throw ValidationError("'" + key + "' must be a non-empty array");
      def.clear();
      for (const auto& v : j_.at(key)) {
        if (!v.is_number()) throw ValidationError("'" + key + "' entries must be numbers");
        def.push_back(v.get<double>());
      }
    }
    for (double v : def)
      if (!(v >= lo && v <= hi)) throw ValidationError("'" + key + "' entry " + format_double(v) + " out of range");
    return def;
  }

  Vec2 point(const std::string& key, Vec2 def) const {
    if (!j_.contains(key)) return def;
    const json& v = j_.at(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
      throw ValidationError("'" + key + "' must be [x1, x2]");
    return {v[0].get<double>(), v[1].get<double>()};
  }

 private:
  const json& j_;
};

struct Output {
  std::string dir;
  std::vector<std::string> files;

  void write(const std::string& name, const std::string& content) {
    const std::string path = (std::filesystem::path(dir) / name).string();
    io::atomic_write(path, content);
    files.push_back(path);
  }
};

json complex_json(std::complex<double> z) { return json::array({z.real(), z.imag()}); }

ExpandingCircleMap map_of(const Params& p) {
  return io::parse_map(p.has("map") ? p.raw("map") : json("doubling"));
}

TrigObservable observable_of(const Params& p, const std::string& key = "observable", const std::string& def = "cos") {
  return io::parse_observable(p.has(key) ? p.raw(key) : json(def));
}

Scheme scheme_of(const Params& p) {
  const std::string s = p.str("scheme", "galerkin");
  if (s == "galerkin") return Scheme::Galerkin;
  if (s == "averaging") return Scheme::Averaging;
  throw ValidationError("scheme must be 'galerkin' or 'averaging'");
}

std::vector<double> linspace(double a, double b, int m) {
  std::vector<double> v(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) v[static_cast<std::size_t>(i)] = m == 1 ? a : a + (b - a) * i / (m - 1);
  return v;
}

json cmd_density(const Params& p, Output& out) {
  const auto map = map_of(p);
  const int n = p.integer("n", 256, 8, 4096);
  const int count = p.integer("count", 4, 2, 64);
  const bool with_projection = p.has("projection");
  std::vector<double> proj_n;
  int k_max = 0;
  if (with_projection) {
    const json pj = p.raw("projection");
    if (!pj.is_object()) throw ValidationError("'projection' must be an object");
    const Params pp(pj, {"k_max", "n"});
    k_max = pp.integer("k_max", 8, 1, 64);
    proj_n = pp.list("n", {16, 32, 64, 128, 256, 512}, 8, 4096);
  }
  const SpectralReport rep = spectral_report(map, n, count);
  io::CsvTable csv({"x", "density"});
  for (int i = 0; i < n; ++i) csv.add_row(std::vector<double>{static_cast<double>(i) / n, rep.density.c[static_cast<std::size_t>(i)]});
  out.write("density.csv", csv.str());
  json s = {{"n", n}, {"leading", rep.leading}, {"gap", rep.gap}, {"essential_bound", rep.essential_bound}};
  if (rep.spectrum.size() > 1) s["lambda2"] = std::abs(rep.spectrum[1]);
  if (with_projection) {
    io::CsvTable pc({"k", "n", "measured", "bound"});
    int violations = 0;
    double rmin = 1e300, rmax = 0.0;
    for (int k = 1; k <= k_max; ++k) {
      double prev = -1.0;
      for (double nn : proj_n) {
        const ProjectionError e = projection_error_check(TrigObservable::sine(k), static_cast<int>(nn));
        pc.add_row(std::vector<double>{static_cast<double>(k), nn, e.measured, e.bound});
        if (e.measured > e.bound) ++violations;
        if (prev > 0.0) {
          rmin = std::min(rmin, e.measured / prev);
          rmax = std::max(rmax, e.measured / prev);
        }
        prev = e.measured;
      }
    }
    out.write("projection.csv", pc.str());
    s["projection"] = {{"violations", violations}, {"ratio_min", rmin}, {"ratio_max", rmax}};
  }
  return s;
}

json cmd_spectrum(const Params& p, Output& out) {
  const auto map = map_of(p);
  const int n = p.integer("n", 256, 8, 4096);
  const int count = p.integer("count", 8, 1, 4096);
  const int order = p.integer("quad_order", 6, 4, 32);
  const bool dump = p.flag("dump_matrix", false);
  const TransferMatrix m = assemble_transfer_matrix(map, n, order);
  const LeadingMode lead = leading_mode(m);
  const auto spec = top_spectrum(m, count);
  io::CsvTable csv({"index", "re", "im", "modulus"});
  for (std::size_t i = 0; i < spec.size(); ++i)
    csv.add_row(std::vector<double>{static_cast<double>(i), spec[i].real(), spec[i].imag(), std::abs(spec[i])});
  out.write("spectrum.csv", csv.str());
  if (dump) io::write_matrix_binary((std::filesystem::path(out.dir) / "matrix.bin").string(), m.entries, {{"map", m.map_id}});
  if (dump) out.files.push_back((std::filesystem::path(out.dir) / "matrix.bin").string());
  json s = {{"n", n}, {"leading", lead.eigenvalue}, {"iterations", lead.iterations}, {"warnings", m.warnings}};
  json ev = json::array();
  for (const auto& z : spec) ev.push_back(complex_json(z));
  s["eigenvalues"] = ev;
  if (spec.size() > 1) s["lambda2"] = std::abs(spec[1]);
  return s;
}

json cmd_ly_check(const Params& p, Output& out) {
  const auto map = map_of(p);
  const auto h = observable_of(p, "observable", "cos");
  QuadratureOptions q;
  q.cells = p.integer("cells", 512, 16, 1 << 16);
  q.order = p.integer("order", 8, 2, 64);
  const int maps = p.integer("random_maps", 0, 0, 10000);
  const int polys = p.integer("random_polys", 0, 0, 10000);
  const LYReport r = verify_ly(map, h, q);
  io::CsvTable csv({"quantity", "value"});
  const std::vector<std::pair<std::string, double>> rows{
      {"l1_in", r.l1_in}, {"l1_out", r.l1_out}, {"w11_deriv_in", r.w11_deriv_in}, {"w11_deriv_out", r.w11_deriv_out},
      {"bound_rhs", r.bound_rhs}, {"lambda_star", r.lambda_star}, {"distortion", r.distortion}};
  for (const auto& [k, v] : rows) csv.add_row(std::vector<std::string>{k, format_double(v)});
  out.write("ly.csv", csv.str());
  json s = {{"l1_in", r.l1_in},         {"l1_out", r.l1_out},       {"deriv_in", r.w11_deriv_in},
            {"deriv_out", r.w11_deriv_out}, {"bound_rhs", r.bound_rhs}, {"satisfied", r.satisfied}};
  if (maps > 0 && polys > 0) {
    const std::uint64_t seed = p.has("seed") ? p.raw("seed").get<std::uint64_t>() : 1;
    const LYSuiteResult suite = ly_property_suite(maps, polys, seed, q);
    s["suite"] = {{"checks", suite.checks}, {"violations", suite.violations}, {"worst_ratio", suite.worst_ratio}};
  }
  return s;
}

GreenKuboOptions gk_options(const Params& p) {
  GreenKuboOptions o;
  o.n_grid = p.integer("n", 512, 8, 4096);
  o.l_max = p.integer("l_max", 200, 1, 100000);
  o.tail_tol = p.num("tail_tol", 1e-12, 0.0, 1.0);
  o.scheme = scheme_of(p);
  return o;
}

json cmd_variance(const Params& p, Output& out) {
  const auto map = map_of(p);
  const auto obs = observable_of(p);
  const VarianceResult v = green_kubo_variance(map, obs, gk_options(p));
  io::CsvTable csv({"k", "C_k"});
  for (std::size_t i = 0; i < v.terms.size(); ++i) csv.add_row(std::vector<double>{static_cast<double>(i), v.terms[i]});
  out.write("correlations.csv", csv.str());
  return {{"sigma2", v.sigma2},         {"raw_sigma2", v.raw_sigma2}, {"mean", v.mean},
          {"truncated_at", v.truncated_at}, {"is_coboundary", v.is_coboundary}};
}

CltModel model_of(const Params& p, int def_n = 256) {
  return CltModel(map_of(p), observable_of(p), p.integer("n", def_n, 8, 4096), scheme_of(p));
}

json cmd_lambda_curve(const Params& p, Output& out) {
  const double nu_max = p.num("nu_max", 0.1, 1e-6, 10.0);
  const int points = p.integer("points", 21, 0, 1001);
  const double window = p.num("fit_window", 0.1, 1e-6, 10.0);
  const std::vector<double> radius_nu = p.has("radius_nu") ? p.list("radius_nu", {}, -100.0, 100.0) : std::vector<double>{};
  const CltModel model = model_of(p);
  json s = {{"n", model.n()}};
  if (points > 0) {
    const LambdaCurve c = lambda_nu_curve(model, linspace(-nu_max, nu_max, points), window);
    io::CsvTable csv({"nu", "re", "im"});
    for (std::size_t i = 0; i < c.nu.size(); ++i) csv.add_row(std::vector<double>{c.nu[i], c.lambda[i].real(), c.lambda[i].imag()});
    out.write("lambda_curve.csv", csv.str());
    s["quad_coefficient"] = c.quad_coefficient;
    s["linear_coefficient"] = c.linear_coefficient;
    s["sigma2_from_curve"] = -2.0 * c.quad_coefficient;
    s["fit_points"] = c.fit_points;
  }
  if (!radius_nu.empty()) {
    const RadiusScan r = spectral_radius_scan(model, radius_nu);
    io::CsvTable csv({"nu", "radius"});
    for (std::size_t i = 0; i < r.nu.size(); ++i) csv.add_row(std::vector<double>{r.nu[i], r.radius[i]});
    out.write("radius.csv", csv.str());
    s["radius_min"] = r.min_radius;
    s["radius_max"] = r.max_radius;
  }
  return s;
}

double model_sigma2(const CltModel& model) { return green_kubo_variance(model).sigma2; }

json cmd_char_fn(const Params& p, Output& out) {
  const int n_steps = p.integer("n_steps", 256, 1, 1 << 20);
  const std::vector<double> lambdas = p.list("lambda", linspace(0.0, 3.0, 13), -1e3, 1e3);
  const CltModel model = model_of(p);
  const double sigma2 = model_sigma2(model);
  io::CsvTable csv({"lambda", "re", "im", "gaussian"});
  json vals = json::array();
  for (double l : lambdas) {
    const auto z = characteristic_function(model, l, n_steps);
    csv.add_row(std::vector<double>{l, z.real(), z.imag(), std::exp(-0.5 * sigma2 * l * l)});
    vals.push_back({l, z.real(), z.imag()});
  }
  out.write("char_fn.csv", csv.str());
  return {{"sigma2", sigma2}, {"n_steps", n_steps}, {"values", vals}};
}

json cmd_local_clt(const Params& p, Output& out) {
  const int n_steps = p.integer("n_steps", 256, 1, 1 << 20);
  const double eps = p.num("epsilon", 0.5, 1e-6, 1e6);
  LocalCltOptions o;
  o.dlambda = p.num("dlambda", 0.05, 1e-6, 1.0);
  o.tail_tol = p.num("tail_tol", 1e-6, 0.0, 1.0);
  o.nu_max = p.num("nu_max", 3.0, 1e-3, 100.0);
  std::vector<double> ys;
  if (p.has("y")) {
    ys = p.list("y", {}, -1e6, 1e6);
  } else {
    const double lo = p.num("y_min", -3.0, -1e6, 1e6), hi = p.num("y_max", 3.0, -1e6, 1e6);
    if (!(hi > lo)) throw ValidationError("y_max must exceed y_min");
    ys = linspace(lo, hi, p.integer("y_points", 61, 1, 100000));
  }
  const CltModel model = model_of(p);
  const double sigma2 = model_sigma2(model);
  const LocalCltResult r = local_clt_density(model, ys, n_steps, eps, sigma2, o);
  io::CsvTable csv({"y", "density", "gaussian"});
  for (std::size_t i = 0; i < r.y.size(); ++i) csv.add_row(std::vector<double>{r.y[i], r.density[i], r.gaussian[i]});
  out.write("local_clt.csv", csv.str());
  double dev = 0.0;
  for (std::size_t i = 0; i < r.y.size(); ++i) dev = std::max(dev, std::abs(r.density[i] - r.gaussian[i]));
  return {{"sigma2", sigma2}, {"lambda_cut", r.lambda_cut}, {"max_deviation", dev}, {"warnings", r.warnings}};
}

json cmd_clt_sim(const Params& p, Output& out, std::uint64_t seed) {
  const int n_steps = p.integer("n_steps", 1024, 1, 1 << 20);
  const int samples = p.integer("samples", 10000, 10, 10000000);
  const int bins = p.integer("bins", 40, 2, 10000);
  const CltModel model = model_of(p);
  const double sigma2 = model_sigma2(model);
  const EmpiricalClt e = empirical_clt(model, n_steps, samples, seed, sigma2, bins);
  io::CsvTable csv({"bin_lo", "bin_hi", "count"});
  for (std::size_t i = 0; i < e.bin_counts.size(); ++i)
    csv.add_row(std::vector<double>{e.bin_edges[i], e.bin_edges[i + 1], static_cast<double>(e.bin_counts[i])});
  out.write("clt_hist.csv", csv.str());
  return {{"ks_distance", e.ks_distance}, {"sigma", e.sigma}, {"sigma2", sigma2}, {"samples", samples},
          {"exact_digits", e.exact_digits}, {"seed", seed}};
}

json stability_row_json(const StabilityRow& r) {
  return {{"epsilon", r.epsilon},           {"triple_norm", r.triple_norm},   {"lambda2_drift", r.lambda2_drift},
          {"density_drift", r.density_drift}, {"leading", r.leading}};
}

json cmd_perturb(const Params& p, Output& out) {
  const auto map = map_of(p);
  const auto eps = p.list("eps", {0.02, 0.01, 0.005}, -0.1, 0.1);
  const int n = p.integer("n", 256, 64, 4096);
  const int m = p.integer("m_eigs", 4, 2, 64);
  const StabilityTable t = deterministic_stability(map, eps, n, m);
  io::CsvTable csv({"epsilon", "triple_norm", "triple_norm_upper", "lambda2_drift", "density_drift", "density_drift_coarse"});
  json rows = json::array();
  for (const auto& r : t.rows) {
    csv.add_row(std::vector<double>{r.epsilon, r.triple_norm, r.triple_norm_upper, r.lambda2_drift, r.density_drift,
                                    r.density_drift_coarse});
    rows.push_back(stability_row_json(r));
  }
  out.write("stability.csv", csv.str());
  return {{"fitted_D", t.fitted_D}, {"fitted_exponent", t.fitted_exponent}, {"rows", rows}};
}

json cmd_stochastic(const Params& p, Output& out) {
  const auto map = map_of(p);
  const auto amps = p.list("amplitudes", {0.02, 0.01}, 0.0, 1.0);
  const int n_random = p.integer("n_random", 8, 1, 1024);
  const int n = p.integer("n", 256, 64, 4096);
  const auto rows = stochastic_stability(map, amps, n_random, n);
  io::CsvTable csv({"amplitude", "triple_norm", "lambda2_drift", "density_drift", "mean_inv_lambda", "mean_B"});
  json js = json::array();
  for (const auto& r : rows) {
    csv.add_row(std::vector<double>{r.row.epsilon, r.row.triple_norm, r.row.lambda2_drift, r.row.density_drift,
                                    r.ly.mean_inv_lambda, r.ly.mean_B});
    json j = stability_row_json(r.row);
    j["mean_inv_lambda"] = r.ly.mean_inv_lambda;
    j["mean_B"] = r.ly.mean_B;
    js.push_back(j);
  }
  out.write("stochastic.csv", csv.str());
  return {{"rows", js}};
}

json cmd_contracting(const Params& p, Output& out) {
  const double kappa = p.num("kappa", ContractingCircleMap::default_kappa(), 0.0, 1.0);
  const double rho1 = p.num("rho1", ContractingCircleMap::kDefaultRho1, 0.0, 0.5);
  const double rho2 = p.num("rho2", ContractingCircleMap::kDefaultRho2, 0.0, 0.5);
  const int n_max = p.integer("n_max", 40, 4, 10000);
  QuadratureOptions q{p.integer("cells", 64, 4, 1 << 16), p.integer("order", 8, 2, 64)};
  const ContractingCircleMap cmap(kappa, rho1, rho2);
  RealFn h;
  const std::string hs = p.has("h") && p.raw("h").is_string() ? p.raw("h").get<std::string>() : "";
  if (hs == "tilted" || !p.has("h")) {
    h = [](double x) { return 1.0 + 0.5 * std::sin(2.0 * std::numbers::pi * x); };
  } else if (hs == "one") {
    h = [](double) { return 1.0; };
  } else {
    const TrigObservable ho = io::parse_observable(p.raw("h"));
    h = [ho](double x) { return ho.value(x); };
  }
  const TrigObservable phi = observable_of(p, "phi", "cos");
  const DecayResult d = contracting_decay(cmap, h, phi, n_max, q);
  io::CsvTable csv({"n", "value", "residual"});
  for (std::size_t i = 0; i < d.values.size(); ++i)
    csv.add_row(std::vector<double>{static_cast<double>(i), d.values[i], d.residuals[i]});
  out.write("contracting.csv", csv.str());
  return {{"rate", d.rate},       {"limit_mass", d.limit_mass}, {"phi_at_fixed_point", d.phi_at_fixed_point},
          {"fit_begin", d.fit_begin}, {"fit_end", d.fit_end},    {"final_residual", d.residuals.back()}};
}

ToralAutomorphism automorphism_of(const Params& p) {
  return io::parse_automorphism(p.has("automorphism") ? p.raw("automorphism") : json("cat"));
}

FourierField2D field_of(const Params& p, const std::string& key, int K, double r) {
  const json spec = p.has(key) ? p.raw(key) : json("smooth");
  if (spec.is_string() && spec.get<std::string>() == "smooth") return FourierField2D::smooth_profile(K, r);
  return FourierField2D::from_observable(io::parse_observable2d(spec), K);
}

json cmd_toral_corr(const Params& p, Output& out) {
  const auto t = automorphism_of(p);
  const int K = p.integer("K", 32, 1, 512);
  const double r = p.num("r", 3.0, 0.0, 100.0);
  const int n_max = p.integer("n_max", 12, 0, 60);
  const FourierField2D phi = field_of(p, "phi", K, r);
  const FourierField2D h = field_of(p, "h", K, r);
  const auto c = correlation_sequence(phi, h, t, n_max);
  io::CsvTable csv({"n", "re", "im"});
  std::vector<double> xs, ys;
  for (std::size_t n = 0; n < c.size(); ++n) {
    csv.add_row(std::vector<double>{static_cast<double>(n), c[n].real(), c[n].imag()});
    if (n >= 1 && std::abs(c[n]) > 1e-300) {
      xs.push_back(static_cast<double>(n));
      ys.push_back(std::log(std::abs(c[n])));
    }
  }
  out.write("toral_correlations.csv", csv.str());
  json s = {{"lambda", t.lambda()}, {"vanishing_time", correlation_vanishing_time(phi, h, t)}};
  if (xs.size() >= 2) s["fitted_rate"] = -fit_line(xs, ys).slope;
  s["target_rate"] = r * std::log(t.lambda());
  return s;
}

AnisotropicWeightParams weight_params(const Params& p) {
  AnisotropicWeightParams w;
  w.p = p.num("p", w.p, 1e-6, 100.0);
  w.cone_u = p.num("cone_u", w.cone_u, 1e-6, std::numbers::pi / 2);
  w.cone_s = p.num("cone_s", w.cone_s, 1e-6, std::numbers::pi / 2);
  w.K_cut = p.num("K_cut", w.K_cut, 0.0, 1e9);
  return w;
}

json cmd_toral_ly_scan(const Params& p, Output& out) {
  const auto t = automorphism_of(p);
  const int K = p.integer("K", 256, 64, 4096);
  const bool rows = p.flag("write_rows", false);
  const LYRatioScan s = ly_ratio_scan(t, weight_params(p), K, rows);
  io::CsvTable g({"k1", "k2"});
  json gamma = json::array();
  for (const auto& k : s.gamma_set) {
    g.add_row(std::vector<std::string>{std::to_string(k[0]), std::to_string(k[1])});
    gamma.push_back({k[0], k[1]});
  }
  out.write("gamma_set.csv", g.str());
  if (rows) {
    io::CsvTable csv({"k1", "k2", "ratio", "in_Gamma"});
    for (const auto& r : s.rows)
      csv.add_row(std::vector<std::string>{std::to_string(r.k[0]), std::to_string(r.k[1]), format_double(r.ratio),
                                           r.in_gamma ? "1" : "0"});
    out.write("ratio_scan.csv", csv.str());
  }
  return {{"max_ratio_outside_gamma", s.max_ratio_outside_gamma},
          {"argmax", {s.argmax[0], s.argmax[1]}},
          {"target", s.target},
          {"nu_estimate", s.nu_estimate},
          {"L", s.L},
          {"B", s.B},
          {"gamma", s.gamma},
          {"gamma_set_size", s.gamma_set.size()},
          {"transition_violations", s.transition_violations},
          {"passed", s.max_ratio_outside_gamma <= s.target + 1e-12}};
}

StandardPair pair_of(const Params& p, const std::string& xkey, Vec2 xdef) {
  const double b = p.num("b", 0.5, 0.5, 1.0);
  const double a = p.num("a", 1.0, 1e-9, 1e6);
  const Vec2 x = p.point(xkey, xdef);
  if (p.has("log_h")) return make_standard_pair(b, x, p.list("log_h", {}, -1e6, 1e6), a);
  return uniform_pair(b, x, a);
}

json cmd_toral_pair(const Params& p, Output& out) {
  const auto t = automorphism_of(p);
  const int n = p.integer("n", 2, 0, 30);
  const double delta = p.num("delta", 0.0, 0.0, 1.0);
  const double sep = p.num("s", 1.0, 1.0, 2.0);
  const int n_check = p.integer("n_check", 12, 0, 20);
  const auto phi = io::parse_observable2d(p.has("phi") ? p.raw("phi") : json("cos1"));
  const StandardPair pair = pair_of(p, "x", {0.1234, 0.5678});
  const StandardFamily fam = push_standard_pair(pair, t, n, delta);
  out.write("family.json", io::family_to_json(fam).dump(2) + "\n");

  StandardPair twin = pair;
  twin.x = {pair.x[0] + sep * t.v_s()[0], pair.x[1] + sep * t.v_s()[1]};
  twin.x = {twin.x[0] - std::floor(twin.x[0]), twin.x[1] - std::floor(twin.x[1])};
  io::CsvTable csv({"n", "measured", "bound", "kantorovich_bound"});
  bool within = true;
  for (int k = 0; k <= n_check; ++k) {
    const MatchingCheck m = matching_bound_check(pair, twin, sep, phi, t, k);
    csv.add_row(std::vector<double>{static_cast<double>(k), m.measured, m.bound, m.kantorovich_bound});
    within = within && m.measured <= m.bound + 1e-8;
  }
  out.write("matching.csv", csv.str());
  double mass = 0.0, worst_lip = 0.0;
  for (std::size_t i = 0; i < fam.pairs.size(); ++i) {
    mass += fam.masses[i];
    worst_lip = std::max(worst_lip, fam.pairs[i].lipschitz() / fam.pairs[i].a);
  }
  return {{"children", fam.pairs.size()},
          {"delta", fam.pairs.front().b},
          {"mass_sum", mass},
          {"worst_lipschitz_ratio", worst_lip},
          {"matching_within_bound", within}};
}

json cmd_toral_coupling(const Params& p, Output& out) {
  const auto t = automorphism_of(p);
  const int n_max = p.integer("n_max", 14, 1, 20);
  CouplingPolicy policy;
  policy.depth = p.integer("depth", policy.depth, 0, 16);
  policy.max_search_n = p.integer("max_search_n", policy.max_search_n, 1, 20);
  policy.a = p.num("a", policy.a, 1e-9, 1e6);
  policy.matching_tol = p.num("matching_tol", policy.matching_tol, 0.0, 1.0);
  const auto phi = io::parse_observable2d(p.has("phi") ? p.raw("phi") : json("cos1"));
  const StandardPair p1 = pair_of(p, "x1", {0.1234, 0.5678});
  const StandardPair p2 = pair_of(p, "x2", {0.7, 0.31});
  const CouplingExperiment e = coupling_decay_experiment(p1, p2, phi, t, n_max, policy);
  io::CsvTable csv({"n", "decay", "envelope"});
  for (std::size_t n = 0; n < e.decay.size(); ++n)
    csv.add_row(std::vector<double>{static_cast<double>(n), e.decay[n], e.envelope.empty() ? 0.0 : e.envelope[n]});
  out.write("coupling_decay.csv", csv.str());
  io::CsvTable led({"level", "n0", "s", "p_star", "c", "coupled_fraction", "uncoupled_mass"});
  for (const auto& l : e.ledger)
    led.add_row(std::vector<double>{static_cast<double>(l.level), static_cast<double>(l.n0), l.s, l.p_star, l.c,
                                    l.coupled_fraction, l.uncoupled_mass});
  out.write("coupling_ledger.csv", led.str());
  return {{"fitted_nu", e.fitted_nu}, {"levels", e.ledger.size()}, {"errors", e.errors}};
}

const std::map<std::string, std::set<std::string>>& allowed_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"density", {"map", "n", "count", "projection"}},
      {"spectrum", {"map", "n", "count", "quad_order", "dump_matrix"}},
      {"ly-check", {"map", "observable", "cells", "order", "random_maps", "random_polys"}},
      {"variance", {"map", "observable", "n", "l_max", "tail_tol", "scheme"}},
      {"lambda-curve", {"map", "observable", "n", "scheme", "nu_max", "points", "fit_window", "radius_nu"}},
      {"char-fn", {"map", "observable", "n", "scheme", "n_steps", "lambda"}},
      {"local-clt",
       {"map", "observable", "n", "scheme", "n_steps", "epsilon", "dlambda", "tail_tol", "nu_max", "y", "y_min", "y_max",
        "y_points"}},
      {"clt-sim", {"map", "observable", "n", "scheme", "n_steps", "samples", "bins"}},
      {"perturb", {"map", "eps", "n", "m_eigs"}},
      {"stochastic", {"map", "amplitudes", "n_random", "n"}},
      {"contracting", {"kappa", "rho1", "rho2", "n_max", "cells", "order", "h", "phi"}},
      {"toral-corr", {"automorphism", "K", "r", "n_max", "phi", "h"}},
      {"toral-ly-scan", {"automorphism", "K", "p", "cone_u", "cone_s", "K_cut", "write_rows"}},
      {"toral-pair", {"automorphism", "b", "a", "x", "log_h", "n", "delta", "s", "n_check", "phi"}},
      {"toral-coupling",
       {"automorphism", "b", "a", "x1", "x2", "log_h", "n_max", "depth", "max_search_n", "matching_tol", "phi"}},
  };
  return keys;
}

json error_json(const std::string& name, const std::string& module, const std::string& detail) {
  return {{"error", name}, {"module", module}, {"detail", detail}};
}

}  // namespace

const std::vector<std::string>& commands() {
  static const std::vector<std::string> c = [] {
    std::vector<std::string> v;
    for (const auto& [k, _] : allowed_keys()) v.push_back(k);
    return v;
  }();
  return c;
}

const std::vector<Recipe>& list_experiments() {
  static const std::vector<Recipe> recipes{
      {"doubling-spectrum", "hat-basis spectrum of the doubling map, n = 512", 1, 30,
       {{"command", "spectrum"}, {"map", "doubling"}, {"n", 512}, {"count", 4}}},
      {"green-kubo-variance", "Green-Kubo variance of cos(2 pi x) under doubling", 2, 5,
       {{"command", "variance"}, {"map", "doubling"}, {"observable", "cos"}}},
      {"lambda-curve", "leading twisted eigenvalue near nu = 0, n = 256", 3, 60,
       {{"command", "lambda-curve"}, {"map", "doubling"}, {"observable", "cos"}, {"n", 256}}},
      {"twisted-radius-scan", "spectral radius of the twisted operator away from nu = 0", 4, 60,
       {{"command", "lambda-curve"},
        {"map", "doubling"},
        {"observable", "cos"},
        {"n", 256},
        {"points", 0},
        {"radius_nu", {0.25, 0.5, 1.0, 2.0}}}},
      {"local-clt", "characteristic function and smoothed local CLT density", 5, 60,
       {{"command", "local-clt"}, {"map", "doubling"}, {"observable", "cos"}, {"n", 256}, {"n_steps", 256}}},
      {"clt-sim", "empirical CLT by exact orbit simulation, 10^4 samples", 6, 60,
       {{"command", "clt-sim"},
        {"map", "doubling"},
        {"observable", "cos"},
        {"n_steps", 1024},
        {"samples", 10000},
        {"seed", 1}}},
      {"ly-suite", "Lasota-Yorke inequality on random maps and trig polynomials", 7, 60,
       {{"command", "ly-check"}, {"random_maps", 10}, {"random_polys", 100}, {"seed", 1}}},
      {"projection-bound", "hat projection error against (1/n)||h||_{W11}", 8, 10,
       {{"command", "density"}, {"map", "doubling"}, {"n", 64}, {"projection", {{"k_max", 8}}}}},
      {"deterministic-stability", "triple norm and eigendata drift under small perturbations", 9, 120,
       {{"command", "perturb"}, {"map", "doubling"}, {"eps", {0.02, 0.01, 0.005}}, {"n", 256}}},
      {"stochastic-stability", "averaged random-map operator", 10, 120,
       {{"command", "stochastic"}, {"map", {{"degree", 2}, {"trig", {{{"j", 1}, {"a", 0.05}}}}}}, {"amplitudes", {0.02}},
        {"n_random", 8}, {"n", 256}}},
      {"contracting-decay", "weighted operator of the contracting circle map", 11, 10,
       {{"command", "contracting"}, {"h", "tilted"}, {"phi", "cos"}, {"n_max", 12}}},
      {"toral-fourier", "Fourier correlation decay for the cat map", 12, 30,
       {{"command", "toral-corr"}, {"automorphism", "cat"}, {"K", 32}, {"r", 3.0}, {"n_max", 12}}},
      {"anisotropic-scan", "anisotropic weight ratio scan to |k| <= 256", 13, 30,
       {{"command", "toral-ly-scan"}, {"automorphism", "cat"}, {"K", 256}}},
      {"toral-pair-matching", "push-forward of a standard pair and the matching bound", 14, 60,
       {{"command", "toral-pair"}, {"automorphism", "cat"}, {"n", 2}, {"n_check", 12}}},
      {"toral-coupling-decay", "standard-pair coupling decay with the mass ledger", 14, 60,
       {{"command", "toral-coupling"}, {"automorphism", "cat"}, {"n_max", 14}, {"depth", 3}}},
  };
  return recipes;
}

const Recipe* find_recipe(const std::string& id) {
  for (const auto& r : list_experiments())
    if (r.id == id) return &r;
  return nullptr;
}

void apply_override(json& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ValidationError("override must look like key=value");
  const std::string path = assignment.substr(0, eq), text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  json* node = &config;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (dot == std::string::npos) {
      (*node)[key] = value;
      break;
    }
    if (!(*node)[key].is_object()) (*node)[key] = json::object();
    node = &(*node)[key];
    start = dot + 1;
  }
}

RunResult run(const json& config, const RunOptions& opts) {
  RunResult res;
  if (opts.threads > 0) omp_set_num_threads(opts.threads);
  Output out{opts.out_dir, {}};
  try {
    if (!config.is_object()) throw ValidationError("config must be a JSON object");
    const std::string command = config.value("command", std::string());
    const auto it = allowed_keys().find(command);
    if (it == allowed_keys().end()) throw ValidationError("unknown command '" + command + "'");
    const Params p(config, it->second);
    std::uint64_t seed = opts.seed;
    if (config.contains("seed")) {
      if (!config.at("seed").is_number_integer() || config.at("seed").get<long long>() < 0) throw ValidationError("'seed' must be a non-negative integer");
      seed = config.at("seed").get<std::uint64_t>();
    }

    json s;
    if (command == "density") s = cmd_density(p, out);
    else if (command == "spectrum") s = cmd_spectrum(p, out);
    else if (command == "ly-check") s = cmd_ly_check(p, out);
    else if (command == "variance") s = cmd_variance(p, out);
    else if (command == "lambda-curve") s = cmd_lambda_curve(p, out);
    else if (command == "char-fn") s = cmd_char_fn(p, out);
    else if (command == "local-clt") s = cmd_local_clt(p, out);
    else if (command == "clt-sim") s = cmd_clt_sim(p, out, seed);
    else if (command == "perturb") s = cmd_perturb(p, out);
    else if (command == "stochastic") s = cmd_stochastic(p, out);
    else if (command == "contracting") s = cmd_contracting(p, out);
    else if (command == "toral-corr") s = cmd_toral_corr(p, out);
    else if (command == "toral-ly-scan") s = cmd_toral_ly_scan(p, out);
    else if (command == "toral-pair") s = cmd_toral_pair(p, out);
    else s = cmd_toral_coupling(p, out);

    s["command"] = command;
    out.write("summary.json", s.dump(2) + "\n");
    res.summary = s;
  } catch (const Error& e) {
    // Model construction failures are configuration errors; everything else is numerical.
    const bool validation = e.name() == "NonExpanding" || e.name() == "InvalidContractingMap" ||
                            e.name() == "NotHyperbolic" || e.name() == "NotSymmetric";
    res.exit_code = validation ? 2 : 3;
    res.error = error_json(e.name(), e.module(), e.what());
  } catch (const json::exception& e) {
    res.exit_code = 2;
    res.error = error_json("ValidationError", "cli", e.what());
  } catch (const std::invalid_argument& e) {
    res.exit_code = 2;
    res.error = error_json("ValidationError", "cli", e.what());
  } catch (const std::exception& e) {
    res.exit_code = 3;
    res.error = error_json("InternalError", "cli", e.what());
  }
  res.files = out.files;
  return res;
}

int main_entry(int argc, char** argv) {
  CLI::App app{"ruelle: transfer-operator experiments"};
  app.require_subcommand(1);
  std::string config_path, out_dir = "out", recipe_id;
  std::uint64_t seed = 1;
  int threads = 0;
  bool quiet = false;
  std::vector<std::string> overrides;

  auto* run_cmd = app.add_subcommand("run", "run an experiment config");
  auto* recipe_cmd = app.add_subcommand("recipe", "run a built-in recipe");
  auto* list_cmd = app.add_subcommand("list", "list built-in recipes");
  for (auto* sub : {run_cmd, recipe_cmd}) {
    sub->add_option("--config", config_path, "JSON config file");
    sub->add_option("--seed", seed, "master seed");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--threads", threads, "OpenMP threads")->check(CLI::NonNegativeNumber);
    sub->add_flag("--quiet", quiet, "do not echo the summary");
    sub->add_option("--set", overrides, "override key=value (repeatable)");
  }
  recipe_cmd->add_option("id", recipe_id, "recipe id")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (*list_cmd) {
    for (const auto& r : list_experiments())
      std::cout << r.id << "\tcriterion " << r.criterion << "\t<= " << r.budget_seconds << " s\t" << r.description
                << "\n";
    return 0;
  }

  const auto fail = [](int code, const json& err) {
    std::cerr << err.dump() << std::endl;
    return code;
  };

  json config = json::object();
  if (*recipe_cmd) {
    const Recipe* r = find_recipe(recipe_id);
    if (!r) return fail(2, error_json("ValidationError", "cli", "unknown recipe '" + recipe_id + "'"));
    config = r->config;
  }
  if (!config_path.empty()) {
    std::ifstream f(config_path);
    if (!f) return fail(2, error_json("ValidationError", "cli", "cannot read " + config_path));
    json file = json::parse(f, nullptr, false);
    if (file.is_discarded() || !file.is_object()) return fail(2, error_json("ValidationError", "cli", "config is not a JSON object"));
    config.merge_patch(file);
  }
  try {
    for (const auto& o : overrides) apply_override(config, o);
  } catch (const std::exception& e) {
    return fail(2, error_json("ValidationError", "cli", e.what()));
  }
  const bool seed_flag = run_cmd->count("--seed") + recipe_cmd->count("--seed") > 0;
  if (seed_flag) config["seed"] = seed;

  RunOptions opts{out_dir, seed, threads, quiet};
  const RunResult res = run(config, opts);
  if (res.exit_code != 0) return fail(res.exit_code, res.error);
  if (!quiet) std::cout << res.summary.dump() << std::endl;
  return 0;
}

}  // namespace ruelle::cli
