// Declarative experiment runner: parse a scenario JSON file, validate its
// schema, dispatch one experiment, and emit deterministic artifacts — a
// summary JSON (floats rounded to 12 significant digits, no wall-clock
// content), per-iterate trace CSVs, and binary field dumps.
//
// Exit-code contract (mirrored by the eclab binary):
//   0  experiment ran and satisfied its contract
//   1  validation failure: malformed scenario or a rejected gap hypothesis
//   2  iteration ran but failed its contract (non-convergence, tolerance miss)
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "eclab/cohomology.hpp"
#include "eclab/currents.hpp"
#include "eclab/grid.hpp"
#include "eclab/growth.hpp"
#include "eclab/io.hpp"
#include "eclab/smear.hpp"
#include "eclab/solver.hpp"
#include "eclab/torus_map.hpp"

namespace eclab {

struct ValidationError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Scenario hashing and float canonicalization
// ---------------------------------------------------------------------------

// FNV-1a over the canonical (sorted-key) dump: stable across platforms, so
// rerunning a scenario anywhere reproduces the hash embedded in its summary.
inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string scenario_hash(const nlohmann::json& scenario) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(scenario.dump())));
  return std::string("fnv1a:") + buf;
}

// Round every float leaf to 12 significant digits; non-finite values become
// null so the summary never depends on platform NaN formatting.
inline nlohmann::json canonical_floats(const nlohmann::json& j) {
  if (j.is_number_float()) {
    const double v = j.get<double>();
    if (!std::isfinite(v)) return nullptr;
    if (v == 0.0) return 0.0;  // normalize signed zeros
    return round_sig12(v);
  }
  if (j.is_array()) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& e : j) out.push_back(canonical_floats(e));
    return out;
  }
  if (j.is_object()) {
    nlohmann::json out = nlohmann::json::object();
    for (auto it = j.begin(); it != j.end(); ++it) out[it.key()] = canonical_floats(it.value());
    return out;
  }
  return j;
}

// ---------------------------------------------------------------------------
// Schema helpers
// ---------------------------------------------------------------------------

namespace detail {

inline const nlohmann::json& require_field(const nlohmann::json& j, const char* key) {
  if (!j.is_object() || !j.contains(key))
    throw ValidationError(std::string("scenario: missing required field \"") + key + "\"");
  return j.at(key);
}

inline double require_number(const nlohmann::json& j, const char* key) {
  const auto& v = require_field(j, key);
  if (!v.is_number()) throw ValidationError(std::string("scenario: \"") + key + "\" must be a number");
  return v.get<double>();
}

inline int require_int(const nlohmann::json& j, const char* key) {
  const auto& v = require_field(j, key);
  if (!v.is_number_integer())
    throw ValidationError(std::string("scenario: \"") + key + "\" must be an integer");
  return v.get<int>();
}

inline std::vector<double> require_vector(const nlohmann::json& j, const char* key,
                                          std::size_t len) {
  const auto& v = require_field(j, key);
  if (!v.is_array() || v.size() != len)
    throw ValidationError(std::string("scenario: \"") + key + "\" must be an array of length " +
                          std::to_string(len));
  std::vector<double> out;
  out.reserve(len);
  for (const auto& e : v) {
    if (!e.is_number())
      throw ValidationError(std::string("scenario: \"") + key + "\" entries must be numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

inline bool power_of_two(int v) { return v >= 8 && (v & (v - 1)) == 0; }

}  // namespace detail

// Band-limited analytic form described as, per component, a list of Fourier
// terms {"freq": [m...], "cos": c, "sin": s}.
inline FormFunction form_function_from_json(const nlohmann::json& j, int n, int degree) {
  const std::size_t ncomp = static_cast<std::size_t>(binomial(n, degree));
  if (!j.is_array() || j.size() != ncomp)
    throw ValidationError("form spec: expected one term list per component (" +
                          std::to_string(ncomp) + " components)");
  std::vector<std::vector<FourierTerm>> terms(ncomp);
  for (std::size_t c = 0; c < ncomp; ++c) {
    if (!j[c].is_array()) throw ValidationError("form spec: each component must be a term array");
    for (const auto& tj : j[c]) {
      FourierTerm t;
      const auto& fr = detail::require_field(tj, "freq");
      if (!fr.is_array() || int(fr.size()) != n)
        throw ValidationError("form spec: freq length must equal the torus dimension");
      for (int a = 0; a < n; ++a) t.freq[std::size_t(a)] = fr[std::size_t(a)].get<int>();
      t.cos_coef = tj.value("cos", 0.0);
      t.sin_coef = tj.value("sin", 0.0);
      terms[c].push_back(t);
    }
  }
  FormFunction out;
  out.n = n;
  out.degree = degree;
  out.eval = [terms, n](const double* x, double* val) {
    for (std::size_t c = 0; c < terms.size(); ++c) {
      double acc = 0.0;
      for (const FourierTerm& t : terms[c]) {
        double ph = 0.0;
        for (int a = 0; a < n; ++a) ph += t.freq[std::size_t(a)] * x[a];
        ph *= kTwoPi;
        acc += t.cos_coef * std::cos(ph) + t.sin_coef * std::sin(ph);
      }
      val[c] = acc;
    }
  };
  return out;
}

// ---------------------------------------------------------------------------
// Scenario
// ---------------------------------------------------------------------------

inline const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = {
      "eigencurrent",   "invariant_plane",      "measure_top_degree", "curve_preimages",
      "growth_rates",   "smear_demo",           "expansion_diagnostic", "uniqueness"};
  return names;
}

struct Scenario {
  nlohmann::json raw;
  std::string experiment;
  std::optional<TorusMap> map;
  SolverConfig cfg;
  std::uint64_t seed = 1;
  std::string out_dir = "out";  // default; the CLI --out flag overrides
};

// Full schema validation; throws ValidationError with a message naming the
// offending field.  Experiment preconditions that need measurement (the gap
// hypothesis) are checked at run time, still before any solver iteration.
inline Scenario parse_scenario(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("scenario: top level must be a JSON object");
  Scenario s;
  s.raw = j;
  const auto& ex = detail::require_field(j, "experiment");
  if (!ex.is_string()) throw ValidationError("scenario: \"experiment\" must be a string");
  s.experiment = ex.get<std::string>();
  const auto& names = experiment_names();
  if (std::find(names.begin(), names.end(), s.experiment) == names.end()) {
    std::string all;
    for (const auto& nm : names) all += (all.empty() ? "" : ", ") + nm;
    throw ValidationError("scenario: unknown experiment \"" + s.experiment + "\" (expected one of " +
                          all + ")");
  }

  if (j.contains("map")) {
    try {
      s.map = map_from_json(j.at("map"));
    } catch (const std::exception& e) {
      throw ValidationError(std::string("scenario: invalid map spec: ") + e.what());
    }
  } else if (s.experiment != "smear_demo") {
    throw ValidationError("scenario: missing required field \"map\"");
  }

  if (j.contains("N")) {
    const auto& nn = j.at("N");
    if (!nn.is_number_integer() || !detail::power_of_two(nn.get<int>()))
      throw ValidationError("scenario: \"N\" must be a power of two >= 8");
    s.cfg.N = nn.get<int>();
  }
  if (j.contains("seed")) {
    const auto& sd = j.at("seed");
    if (!sd.is_number_unsigned() && !sd.is_number_integer())
      throw ValidationError("scenario: \"seed\" must be a non-negative integer");
    const long long v = sd.get<long long>();
    if (v < 0) throw ValidationError("scenario: \"seed\" must be a non-negative integer");
    s.seed = static_cast<std::uint64_t>(v);
  }
  if (j.contains("out")) {
    if (!j.at("out").is_string()) throw ValidationError("scenario: \"out\" must be a string");
    s.out_dir = j.at("out").get<std::string>();
  }

  if (j.contains("solver")) {
    const auto& so = j.at("solver");
    if (!so.is_object()) throw ValidationError("scenario: \"solver\" must be an object");
    if (so.contains("tol_weak")) {
      s.cfg.tol_weak = so.at("tol_weak").get<double>();
      if (!(s.cfg.tol_weak > 0.0)) throw ValidationError("scenario: solver.tol_weak must be > 0");
    }
    if (so.contains("min_iterates")) s.cfg.min_iterates = so.at("min_iterates").get<int>();
    if (so.contains("max_iterates")) s.cfg.max_iterates = so.at("max_iterates").get<int>();
    if (s.cfg.min_iterates < 0 || s.cfg.max_iterates < 1 ||
        s.cfg.min_iterates > s.cfg.max_iterates)
      throw ValidationError("scenario: need 0 <= solver.min_iterates <= solver.max_iterates, max >= 1");
    if (so.contains("dict_cutoff")) {
      s.cfg.dict_cutoff = so.at("dict_cutoff").get<int>();
      if (s.cfg.dict_cutoff < 0 || 2 * s.cfg.dict_cutoff >= s.cfg.N)
        throw ValidationError("scenario: solver.dict_cutoff must satisfy 0 <= cutoff < N/2");
    }
    if (so.contains("covering_path")) s.cfg.covering_path = so.at("covering_path").get<bool>();
    if (so.contains("growth_window")) {
      s.cfg.growth_window = so.at("growth_window").get<int>();
      if (s.cfg.growth_window < 2) throw ValidationError("scenario: solver.growth_window must be >= 2");
    }
    if (so.contains("gap_tol")) {
      s.cfg.gap_tol = so.at("gap_tol").get<double>();
      if (!(s.cfg.gap_tol >= 0.0)) throw ValidationError("scenario: solver.gap_tol must be >= 0");
    }
  }

  // Experiment-specific required fields, checked before any compute.
  const auto need_map_dim = [&](int dim) {
    if (!s.map || s.map->dim() != dim)
      throw ValidationError("scenario: experiment \"" + s.experiment + "\" needs a " +
                            std::to_string(dim) + "-torus map");
  };
  const auto need_class = [&](int k) {
    if (!s.map) throw ValidationError("scenario: missing required field \"map\"");
    const int n = s.map->dim();
    if (k < 1 || k > n)
      throw ValidationError("scenario: \"degree\" must lie between 1 and the torus dimension");
    (void)detail::require_vector(j, "class", static_cast<std::size_t>(binomial(n, k)));
    const double lam = detail::require_number(j, "lambda");
    if (lam == 0.0) throw ValidationError("scenario: \"lambda\" must be nonzero");
  };

  if (s.experiment == "eigencurrent") {
    need_class(detail::require_int(j, "degree"));
    if (j.contains("initial_potential"))
      (void)form_function_from_json(j.at("initial_potential"), s.map->dim(),
                                    detail::require_int(j, "degree") - 1);
  } else if (s.experiment == "invariant_plane") {
    const auto& basis = detail::require_field(j, "basis");
    if (!basis.is_array() || basis.empty())
      throw ValidationError("scenario: \"basis\" must be a non-empty array of column vectors");
    for (const auto& col : basis)
      if (!col.is_array() || int(col.size()) != s.map->dim())
        throw ValidationError("scenario: each basis column must have one entry per dimension");
  } else if (s.experiment == "measure_top_degree") {
    need_map_dim(1);
    if (j.contains("moments") && j.at("moments").get<int>() < 1)
      throw ValidationError("scenario: \"moments\" must be >= 1");
    if (j.contains("density_N") && !detail::power_of_two(j.at("density_N").get<int>()))
      throw ValidationError("scenario: \"density_N\" must be a power of two >= 8");
  } else if (s.experiment == "curve_preimages") {
    need_map_dim(2);
    need_class(1);
    const double delta = j.value("delta", 4e-3);
    if (!(delta > 0.0) || delta >= 0.5)
      throw ValidationError("scenario: \"delta\" must lie in (0, 0.5)");
    if (j.value("iterates", 12) < 1)
      throw ValidationError("scenario: \"iterates\" must be >= 1");
  } else if (s.experiment == "growth_rates") {
    if (!s.map) throw ValidationError("scenario: missing required field \"map\"");
    if (j.contains("degrees")) {
      for (const auto& d : j.at("degrees")) {
        const int k = d.get<int>();
        if (k < 0 || k > s.map->dim())
          throw ValidationError("scenario: \"degrees\" entries must lie in [0, n]");
      }
    }
  } else if (s.experiment == "smear_demo") {
    const auto& sm = detail::require_field(j, "smear");
    try {
      (void)smear_spec_from_json(sm);
    } catch (const std::exception& e) {
      throw ValidationError(std::string("scenario: invalid smear spec: ") + e.what());
    }
    const auto& atoms = detail::require_field(j, "atoms");
    if (!atoms.is_array() || atoms.empty())
      throw ValidationError("scenario: \"atoms\" must be a non-empty array");
    const int n = int(smear_spec_from_json(sm).n);
    for (const auto& a : atoms) {
      (void)detail::require_vector(a, "x", static_cast<std::size_t>(n));
      (void)detail::require_number(a, "weight");
    }
  } else if (s.experiment == "expansion_diagnostic") {
    if (!s.map) throw ValidationError("scenario: missing required field \"map\"");
    (void)detail::require_vector(j, "x0", static_cast<std::size_t>(s.map->dim()));
    const double eps = detail::require_number(j, "eps");
    if (!(eps > 0.0) || eps >= 0.25) throw ValidationError("scenario: \"eps\" must lie in (0, 0.25)");
    if (detail::require_int(j, "k_max") < 1)
      throw ValidationError("scenario: \"k_max\" must be >= 1");
  } else if (s.experiment == "uniqueness") {
    const int k = detail::require_int(j, "degree");
    need_class(k);
    for (const char* key : {"initializer_a", "initializer_b"})
      if (j.contains(key)) (void)form_function_from_json(j.at(key), s.map->dim(), k - 1);
  }
  return s;
}

inline Scenario load_scenario(const std::filesystem::path& file) {
  std::ifstream is(file);
  if (!is) throw ValidationError("scenario: cannot open " + file.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(is);
  } catch (const std::exception& e) {
    throw ValidationError(std::string("scenario: JSON parse failure: ") + e.what());
  }
  return parse_scenario(j);
}

// ---------------------------------------------------------------------------
// Artifact writers
// ---------------------------------------------------------------------------

namespace detail {

inline std::string fmt12(double v) {
  if (!std::isfinite(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline void write_trace_csv(const std::filesystem::path& file, const SolverTrace& tr) {
  std::ofstream os(file);
  if (!os) throw std::runtime_error("trace: cannot open " + file.string());
  os << "iterate,weak_residual,potential_delta,ratio_fit\n";
  for (std::size_t i = 0; i < tr.weak_residual.size(); ++i) {
    os << (i + 1) << ',' << fmt12(tr.weak_residual[i]) << ',' << fmt12(tr.potential_delta[i])
       << ',';
    if (i > 0 && tr.potential_delta[i - 1] > 0.0)
      os << fmt12(tr.potential_delta[i] / tr.potential_delta[i - 1]);
    os << '\n';
  }
}

inline void write_curve_trace_csv(const std::filesystem::path& file, const CurveTrace& tr) {
  std::ofstream os(file);
  if (!os) throw std::runtime_error("trace: cannot open " + file.string());
  os << "iterate,weak_residual,potential_delta,ratio_fit\n";
  // Rows exist only for paired steps; with pair_each the step index is the
  // iterate, otherwise only the final iterate appears.
  const std::size_t rows = tr.distance.size();
  for (std::size_t i = 0; i < rows; ++i) {
    const int iterate = (rows > 1) ? int(i + 1) : tr.iterates;
    os << iterate << ',' << fmt12(tr.distance[i]) << ',';
    if (i > 0 && i - 1 < tr.pairing_delta.size()) os << fmt12(tr.pairing_delta[i - 1]);
    os << ',';
    if (i > 1 && tr.pairing_delta[i - 2] > 0.0)
      os << fmt12(tr.pairing_delta[i - 1] / tr.pairing_delta[i - 2]);
    os << '\n';
  }
}

inline nlohmann::json gap_json(const GapReport& g) {
  return nlohmann::json{{"k", g.k},
                        {"lambda_abs", g.lambda_abs},
                        {"growth_hat", g.growth_hat},
                        {"margin", g.margin},
                        {"covering_path", g.covering_path},
                        {"admissible", g.admissible}};
}

inline nlohmann::json trace_json(const SolverTrace& tr) {
  return nlohmann::json{{"iterates", tr.iterates},
                        {"converged", tr.converged},
                        {"weak_residual", tr.weak_residual.empty() ? 0.0 : tr.weak_residual.back()},
                        {"ratio_fit", tr.ratio_fit},
                        {"predicted_ratio", tr.predicted_ratio}};
}

inline nlohmann::json positivity_json(const PositivityReport& p) {
  return nlohmann::json{{"min_density", p.min_density},
                        {"max_density", p.max_density},
                        {"mass", p.mass},
                        {"positive", p.positive}};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Experiment dispatch
// ---------------------------------------------------------------------------

struct RunArtifacts {
  int exit_code = 0;
  nlohmann::json summary;
  std::vector<std::string> files;  // artifact names relative to the output dir
};

namespace detail {

inline int run_eigencurrent(const Scenario& s, const std::filesystem::path& out,
                            nlohmann::json& sum, std::vector<std::string>& files) {
  const TorusMap& f = *s.map;
  const int k = require_int(s.raw, "degree");
  const double lambda = require_number(s.raw, "lambda");
  const auto wv = require_vector(s.raw, "class", static_cast<std::size_t>(binomial(f.dim(), k)));
  Eigen::VectorXd w(long(wv.size()));
  for (std::size_t i = 0; i < wv.size(); ++i) w(long(i)) = wv[i];

  std::optional<FormFunction> tau0;
  if (s.raw.contains("initial_potential"))
    tau0 = form_function_from_json(s.raw.at("initial_potential"), f.dim(), k - 1);

  const EigencurrentResult res = eigencurrent(f, k, w, lambda, tau0 ? &*tau0 : nullptr, s.cfg);
  sum["degree"] = k;
  sum["lambda"] = lambda;
  sum["class"] = wv;
  sum["gap"] = gap_json(res.gap);
  sum["trace"] = trace_json(res.trace);
  sum["pairings"] = res.pairings;
  if (k == f.dim()) sum["positivity"] = positivity_json(positivity_check(top_density(res)));
  if (s.raw.value("holder", false)) {
    const HolderVerification hv = holder_verify(f, res, s.cfg);
    sum["holder"] = nlohmann::json{{"lip", hv.lip},           {"m", hv.m},
                                   {"M", hv.M},               {"alpha_bound", hv.alpha_bound},
                                   {"alpha_emp", hv.alpha_emp}, {"r_squared", hv.r_squared},
                                   {"degenerate", hv.degenerate}, {"passed", hv.passed}};
  }
  write_trace_csv(out / "trace.csv", res.trace);
  files.push_back("trace.csv");
  if (s.raw.value("dump_potential", true)) {
    dump_field(res.potential, out, "potential");
    files.push_back("potential.json");
  }
  return res.trace.converged ? 0 : 2;
}

inline int run_invariant_plane(const Scenario& s, const std::filesystem::path& out,
                               nlohmann::json& sum, std::vector<std::string>& files) {
  const TorusMap& f = *s.map;
  const auto& basis = s.raw.at("basis");
  const int n = f.dim(), d = int(basis.size());
  Eigen::MatrixXd W(n, d);
  for (int c = 0; c < d; ++c)
    for (int r = 0; r < n; ++r) W(r, c) = basis[std::size_t(c)][std::size_t(r)].get<double>();

  const InvariantPlaneResult res = invariant_plane(f, W, s.cfg);
  sum["basis"] = basis;
  nlohmann::json gm = nlohmann::json::array();
  for (int r = 0; r < d; ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (int c = 0; c < d; ++c) row.push_back(res.g(r, c));
    gm.push_back(row);
  }
  sum["g"] = gm;
  sum["gap"] = gap_json(res.gap);
  sum["trace"] = trace_json(res.trace);
  std::vector<double> comm(res.commutation.data(), res.commutation.data() + res.commutation.size());
  sum["commutation"] = comm;
  write_trace_csv(out / "trace.csv", res.trace);
  files.push_back("trace.csv");
  for (std::size_t c = 0; c < res.potentials.size(); ++c) {
    const std::string name = "potential_" + std::to_string(c);
    dump_field(res.potentials[c], out, name);
    files.push_back(name + ".json");
  }
  return res.trace.converged ? 0 : 2;
}

inline int run_measure(const Scenario& s, const std::filesystem::path& out, nlohmann::json& sum,
                       std::vector<std::string>& files) {
  const TorusMap& f = *s.map;
  const int M = s.raw.value("moments", 64);
  const int modes = s.raw.value("modes", 160);
  const int grid_N = s.raw.value("grid_N", 4096);
  const int terms = s.raw.value("orbit_terms", 48);
  const int density_N = s.raw.value("density_N", 2048);

  const MeasureMoments mm = invariant_measure_moments(f, M, modes, grid_N, terms);
  sum["moments"] = M;
  sum["tail_bound"] = mm.tail_bound;
  nlohmann::json mh = nlohmann::json::array();
  for (const cplx& z : mm.mu_hat) mh.push_back({z.real(), z.imag()});
  sum["mu_hat"] = mh;

  const auto fej = fejer_density(mm, density_N);
  const auto shp = sharp_density(mm, density_N);
  sum["fejer_positivity"] = positivity_json(positivity_check(fej));
  sum["sharp_positivity"] = positivity_json(positivity_check(shp));

  const int checks = s.raw.value("oracle_checks", 0);
  if (checks > 0) {
    std::mt19937_64 rng(s.seed);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    double worst = 0.0;
    for (int t = 0; t < checks; ++t) {
      std::vector<double> ac(9, 0.0), as(9, 0.0);
      for (int m = 1; m <= 8; ++m) {
        ac[std::size_t(m)] = U(rng) / m;
        as[std::size_t(m)] = U(rng) / m;
      }
      FormFunction phi;
      phi.n = 1;
      phi.degree = 0;
      phi.eval = [ac, as](const double* x, double* v) {
        double acc = 0.0;
        for (int m = 1; m <= 8; ++m)
          acc += ac[std::size_t(m)] * std::cos(kTwoPi * m * x[0]) +
                 as[std::size_t(m)] * std::sin(kTwoPi * m * x[0]);
        v[0] = acc;
      };
      worst = std::max(worst, std::abs(measure_integral(mm, phi, grid_N) - transfer_oracle(f, phi)));
    }
    sum["oracle"] = nlohmann::json{{"checks", checks}, {"max_difference", worst}};
  }

  const PeriodicGrid g{1, density_N};
  FormField dens(g, 1);
  dens.comp[0] = fej;
  dump_field(dens, out, "density");
  files.push_back("density.json");
  return 0;
}

inline int run_curve(const Scenario& s, const std::filesystem::path& out, nlohmann::json& sum,
                     std::vector<std::string>& files) {
  const TorusMap& f = *s.map;
  const auto wv = require_vector(s.raw, "class", 2);
  Eigen::VectorXd w(2);
  w << wv[0], wv[1];
  const double lambda = require_number(s.raw, "lambda");
  const int iterates = s.raw.value("iterates", 12);
  const double delta = s.raw.value("delta", 4e-3);
  const bool pair_each = s.raw.value("pair_each", true);
  const double tol_distance = s.raw.value("tol_distance", 1e-4);

  const EigencurrentResult ref = eigencurrent(f, 1, w, lambda, s.cfg);

  CurveCurrent Y;
  if (s.raw.contains("curve")) {
    for (const auto& cj : s.raw.at("curve")) {
      CurveCurrent::Component comp;
      for (const auto& vj : cj.at("vertices"))
        comp.vertices.emplace_back(vj.at(0).get<double>(), vj.at(1).get<double>());
      comp.winding =
          Eigen::Vector2i(cj.at("winding").at(0).get<int>(), cj.at("winding").at(1).get<int>());
      Y.components.push_back(std::move(comp));
    }
  } else {
    // Default tracer: the circle {x1 = 0} with winding (0, 1).
    CurveCurrent::Component comp;
    const int V = 256;
    for (int i = 0; i < V; ++i) comp.vertices.emplace_back(0.0, double(i) / V);
    comp.winding = Eigen::Vector2i(0, 1);
    Y.components.push_back(std::move(comp));
  }

  const FourierDictionary D = fourier_dictionary(2, 1, s.cfg.dict_cutoff);
  const CurveTrace tr =
      curve_preimage_trace(f, Y, lambda, iterates, delta, D, &ref.pairings, pair_each);

  sum["class"] = wv;
  sum["lambda"] = lambda;
  sum["iterates"] = iterates;
  sum["delta"] = delta;
  sum["gap"] = gap_json(ref.gap);
  sum["reference"] = trace_json(ref.trace);
  sum["distance"] = tr.distance.empty() ? -1.0 : tr.distance.back();
  sum["distance_sequence"] = tr.distance;
  sum["vertex_counts"] = tr.vertex_counts;
  sum["lengths"] = tr.lengths;
  const Eigen::Vector2i cls = curve_class(tr.curve);
  sum["final_class"] = {cls(0), cls(1)};
  sum["components"] = tr.curve.components.size();
  write_curve_trace_csv(out / "trace.csv", tr);
  files.push_back("trace.csv");
  const bool ok =
      ref.trace.converged && !tr.distance.empty() && tr.distance.back() < tol_distance;
  sum["contract"] = nlohmann::json{{"tol_distance", tol_distance}, {"satisfied", ok}};
  return ok ? 0 : 2;
}

inline int run_growth(const Scenario& s, const std::filesystem::path&, nlohmann::json& sum,
                      std::vector<std::string>&) {
  const TorusMap& f = *s.map;
  std::vector<int> degrees;
  if (s.raw.contains("degrees"))
    for (const auto& d : s.raw.at("degrees")) degrees.push_back(d.get<int>());
  else
    for (int k = 0; k <= f.dim(); ++k) degrees.push_back(k);
  const int J = s.raw.value("window", 12);
  const int seeds = s.raw.value("probes", 24);

  nlohmann::json rates = nlohmann::json::array();
  for (int k : degrees) {
    const GrowthSequence up = upsilon(f, k, J, seeds);
    const GrowthSequence nv = nu(f, k, J, seeds);
    rates.push_back(nlohmann::json{{"k", k},
                                   {"upsilon_hat", up.hat},
                                   {"upsilon_roots", up.roots},
                                   {"nu_hat", nv.hat},
                                   {"nu_roots", nv.roots},
                                   {"submultiplicative_ok", up.submultiplicative_ok}});
  }
  sum["window"] = J;
  sum["rates"] = rates;
  return 0;
}

inline int run_smear(const Scenario& s, const std::filesystem::path& out, nlohmann::json& sum,
                     std::vector<std::string>& files) {
  const SmearSpec spec = smear_spec_from_json(s.raw.at("smear"));
  AtomCurrent atoms;
  atoms.n = spec.n;
  double total_weight = 0.0;
  for (const auto& aj : s.raw.at("atoms")) {
    Atom a;
    const auto xv = require_vector(aj, "x", static_cast<std::size_t>(spec.n));
    a.x = Eigen::VectorXd(spec.n);
    for (int i = 0; i < spec.n; ++i) a.x(i) = xv[std::size_t(i)];
    a.weight = require_number(aj, "weight");
    total_weight += a.weight;
    atoms.atoms.push_back(std::move(a));
  }

  const PeriodicGrid g{spec.n, s.cfg.N};
  const CurrentRep smeared = smear_current(spec, CurrentRep{atoms}, g);
  const FormCurrent& fc = std::get<FormCurrent>(smeared);

  // smear_current pre-multiplies the density by the current sign, so the
  // pairing against 1 is already the plain integral of the smeared density.
  FormFunction one;
  one.n = spec.n;
  one.degree = 0;
  one.eval = [](const double*, double* v) { v[0] = 1.0; };
  const double mass = pair(fc, one);
  const double mass_residual = std::abs(mass - total_weight);

  sum["smear"] = smear_spec_to_json(spec);
  sum["atoms"] = s.raw.at("atoms");
  sum["total_weight"] = total_weight;
  sum["smeared_mass"] = mass;
  sum["mass_residual"] = mass_residual;
  dump_field(fc.alpha, out, "density");
  files.push_back("density.json");
  const bool ok = mass_residual < s.raw.value("tol_mass", 1e-6);
  sum["contract"] = nlohmann::json{{"tol_mass", s.raw.value("tol_mass", 1e-6)}, {"satisfied", ok}};
  return ok ? 0 : 2;
}

inline int run_expansion(const Scenario& s, const std::filesystem::path&, nlohmann::json& sum,
                         std::vector<std::string>&) {
  const TorusMap& f = *s.map;
  const auto xv = require_vector(s.raw, "x0", static_cast<std::size_t>(f.dim()));
  Eigen::VectorXd x0(f.dim());
  for (int i = 0; i < f.dim(); ++i) x0(i) = xv[std::size_t(i)];
  const double eps = require_number(s.raw, "eps");
  const int k_max = require_int(s.raw, "k_max");
  const int samples = s.raw.value("samples", 64);

  const ExpansionDiagnostic d = expansion_diagnostic(f, x0, eps, k_max, samples);
  sum["x0"] = xv;
  sum["eps"] = eps;
  sum["diameters"] = d.diameters;
  sum["growth_rate"] = d.growth_rate;
  sum["saturation_step"] = d.saturation_step;
  return 0;
}

inline int run_uniqueness(const Scenario& s, const std::filesystem::path& out, nlohmann::json& sum,
                          std::vector<std::string>& files) {
  const TorusMap& f = *s.map;
  const int k = require_int(s.raw, "degree");
  const double lambda = require_number(s.raw, "lambda");
  const auto wv = require_vector(s.raw, "class", static_cast<std::size_t>(binomial(f.dim(), k)));
  Eigen::VectorXd w(long(wv.size()));
  for (std::size_t i = 0; i < wv.size(); ++i) w(long(i)) = wv[i];
  const double tol_distance = s.raw.value("tol_distance", 1e-6);

  std::optional<FormFunction> ta, tb;
  if (s.raw.contains("initializer_a"))
    ta = form_function_from_json(s.raw.at("initializer_a"), f.dim(), k - 1);
  if (s.raw.contains("initializer_b"))
    tb = form_function_from_json(s.raw.at("initializer_b"), f.dim(), k - 1);

  const UniquenessReport rep =
      uniqueness_test(f, k, w, lambda, ta ? &*ta : nullptr, tb ? &*tb : nullptr, s.cfg);
  sum["degree"] = k;
  sum["lambda"] = lambda;
  sum["class"] = wv;
  sum["gap"] = gap_json(rep.a.gap);
  sum["distance"] = rep.distance;
  sum["run_a"] = trace_json(rep.a.trace);
  sum["run_b"] = trace_json(rep.b.trace);
  write_trace_csv(out / "trace_a.csv", rep.a.trace);
  write_trace_csv(out / "trace_b.csv", rep.b.trace);
  files.push_back("trace_a.csv");
  files.push_back("trace_b.csv");
  const bool ok =
      rep.a.trace.converged && rep.b.trace.converged && rep.distance < tol_distance;
  sum["contract"] = nlohmann::json{{"tol_distance", tol_distance}, {"satisfied", ok}};
  return ok ? 0 : 2;
}

}  // namespace detail

// Run one parsed scenario, writing summary.json plus experiment artifacts
// into out_dir.  Returns the exit code and the summary document.  `jobs`
// bounds the worker count; every current experiment is a sequential
// iteration, so any bound >= 1 is honored by a single worker.
inline RunArtifacts run_scenario(const Scenario& s, const std::filesystem::path& out_dir,
                                 int jobs = 1) {
  if (jobs < 1) throw ValidationError("run: --jobs must be >= 1");
  std::filesystem::create_directories(out_dir);

  RunArtifacts ra;
  nlohmann::json& sum = ra.summary;
  sum["schema"] = "eclab-summary-v1";
  sum["scenario_hash"] = scenario_hash(s.raw);
  sum["experiment"] = s.experiment;
  if (s.map) sum["map"] = map_to_json(*s.map);
  sum["N"] = s.cfg.N;
  sum["seed"] = s.seed;

  try {
    if (s.experiment == "eigencurrent")
      ra.exit_code = detail::run_eigencurrent(s, out_dir, sum, ra.files);
    else if (s.experiment == "invariant_plane")
      ra.exit_code = detail::run_invariant_plane(s, out_dir, sum, ra.files);
    else if (s.experiment == "measure_top_degree")
      ra.exit_code = detail::run_measure(s, out_dir, sum, ra.files);
    else if (s.experiment == "curve_preimages")
      ra.exit_code = detail::run_curve(s, out_dir, sum, ra.files);
    else if (s.experiment == "growth_rates")
      ra.exit_code = detail::run_growth(s, out_dir, sum, ra.files);
    else if (s.experiment == "smear_demo")
      ra.exit_code = detail::run_smear(s, out_dir, sum, ra.files);
    else if (s.experiment == "expansion_diagnostic")
      ra.exit_code = detail::run_expansion(s, out_dir, sum, ra.files);
    else
      ra.exit_code = detail::run_uniqueness(s, out_dir, sum, ra.files);
  } catch (const HypothesisError& e) {
    sum["validation_error"] = e.what();
    sum["gap"] = detail::gap_json(e.report);
    ra.exit_code = 1;
  } catch (const ValidationError& e) {
    sum["validation_error"] = e.what();
    ra.exit_code = 1;
  } catch (const std::invalid_argument& e) {
    sum["validation_error"] = e.what();
    ra.exit_code = 1;
  } catch (const std::domain_error& e) {
    sum["validation_error"] = e.what();
    ra.exit_code = 1;
  }

  sum["exit_code"] = ra.exit_code;
  sum["artifacts"] = ra.files;
  sum = canonical_floats(sum);
  std::ofstream os(out_dir / "summary.json");
  if (!os) throw std::runtime_error("run: cannot open summary.json for writing");
  os << sum.dump(2) << "\n";
  ra.files.insert(ra.files.begin(), "summary.json");
  return ra;
}

// The `eclab formats` text: the on-disk conventions for every artifact kind.
inline std::string formats_description() {
  return
      "eclab on-disk formats\n"
      "\n"
      "field dump (eclab-field-v1)\n"
      "  <name>.json sidecar:\n"
      "    format       \"eclab-field-v1\"\n"
      "    n, N         torus dimension and per-axis grid resolution\n"
      "    degree       form degree k\n"
      "    endianness   \"little\"\n"
      "    order        \"row-major\" (point index p = i0*N + i1 on T^2)\n"
      "    components   [{file, multi_index}] with 1-based increasing multi-indices\n"
      "  <name>_c<k>.f64: raw little-endian float64 samples, one per grid\n"
      "  point, row-major, length N^n; component files follow the sidecar's\n"
      "  component order.\n"
      "\n"
      "trace CSV\n"
      "  header: iterate,weak_residual,potential_delta,ratio_fit\n"
      "  one row per iterate (or per paired step for curve traces); ratio_fit\n"
      "  is the running ratio of successive potential increments.\n"
      "\n"
      "summary JSON (eclab-summary-v1)\n"
      "  deterministic: keys sorted, floats rounded to 12 significant digits,\n"
      "  non-finite values serialized as null, no timing or host content;\n"
      "  embeds the FNV-1a hash of the canonical scenario and the hypothesis\n"
      "  gap margins actually used; exit_code mirrors the process exit code\n"
      "  (0 contract satisfied, 1 validation/gap rejection, 2 contract miss).\n";
}

}  // namespace eclab
