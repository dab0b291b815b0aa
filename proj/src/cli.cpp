#include "macroq/cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"

#include "macroq/measures.hpp"
#include "macroq/phase.hpp"
#include "macroq/states.hpp"

namespace macroq::cli {
namespace {

using json = nlohmann::ordered_json;
using cx = std::complex<double>;

std::string fmt9(double v) {
  char b[64];
  std::snprintf(b, sizeof b, "%.9g", v);
  return b;
}

// CSV cells must stay one-field wide even when an exception message leaks
// punctuation into the method column.
std::string csv_safe(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r' || c == '"') c = ';';
  return s;
}

unsigned task_seed(unsigned base, const std::string& state_id,
                   const std::string& param_name, double param_value,
                   const std::string& tag) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", param_value);
  unsigned long long h = 1469598103934665603ULL ^ base;
  auto fold = [&h](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    h ^= 0xff;
    h *= 1099511628211ULL;
  };
  fold(state_id);
  fold(param_name);
  fold(buf);
  fold(tag);
  return static_cast<unsigned>(h ^ (h >> 32));
}

// ---- spec parameter plumbing ----

class ParamReader {
 public:
  ParamReader(const std::map<std::string, double>& p, std::string ctx)
      : p_(p), ctx_(std::move(ctx)) {}

  bool has(const std::string& key) const { return p_.count(key) > 0; }

  double get(const std::string& key, double fallback) {
    used_.insert(key);
    auto it = p_.find(key);
    return it == p_.end() ? fallback : it->second;
  }

  double require(const std::string& key) {
    used_.insert(key);
    auto it = p_.find(key);
    if (it == p_.end())
      throw std::invalid_argument(ctx_ + ": missing required parameter '" +
                                  key + "'");
    return it->second;
  }

  int get_int(const std::string& key, int fallback) {
    return to_int(key, get(key, fallback));
  }
  int require_int(const std::string& key) { return to_int(key, require(key)); }

  // Every provided key must be consumed; typos fail loudly.
  void finish() const {
    for (const auto& kv : p_)
      if (!used_.count(kv.first))
        throw std::invalid_argument(ctx_ + ": unknown parameter '" + kv.first +
                                    "'");
  }

 private:
  int to_int(const std::string& key, double v) const {
    double r = std::round(v);
    if (std::abs(v - r) > 1e-9)
      throw std::invalid_argument(ctx_ + ": parameter '" + key +
                                  "' must be an integer");
    return static_cast<int>(r);
  }
  const std::map<std::string, double>& p_;
  std::string ctx_;
  std::set<std::string> used_;
};

// ---- state construction ----
// Thin adapter over states::build_state: manifests address builder fields by
// name, and anything a kind does not consume is rejected as a typo.

struct KindInfo {
  bool spin;
  std::vector<const char*> params;
};

const std::map<std::string, KindInfo>& kind_table() {
  static const std::map<std::string, KindInfo> t = {
      {"vacuum", {false, {"truncation"}}},
      {"coherent", {false, {"alpha", "alpha_im", "truncation"}}},
      {"fock", {false, {"n", "truncation"}}},
      {"squeezed_vacuum", {false, {"r", "truncation"}}},
      {"scs", {false, {"alpha", "alpha_im", "phi", "truncation"}}},
      {"ecs", {false, {"alpha", "alpha_im", "phi", "truncation"}}},
      {"hybrid", {false, {"alpha", "alpha_im", "truncation"}}},
      {"spe", {false, {"truncation"}}},
      {"displaced_spe",
       {false, {"alpha", "alpha_im", "both_modes", "truncation"}}},
      {"squeezed_spe", {false, {"r", "truncation"}}},
      {"qiopa", {false, {"g", "order_cap"}}},
      {"ghz", {true, {"n"}}},
      {"product_plus", {true, {"n"}}},
      {"generalized_ghz", {true, {"n", "epsilon"}}},
      {"mixed_ghz", {true, {"n", "gamma"}}},
      {"dn", {true, {"n"}}},
      {"cooper", {true, {"n", "phi"}}},
  };
  return t;
}

bool spin_kind(const std::string& kind) {
  auto it = kind_table().find(kind);
  return it != kind_table().end() && it->second.spin;
}

bool known_kind(const std::string& kind) {
  return kind_table().count(kind) > 0;
}

states::BuiltState make_state(const std::string& kind,
                              const std::map<std::string, double>& params,
                              const std::string& ctx) {
  auto it = kind_table().find(kind);
  if (it == kind_table().end())
    throw std::invalid_argument(ctx + ": unknown state kind '" + kind + "'");
  const std::set<std::string> ok(it->second.params.begin(),
                                 it->second.params.end());
  ParamReader r(params, ctx);
  auto use = [&](const char* key, double fallback) {
    return ok.count(key) ? r.get(key, fallback) : fallback;
  };
  states::StateSpec ss;
  ss.kind = kind;
  ss.alpha = cx(use("alpha", 0.0), use("alpha_im", 0.0));
  ss.phi = use("phi", 0.0);
  ss.r = use("r", 0.0);
  ss.g = use("g", 0.0);
  ss.epsilon = use("epsilon", 0.0);
  ss.gamma = use("gamma", 1.0);
  if (ok.count("n")) ss.n = r.get_int("n", 0);
  if (ok.count("order_cap")) ss.order_cap = r.get_int("order_cap", 40);
  if (ok.count("truncation")) ss.truncation = r.get_int("truncation", 0);
  if (ok.count("both_modes")) ss.both_modes = r.get("both_modes", 0.0) != 0.0;
  r.finish();
  return states::build_state(ss);
}

// ---- measure dispatch ----

enum Domain { kFock, kSpin, kAny };

struct TagInfo {
  Domain domain;
  std::vector<const char*> required;
};

const std::map<std::string, TagInfo>& tag_table() {
  static const std::map<std::string, TagInfo> t = {
      {"mean_photon", {kFock, {}}},
      {"purity", {kAny, {}}},
      {"measure_I", {kFock, {}}},
      {"scan_S_max", {kFock, {}}},
      {"cavalcanti_reid", {kFock, {"s"}}},
      {"bjork_mana", {kFock, {}}},
      {"sekatski_vs_vacuum", {kFock, {}}},
      {"disconnectivity", {kAny, {}}},
      {"dur", {kSpin, {"epsilon"}}},
      {"marquardt", {kAny, {"n", "theta"}}},
      {"fisher_neff", {kSpin, {}}},
      {"max_variance", {kSpin, {}}},
      {"qfi_z", {kSpin, {}}},
  };
  return t;
}

Eigen::MatrixXcd position_operator(int d) {
  Eigen::MatrixXcd x = Eigen::MatrixXcd::Zero(d, d);
  for (int m = 0; m + 1 < d; ++m) {
    x(m, m + 1) = std::sqrt(m + 1.0);
    x(m + 1, m) = std::sqrt(m + 1.0);
  }
  return x;
}

spin::AdditiveObservable sigma_z_sites(int n) {
  spin::Matrix2cd sz;
  sz << 1, 0, 0, -1;
  return {std::vector<spin::Matrix2cd>(n, sz), {}};
}

struct Outcome {
  double value = 0.0;
  double error = 0.0;
  std::string method;
};

Outcome from_report(const MeasureReport& r) {
  return {r.value, r.error_estimate, r.method};
}

void need_single_mode(const states::BuiltState& st, const std::string& tag) {
  if (st.fockp.modes() != 1)
    throw std::invalid_argument("measure '" + tag +
                                "' expects a single-mode state");
}

Outcome eval_measure(const std::string& tag,
                     const std::map<std::string, double>& params,
                     const states::BuiltState& st, unsigned seed) {
  ParamReader r(params, "measure '" + tag + "'");
  Outcome out;
  if (tag == "mean_photon") {
    double total = 0.0;
    for (int m = 0; m < st.fockp.modes(); ++m) {
      Eigen::VectorXd d = fock::photon_distribution(st.fockp, m);
      for (long k = 0; k < d.size(); ++k) total += k * d[k];
    }
    out = {total, 0.0, "moment"};
  } else if (tag == "purity") {
    if (st.is_fock) {
      double n2 = st.fockp.amp.squaredNorm();
      out = {n2 * n2, 0.0, "trace-square"};
    } else {
      double p = st.spins.pure() ? 1.0
                                 : (st.spins.rho * st.spins.rho).trace().real();
      out = {p, 0.0, "trace-square"};
    }
  } else if (tag == "measure_I") {
    bool integral = r.get("route", 0.0) != 0.0;
    bool remove_offset = r.get("remove_offset", 0.0) != 0.0;
    MeasureReport rep =
        integral ? phase::measure_I_integral(st.fockp, remove_offset)
                 : phase::measure_I_algebraic(st.fockp, remove_offset);
    out = from_report(rep);
  } else if (tag == "scan_S_max") {
    need_single_mode(st, tag);
    bool bare = r.get("bare_s_half", 1.0) != 0.0;
    std::vector<double> grid;  // empty keeps the library default 1..8
    if (r.has("s_min") || r.has("s_max") || r.has("s_step")) {
      const double lo = r.get("s_min", 1.0);
      const double hi = r.get("s_max", 8.0);
      const double step = r.get("s_step", 0.25);
      if (lo <= 0 || step <= 0 || hi < lo)
        throw std::invalid_argument(
            "scan_S_max grid needs 0 < s_min <= s_max and s_step > 0");
      for (double s = lo; s <= hi + 1e-12; s += step) grid.push_back(s);
    }
    out = from_report(
        measures::scan_S_max(fock::to_density(st.fockp), grid, bare));
  } else if (tag == "cavalcanti_reid") {
    need_single_mode(st, tag);
    double s = r.require("s");
    double center = r.get("center", 0.0);
    bool bare = r.get("bare_s_half", 1.0) != 0.0;
    fock::DensityOperator rho = fock::to_density(st.fockp);
    auto px = phase::quadrature_distribution(rho, 0.0);
    auto pp = phase::quadrature_distribution(rho, M_PI / 2);
    auto v = measures::cavalcanti_reid(px, pp, s, bare, center);
    out = {v.lhs, 0.0,
           v.violated ? "partition-inequality/violated"
                      : "partition-inequality/satisfied"};
  } else if (tag == "bjork_mana") {
    need_single_mode(st, tag);
    MeasureReport rep = measures::bjork_mana(
        st.fockp, position_operator(static_cast<int>(st.fockp.dim())));
    out = from_report(rep);
    if (rep.metadata.count("no_superposition"))
      out.method += "/no-superposition";
  } else if (tag == "sekatski_vs_vacuum") {
    need_single_mode(st, tag);
    double pg = r.get("p_g", 0.75);
    out = from_report(measures::sekatski_size(
        states::vacuum_state(static_cast<int>(st.fockp.dim())), st.fockp,
        pg));
  } else if (tag == "disconnectivity") {
    int pol = r.get_int("policy", 0);
    if (pol < 0 || pol > 3)
      throw std::invalid_argument("policy must be 0..3");
    auto policy = static_cast<measures::SubsetPolicy>(pol);
    auto prof =
        st.is_fock
            ? measures::disconnectivity(fock::to_density(st.fockp), policy)
            : measures::disconnectivity(st.spins, policy);
    out = {static_cast<double>(prof.depth), 0.0, "entropy-ratio"};
  } else if (tag == "dur") {
    double eps = r.require("epsilon");
    double gamma = r.get("gamma", 1.0);
    auto mode = r.get("simulated", 1.0) != 0.0 ? measures::DurMode::simulated
                                               : measures::DurMode::analytic;
    out = from_report(
        measures::dur_effective_size(st.spins.n, eps, gamma, mode));
  } else if (tag == "marquardt") {
    out = from_report(
        measures::marquardt_size(r.require_int("n"), r.require("theta")));
  } else if (tag == "fisher_neff") {
    out = from_report(measures::fisher_neff(st.spins, seed));
  } else if (tag == "max_variance") {
    out = {measures::max_additive_variance(st.spins, seed), 0.0,
           "variance-search"};
  } else if (tag == "qfi_z") {
    out = {measures::qfi(st.spins, sigma_z_sites(st.spins.n)), 0.0,
           "spectral"};
  } else {
    throw std::invalid_argument("unknown measure tag '" + tag + "'");
  }
  r.finish();
  return out;
}

// ---- manifest parsing ----

void reject_unknown_keys(const json& j, const std::set<std::string>& allowed,
                         const std::string& ctx) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key()))
      throw std::invalid_argument(ctx + ": unknown field '" + it.key() + "'");
}

std::map<std::string, double> number_map(const json& j,
                                         const std::string& ctx) {
  std::map<std::string, double> out;
  if (j.is_null()) return out;
  if (!j.is_object())
    throw std::invalid_argument(ctx + ": params must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!it.value().is_number())
      throw std::invalid_argument(ctx + ": parameter '" + it.key() +
                                  "' must be a number");
    out[it.key()] = it.value().get<double>();
  }
  return out;
}

}  // namespace

RunManifest parse_manifest(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw std::invalid_argument("manifest parse error at line " +
                                std::to_string(line) + ", column " +
                                std::to_string(col) + ": " + e.what());
  }
  if (!j.is_object())
    throw std::invalid_argument("manifest must be a JSON object");
  reject_unknown_keys(j, {"seed", "output", "states", "measures", "sweep"},
                      "manifest");

  RunManifest m;
  if (j.contains("seed")) {
    if (!j["seed"].is_number_integer() || j["seed"].get<long long>() < 0)
      throw std::invalid_argument("manifest: seed must be a non-negative integer");
    m.seed = static_cast<unsigned>(j["seed"].get<long long>());
  }
  if (j.contains("output")) {
    const json& o = j["output"];
    reject_unknown_keys(o, {"format", "path"}, "output");
    m.output.format = o.value("format", "csv");
    m.output.path = o.value("path", "");
    if (m.output.format != "csv" && m.output.format != "json")
      throw std::invalid_argument("output: format must be csv or json");
  }

  if (!j.contains("states") || !j["states"].is_array())
    throw std::invalid_argument("manifest: 'states' must be a list");
  std::set<std::string> ids;
  for (std::size_t i = 0; i < j["states"].size(); ++i) {
    const json& e = j["states"][i];
    std::string ctx = "states[" + std::to_string(i) + "]";
    if (!e.is_object()) throw std::invalid_argument(ctx + ": must be an object");
    reject_unknown_keys(e, {"id", "kind", "params"}, ctx);
    StateSpec s;
    s.id = e.value("id", "");
    s.kind = e.value("kind", "");
    if (s.id.empty()) throw std::invalid_argument(ctx + ": missing id");
    if (!ids.insert(s.id).second)
      throw std::invalid_argument(ctx + ": duplicate state id '" + s.id + "'");
    if (!known_kind(s.kind))
      throw std::invalid_argument(ctx + ": unknown state kind '" + s.kind +
                                  "'");
    s.params = number_map(e.contains("params") ? e["params"] : json(nullptr),
                          ctx);
    const auto& allowed = kind_table().at(s.kind).params;
    for (const auto& kv : s.params)
      if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) {
            return kv.first == a;
          }) == allowed.end())
        throw std::invalid_argument(ctx + ": parameter '" + kv.first +
                                    "' does not apply to kind '" + s.kind +
                                    "'");
    m.states.push_back(std::move(s));
  }

  if (!j.contains("measures") || !j["measures"].is_array())
    throw std::invalid_argument("manifest: 'measures' must be a list");
  for (std::size_t i = 0; i < j["measures"].size(); ++i) {
    const json& e = j["measures"][i];
    std::string ctx = "measures[" + std::to_string(i) + "]";
    if (!e.is_object()) throw std::invalid_argument(ctx + ": must be an object");
    reject_unknown_keys(e, {"tag", "params"}, ctx);
    MeasureSpec ms;
    ms.tag = e.value("tag", "");
    auto it = tag_table().find(ms.tag);
    if (it == tag_table().end())
      throw std::invalid_argument(ctx + ": unknown measure tag '" + ms.tag +
                                  "'");
    ms.params = number_map(e.contains("params") ? e["params"] : json(nullptr),
                           ctx);
    for (const char* req : it->second.required)
      if (!ms.params.count(req))
        throw std::invalid_argument(ctx + ": measure '" + ms.tag +
                                    "' missing required parameter '" + req +
                                    "'");
    m.measures.push_back(std::move(ms));
  }

  // Domain compatibility is a manifest error, not a runtime one: every
  // measure must apply to every listed state.
  for (const auto& ms : m.measures) {
    Domain d = tag_table().at(ms.tag).domain;
    if (d == kAny) continue;
    for (const auto& s : m.states) {
      bool is_spin = spin_kind(s.kind);
      if ((d == kSpin) != is_spin)
        throw std::invalid_argument("measure '" + ms.tag +
                                    "' does not apply to state '" + s.id +
                                    "' (kind " + s.kind + ")");
    }
  }

  if (j.contains("sweep") && !j["sweep"].is_null()) {
    const json& w = j["sweep"];
    reject_unknown_keys(w, {"state", "param", "values"}, "sweep");
    SweepSpec sw;
    sw.state = w.value("state", "");
    sw.param = w.value("param", "");
    if (!w.contains("values") || !w["values"].is_array() ||
        w["values"].empty())
      throw std::invalid_argument("sweep: 'values' must be a nonempty list");
    for (const json& v : w["values"]) {
      if (!v.is_number())
        throw std::invalid_argument("sweep: values must be numbers");
      sw.values.push_back(v.get<double>());
    }
    const StateSpec* target = nullptr;
    for (const auto& s : m.states)
      if (s.id == sw.state) target = &s;
    if (!target)
      throw std::invalid_argument("sweep: unknown state '" + sw.state + "'");
    if (!target->params.count(sw.param))
      throw std::invalid_argument("sweep: parameter '" + sw.param +
                                  "' is not set on state '" + sw.state + "'");
    m.sweep = std::move(sw);
  }
  return m;
}

RunManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open manifest '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_manifest(ss.str());
}

// ---- execution ----

namespace {

struct Task {
  StateSpec spec;
  std::string param_name;
  double param_value = 0.0;
  MeasureSpec measure;
};

ReportRow run_task(const Task& t, unsigned base_seed) {
  ReportRow row;
  row.state_id = t.spec.id;
  row.param_name = t.param_name;
  row.param_value = t.param_value;
  row.measure = t.measure.tag;
  auto t0 = std::chrono::steady_clock::now();
  try {
    auto params = t.spec.params;
    if (!t.param_name.empty()) params[t.param_name] = t.param_value;
    states::BuiltState st =
        make_state(t.spec.kind, params, "state '" + t.spec.id + "'");
    unsigned seed =
        task_seed(base_seed, t.spec.id, t.param_name, t.param_value,
                  t.measure.tag);
    Outcome o = eval_measure(t.measure.tag, t.measure.params, st, seed);
    row.value = o.value;
    row.error_estimate = o.error;
    row.method = o.method;
  } catch (const std::exception& e) {
    row.value = std::nan("");
    row.error_estimate = std::nan("");
    row.method = std::string("error: ") + e.what();
  }
  row.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return row;
}

void sort_rows(std::vector<ReportRow>& rows) {
  std::sort(rows.begin(), rows.end(),
            [](const ReportRow& a, const ReportRow& b) {
              if (a.state_id != b.state_id) return a.state_id < b.state_id;
              if (a.param_name != b.param_name)
                return a.param_name < b.param_name;
              if (a.param_value != b.param_value)
                return a.param_value < b.param_value;
              return a.measure < b.measure;
            });
}

}  // namespace

std::vector<ReportRow> run(const RunManifest& m, int jobs) {
  std::vector<Task> tasks;
  for (const auto& s : m.states) {
    const bool swept = m.sweep && m.sweep->state == s.id;
    const std::size_t points = swept ? m.sweep->values.size() : 1;
    for (std::size_t p = 0; p < points; ++p) {
      for (const auto& ms : m.measures) {
        Task t;
        t.spec = s;
        if (swept) {
          t.param_name = m.sweep->param;
          t.param_value = m.sweep->values[p];
        }
        t.measure = ms;
        tasks.push_back(std::move(t));
      }
    }
  }

  std::vector<ReportRow> rows(tasks.size());
  jobs = std::max(1, jobs);
  if (jobs == 1 || tasks.size() <= 1) {
    for (std::size_t i = 0; i < tasks.size(); ++i)
      rows[i] = run_task(tasks[i], m.seed);
  } else {
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (;;) {
        std::size_t i = next.fetch_add(1);
        if (i >= tasks.size()) return;
        rows[i] = run_task(tasks[i], m.seed);
      }
    };
    std::vector<std::thread> pool;
    int nthreads = std::min<std::size_t>(jobs, tasks.size());
    for (int i = 0; i < nthreads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  sort_rows(rows);
  return rows;
}

bool has_error_rows(const std::vector<ReportRow>& rows) {
  for (const auto& r : rows)
    if (r.method.rfind("error:", 0) == 0) return true;
  return false;
}

// ---- presets ----

std::vector<std::string> preset_names() {
  return {"measure-I-gallery", "disconnectivity", "cavalcanti-reid",
          "sekatski"};
}

std::vector<ReportRow> preset_table(const std::string& tag, int jobs,
                                    unsigned seed) {
  RunManifest m;
  m.seed = seed == 0 ? 1234u : seed;
  if (tag == "measure-I-gallery") {
    m.states = {
        {"coherent", "coherent", {{"alpha", 2.0}}},
        {"scs", "scs", {{"alpha", 2.0}, {"phi", 0.0}}},
        {"ecs", "ecs", {{"alpha", 1.0}, {"phi", 0.0}}},
        {"hybrid", "hybrid", {{"alpha", 3.0}}},
        {"displaced_spe", "displaced_spe", {{"alpha", 1.0}}},
        {"squeezed_spe", "squeezed_spe", {{"r", 1.0}}},
        {"qiopa", "qiopa", {{"g", 1.0}}},
    };
    m.measures = {{"measure_I", {}}, {"mean_photon", {}}};
    return run(m, jobs);
  }
  if (tag == "disconnectivity") {
    m.states = {
        {"ghz", "ghz", {{"n", 4.0}}},
        {"product_plus", "product_plus", {{"n", 4.0}}},
        {"mixed_ghz", "mixed_ghz", {{"n", 4.0}, {"gamma", 0.5}}},
        {"generalized_ghz", "generalized_ghz", {{"n", 4.0}, {"epsilon", 0.3}}},
    };
    m.measures = {{"disconnectivity", {}}};
    return run(m, jobs);
  }
  if (tag == "cavalcanti-reid") {
    // The default S >= 1 scan stays clean here: the delta term grows with
    // the squared branch separation and swamps the fringe deficit, and the
    // alpha = 3 deficit alone is a few 1e-7, inside the numeric guard.  The
    // violation that does survive is alpha = 2 at S = 0.25, reported as a
    // single-verdict row.
    m.states = {
        {"scs_2", "scs", {{"alpha", 2.0}}},
        {"scs_3", "scs", {{"alpha", 3.0}}},
        {"vacuum", "vacuum", {{"truncation", 8.0}}},
    };
    m.measures = {{"scan_S_max", {}}};
    auto rows = run(m, jobs);
    RunManifest m2;
    m2.seed = m.seed;
    m2.states = {{"scs_2s", "scs", {{"alpha", 2.0}}}};
    m2.measures = {{"cavalcanti_reid", {{"s", 0.25}}}};
    auto extra = run(m2, jobs);
    rows.insert(rows.end(), extra.begin(), extra.end());
    sort_rows(rows);
    return rows;
  }
  if (tag == "sekatski") {
    m.states = {{"coherent_10", "coherent", {{"alpha", 10.0}}}};
    m.measures = {{"sekatski_vs_vacuum", {{"p_g", 0.6}}}};
    RunManifest m2 = m;
    m2.measures = {{"sekatski_vs_vacuum", {{"p_g", 0.75}}}};
    auto rows = run(m, jobs);
    auto more = run(m2, jobs);
    // Annotate the guess probability so both rows stay distinguishable.
    rows[0].param_name = "p_g";
    rows[0].param_value = 0.6;
    more[0].param_name = "p_g";
    more[0].param_value = 0.75;
    rows.push_back(more[0]);

    // Displaced single-photon branches D(a)(|0> +- |1>)/sqrt(2): the pair
    // behind the displaced-entanglement example, probed at alpha = 20.
    ReportRow row;
    row.state_id = "displaced_single_photon_branches";
    row.param_name = "p_g";
    row.param_value = 0.6;
    row.measure = "sekatski";
    auto t0 = std::chrono::steady_clock::now();
    try {
      const double alpha = 20.0;
      const int d = states::cutoff_for_alpha(alpha);
      Eigen::MatrixXcd dm = phase::displacement_matrix(d, alpha);
      fock::FockPureState a, b;
      a.dims = {d};
      b.dims = {d};
      a.amp = (dm.col(0) + dm.col(1)) / std::sqrt(2.0);
      b.amp = (dm.col(0) - dm.col(1)) / std::sqrt(2.0);
      a.amp /= a.amp.norm();
      b.amp /= b.amp.norm();
      auto rep = measures::sekatski_size(a, b, 0.6);
      row.value = rep.value;
      row.error_estimate = rep.error_estimate;
      row.method = rep.method;
    } catch (const std::exception& e) {
      row.value = std::nan("");
      row.error_estimate = std::nan("");
      row.method = std::string("error: ") + e.what();
    }
    row.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    rows.push_back(row);
    sort_rows(rows);
    return rows;
  }
  throw std::invalid_argument("unknown preset '" + tag + "'");
}

// ---- serialization ----

std::string to_csv(const std::vector<ReportRow>& rows) {
  std::string out =
      "state_id,param_name,param_value,measure,value,error_estimate,method,"
      "seconds\n";
  for (const auto& r : rows) {
    out += csv_safe(r.state_id) + ',' + csv_safe(r.param_name) + ',' +
           fmt9(r.param_value) + ',' + csv_safe(r.measure) + ',' +
           fmt9(r.value) + ',' + fmt9(r.error_estimate) + ',' +
           csv_safe(r.method) + ',' + fmt9(r.seconds) + '\n';
  }
  return out;
}

std::string to_json(const std::vector<ReportRow>& rows) {
  json arr = json::array();
  for (const auto& r : rows) {
    json o;
    o["state_id"] = r.state_id;
    o["param_name"] = r.param_name;
    o["param_value"] = r.param_value;
    o["measure"] = r.measure;
    o["value"] = r.value;
    o["error_estimate"] = r.error_estimate;
    o["method"] = r.method;
    o["seconds"] = r.seconds;
    arr.push_back(std::move(o));
  }
  return arr.dump(2) + "\n";
}

std::vector<ReportRow> rows_from_csv(const std::string& text) {
  std::vector<ReportRow> rows;
  std::istringstream in(text);
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() != 8)
      throw std::invalid_argument("csv row with " +
                                  std::to_string(cells.size()) +
                                  " cells; expected 8");
    ReportRow r;
    r.state_id = cells[0];
    r.param_name = cells[1];
    r.param_value = std::strtod(cells[2].c_str(), nullptr);
    r.measure = cells[3];
    r.value = std::strtod(cells[4].c_str(), nullptr);
    r.error_estimate = std::strtod(cells[5].c_str(), nullptr);
    r.method = cells[6];
    r.seconds = std::strtod(cells[7].c_str(), nullptr);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<ReportRow> rows_from_json(const std::string& text) {
  json arr = json::parse(text);
  if (!arr.is_array()) throw std::invalid_argument("expected a JSON array");
  std::vector<ReportRow> rows;
  auto num = [](const json& v) {
    return v.is_null() ? std::nan("") : v.get<double>();
  };
  for (const json& o : arr) {
    ReportRow r;
    r.state_id = o.at("state_id").get<std::string>();
    r.param_name = o.at("param_name").get<std::string>();
    r.param_value = num(o.at("param_value"));
    r.measure = o.at("measure").get<std::string>();
    r.value = num(o.at("value"));
    r.error_estimate = num(o.at("error_estimate"));
    r.method = o.at("method").get<std::string>();
    r.seconds = num(o.at("seconds"));
    rows.push_back(std::move(r));
  }
  return rows;
}

// ---- inline inspection ----

namespace {

std::pair<std::string, std::map<std::string, double>> parse_inline_spec(
    const std::string& spec) {
  std::string kind = spec;
  std::map<std::string, double> params;
  auto colon = spec.find(':');
  if (colon != std::string::npos) {
    kind = spec.substr(0, colon);
    std::istringstream rest(spec.substr(colon + 1));
    std::string item;
    while (std::getline(rest, item, ',')) {
      auto eq = item.find('=');
      if (eq == std::string::npos)
        throw std::invalid_argument("state spec: expected key=value, got '" +
                                    item + "'");
      const std::string key = item.substr(0, eq);
      char* end = nullptr;
      const std::string vs = item.substr(eq + 1);
      double v = std::strtod(vs.c_str(), &end);
      if (end == vs.c_str() || *end != '\0')
        throw std::invalid_argument("state spec: parameter '" + key +
                                    "' has a non-numeric value '" + vs + "'");
      params[key] = v;
    }
  }
  return {kind, params};
}

fock::DensityOperator mode_zero_density(const fock::FockPureState& f) {
  if (f.modes() == 1) return fock::to_density(f);
  return fock::partial_trace(f, {0});
}

}  // namespace

InspectReport inspect_state(const std::string& spec) {
  auto [kind, params] = parse_inline_spec(spec);
  states::BuiltState st = make_state(kind, params, "state spec");
  if (!st.is_fock)
    throw std::invalid_argument(
        "state inspect covers field states; spin registers have no photon "
        "content");
  InspectReport rep;
  rep.kind = kind;
  rep.modes = st.fockp.modes();
  rep.dims = st.fockp.dims;
  for (int m = 0; m < st.fockp.modes(); ++m) {
    Eigen::VectorXd d = fock::photon_distribution(st.fockp, m);
    for (long k = 0; k < d.size(); ++k) rep.mean_photon += k * d[k];
  }
  double n2 = st.fockp.amp.squaredNorm();
  rep.purity = n2 * n2;
  phase::WignerGrid g = phase::wigner(mode_zero_density(st.fockp));
  rep.wigner_min = g.values.minCoeff();
  rep.wigner_max = g.values.maxCoeff();
  return rep;
}

std::string wigner_csv(const std::string& spec, double extent, int n) {
  auto [kind, params] = parse_inline_spec(spec);
  states::BuiltState st = make_state(kind, params, "state spec");
  if (!st.is_fock)
    throw std::invalid_argument("wigner export covers field states");
  phase::WignerGrid g = phase::wigner(mode_zero_density(st.fockp), extent, n);
  std::string out = "x,y,value\n";
  for (long i = 0; i < g.re.size(); ++i)
    for (long j = 0; j < g.im.size(); ++j)
      out += fmt9(g.re[i]) + ',' + fmt9(g.im[j]) + ',' + fmt9(g.values(i, j)) +
             '\n';
  return out;
}

std::string marginal_csv(const std::string& spec, double angle) {
  auto [kind, params] = parse_inline_spec(spec);
  states::BuiltState st = make_state(kind, params, "state spec");
  if (!st.is_fock)
    throw std::invalid_argument("marginal export covers field states");
  auto q =
      phase::quadrature_distribution(mode_zero_density(st.fockp), angle);
  std::string out = "x,angle,density\n";
  for (long i = 0; i < q.xs.size(); ++i)
    out += fmt9(q.xs[i]) + ',' + fmt9(q.angle) + ',' + fmt9(q.density[i]) +
           '\n';
  return out;
}

}  // namespace macroq::cli
