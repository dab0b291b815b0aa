#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "macroq/cli.hpp"

using namespace macroq;

namespace {

double scs_strength(double a) {
  const double e = std::exp(-2.0 * a * a);
  return a * a * (1.0 - e) / (1.0 + e);
}

// seconds is wall-clock and has no business in a reproducibility check
bool same_results(const std::vector<cli::ReportRow>& a,
                  const std::vector<cli::ReportRow>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& x = a[i];
    const auto& y = b[i];
    const bool values_match =
        (x.value == y.value) ||
        (std::isnan(x.value) && std::isnan(y.value));
    if (x.state_id != y.state_id || x.param_name != y.param_name ||
        x.param_value != y.param_value || x.measure != y.measure ||
        !values_match || x.error_estimate != y.error_estimate ||
        x.method != y.method)
      return false;
  }
  return true;
}

const cli::ReportRow& find_row(const std::vector<cli::ReportRow>& rows,
                               const std::string& state_id,
                               const std::string& measure) {
  for (const auto& r : rows)
    if (r.state_id == state_id && r.measure == measure) return r;
  throw std::runtime_error("no row " + state_id + "/" + measure);
}

}  // namespace

TEST_CASE("manifest parsing accepts the documented fields") {
  const std::string text = R"({
    "seed": 42,
    "output": {"format": "json", "path": "table.json"},
    "states": [
      {"id": "cat", "kind": "scs", "params": {"alpha": 2.0}},
      {"id": "reg", "kind": "ghz", "params": {"n": 4}}
    ],
    "measures": [{"tag": "purity"}, {"tag": "disconnectivity"}],
    "sweep": {"state": "cat", "param": "alpha", "values": [1.0, 2.0]}
  })";
  cli::RunManifest m = cli::parse_manifest(text);
  CHECK(m.seed == 42u);
  CHECK(m.output.format == "json");
  CHECK(m.output.path == "table.json");
  REQUIRE(m.states.size() == 2);
  CHECK(m.states[0].id == "cat");
  CHECK(m.states[1].kind == "ghz");
  CHECK(m.states[1].params.at("n") == 4.0);
  REQUIRE(m.measures.size() == 2);
  REQUIRE(m.sweep.has_value());
  CHECK(m.sweep->state == "cat");
  CHECK(m.sweep->param == "alpha");
  CHECK(m.sweep->values == std::vector<double>{1.0, 2.0});
}

TEST_CASE("manifest parsing rejects bad input with context") {
  auto message_of = [](const std::string& text) {
    try {
      cli::parse_manifest(text);
    } catch (const std::invalid_argument& e) {
      return std::string(e.what());
    }
    return std::string();
  };

  SUBCASE("malformed json names the position") {
    std::string msg = message_of("{\n  \"states\": [,]\n}");
    CHECK(msg.find("line 2") != std::string::npos);
    CHECK(msg.find("column") != std::string::npos);
  }
  SUBCASE("unknown measure tag is named") {
    std::string msg = message_of(
        R"({"states": [{"id": "v", "kind": "vacuum"}],
            "measures": [{"tag": "frobnicate"}]})");
    CHECK(msg.find("frobnicate") != std::string::npos);
  }
  SUBCASE("unknown state kind is named") {
    std::string msg = message_of(
        R"({"states": [{"id": "x", "kind": "weird"}], "measures": []})");
    CHECK(msg.find("weird") != std::string::npos);
  }
  SUBCASE("duplicate state ids are rejected") {
    std::string msg = message_of(
        R"({"states": [{"id": "a", "kind": "vacuum"},
                       {"id": "a", "kind": "vacuum"}], "measures": []})");
    CHECK(msg.find("duplicate") != std::string::npos);
  }
  SUBCASE("missing required measure parameter") {
    std::string msg = message_of(
        R"({"states": [{"id": "v", "kind": "vacuum"}],
            "measures": [{"tag": "cavalcanti_reid"}]})");
    CHECK(msg.find("'s'") != std::string::npos);
  }
  SUBCASE("unknown top-level field") {
    std::string msg = message_of(
        R"({"states": [], "measures": [], "plots": true})");
    CHECK(msg.find("plots") != std::string::npos);
  }
  SUBCASE("state parameters must apply to the kind") {
    std::string msg = message_of(
        R"({"states": [{"id": "c", "kind": "coherent",
                        "params": {"alpha": 1.0, "r": 0.5}}],
            "measures": []})");
    CHECK(msg.find("'r'") != std::string::npos);
    CHECK(msg.find("coherent") != std::string::npos);
  }
  SUBCASE("sweep must reference a listed state") {
    std::string msg = message_of(
        R"({"states": [{"id": "v", "kind": "vacuum"}], "measures": [],
            "sweep": {"state": "w", "param": "cutoff", "values": [8]}})");
    CHECK(msg.find("'w'") != std::string::npos);
  }
  SUBCASE("sweep parameter must be set on the state") {
    std::string msg = message_of(
        R"({"states": [{"id": "c", "kind": "coherent",
                        "params": {"alpha": 1.0}}], "measures": [],
            "sweep": {"state": "c", "param": "phi", "values": [0.5]}})");
    CHECK(msg.find("'phi'") != std::string::npos);
  }
  SUBCASE("measure domain must match every state") {
    std::string msg = message_of(
        R"({"states": [{"id": "c", "kind": "coherent",
                        "params": {"alpha": 1.0}}],
            "measures": [{"tag": "fisher_neff"}]})");
    CHECK(msg.find("fisher_neff") != std::string::npos);
    CHECK(msg.find("'c'") != std::string::npos);
  }
}

TEST_CASE("alpha sweep reproduces the closed-form interference strength") {
  const std::string text = R"({
    "seed": 7,
    "states": [{"id": "cat", "kind": "scs", "params": {"alpha": 1.0}}],
    "measures": [{"tag": "measure_I"}],
    "sweep": {"state": "cat", "param": "alpha",
              "values": [0.5, 1.0, 2.0, 3.0]}
  })";
  auto rows = cli::run(cli::parse_manifest(text), 1);
  REQUIRE(rows.size() == 4);
  const double alphas[] = {0.5, 1.0, 2.0, 3.0};
  for (int i = 0; i < 4; ++i) {
    CHECK(rows[i].state_id == "cat");
    CHECK(rows[i].param_name == "alpha");
    CHECK(rows[i].param_value == alphas[i]);
    CHECK(rows[i].measure == "measure_I");
    CHECK(std::abs(rows[i].value - scs_strength(alphas[i])) < 1e-6);
    CHECK(rows[i].method.rfind("error:", 0) != 0);
    CHECK(rows[i].seconds >= 0.0);
  }
  CHECK(!cli::has_error_rows(rows));
}

TEST_CASE("empty measure list yields an empty table") {
  auto rows = cli::run(cli::parse_manifest(
                           R"({"states": [{"id": "v", "kind": "vacuum"}],
                               "measures": []})"),
                       1);
  CHECK(rows.empty());
  CHECK(!cli::has_error_rows(rows));
  CHECK(cli::to_csv(rows) ==
        "state_id,param_name,param_value,measure,value,error_estimate,method,"
        "seconds\n");
}

TEST_CASE("failures surface as error rows and never drop the table") {
  // cutoff 10 holds alpha = 0.5 but truncates alpha = 3 beyond tolerance
  const std::string text = R"({
    "states": [{"id": "c", "kind": "coherent",
                "params": {"alpha": 0.5, "truncation": 10}}],
    "measures": [{"tag": "mean_photon"}],
    "sweep": {"state": "c", "param": "alpha", "values": [0.5, 3.0]}
  })";
  auto rows = cli::run(cli::parse_manifest(text), 1);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].param_value == 0.5);
  CHECK(std::abs(rows[0].value - 0.25) < 1e-9);
  CHECK(rows[1].param_value == 3.0);
  CHECK(std::isnan(rows[1].value));
  CHECK(rows[1].method.rfind("error:", 0) == 0);
  CHECK(cli::has_error_rows(rows));

  SUBCASE("unknown measure parameters fail the row, not the run") {
    auto bad = cli::run(cli::parse_manifest(
                            R"({"states": [{"id": "v", "kind": "vacuum"}],
                                "measures": [{"tag": "purity",
                                              "params": {"bogus": 1}}]})"),
                        1);
    REQUIRE(bad.size() == 1);
    CHECK(bad[0].method.rfind("error:", 0) == 0);
    CHECK(bad[0].method.find("bogus") != std::string::npos);
  }
}

TEST_CASE("repeat runs with one seed match bit for bit across worker counts") {
  const std::string text = R"({
    "seed": 2024,
    "states": [
      {"id": "g", "kind": "generalized_ghz", "params": {"n": 4, "epsilon": 0.3}},
      {"id": "p", "kind": "product_plus", "params": {"n": 3}}
    ],
    "measures": [{"tag": "fisher_neff"}, {"tag": "max_variance"},
                 {"tag": "qfi_z"}, {"tag": "purity"}]
  })";
  cli::RunManifest m = cli::parse_manifest(text);
  auto first = cli::run(m, 1);
  auto second = cli::run(m, 1);
  auto parallel = cli::run(m, 3);
  REQUIRE(first.size() == 8);
  CHECK(same_results(first, second));
  CHECK(same_results(first, parallel));

  // a different seed is allowed to move the stochastic searches
  cli::RunManifest shifted = m;
  shifted.seed = 2025;
  auto other = cli::run(shifted, 1);
  CHECK(other.size() == first.size());

  // rows arrive sorted by state, sweep point, measure
  for (std::size_t i = 1; i < first.size(); ++i) {
    const auto key = [](const cli::ReportRow& r) {
      return std::make_tuple(r.state_id, r.param_name, r.param_value,
                             r.measure);
    };
    CHECK(key(first[i - 1]) <= key(first[i]));
  }
}

TEST_CASE("report tables survive the round trip") {
  const std::string text = R"({
    "states": [{"id": "c", "kind": "coherent",
                "params": {"alpha": 0.5, "truncation": 10}}],
    "measures": [{"tag": "mean_photon"}, {"tag": "measure_I"}],
    "sweep": {"state": "c", "param": "alpha", "values": [0.5, 3.0]}
  })";
  auto rows = cli::run(cli::parse_manifest(text), 1);
  REQUIRE(rows.size() == 4);
  REQUIRE(cli::has_error_rows(rows));  // the alpha = 3 rows fail

  SUBCASE("json is a bitwise fixed point") {
    const std::string once = cli::to_json(rows);
    const std::string twice = cli::to_json(cli::rows_from_json(once));
    CHECK(once == twice);
  }
  SUBCASE("csv keeps nine significant digits") {
    const std::string csv = cli::to_csv(rows);
    std::istringstream lines(csv);
    std::string line;
    while (std::getline(lines, line)) {
      if (line.empty()) continue;
      CHECK(std::count(line.begin(), line.end(), ',') == 7);
    }
    auto back = cli::rows_from_csv(csv);
    REQUIRE(back.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      CHECK(back[i].state_id == rows[i].state_id);
      CHECK(back[i].measure == rows[i].measure);
      if (std::isnan(rows[i].value)) {
        CHECK(std::isnan(back[i].value));
      } else {
        CHECK(back[i].value ==
              doctest::Approx(rows[i].value).epsilon(1e-8));
      }
      CHECK(back[i].param_value ==
            doctest::Approx(rows[i].param_value).epsilon(1e-8));
    }
  }
}

TEST_CASE("scan grid parameters reach the small-S violations") {
  const std::string text = R"({
    "states": [{"id": "cat", "kind": "scs", "params": {"alpha": 2.0}}],
    "measures": [{"tag": "scan_S_max",
                  "params": {"s_min": 0.125, "s_max": 0.5, "s_step": 0.125}}]
  })";
  auto rows = cli::run(cli::parse_manifest(text), 1);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].value == 0.25);  // violated at 0.25, satisfied from 0.375 up

  auto bad = cli::run(cli::parse_manifest(
                          R"({"states": [{"id": "v", "kind": "vacuum"}],
                              "measures": [{"tag": "scan_S_max",
                                            "params": {"s_min": -1}}]})"),
                      1);
  REQUIRE(bad.size() == 1);
  CHECK(bad[0].method.rfind("error:", 0) == 0);
}

TEST_CASE("integral and algebraic interference routes agree") {
  const std::string text = R"({
    "states": [{"id": "cat", "kind": "scs", "params": {"alpha": 1.5}}],
    "measures": [{"tag": "measure_I"},
                 {"tag": "measure_I", "params": {"route": 1}}]
  })";
  auto rows = cli::run(cli::parse_manifest(text), 1);
  REQUIRE(rows.size() == 2);
  CHECK(!cli::has_error_rows(rows));
  CHECK(rows[0].method != rows[1].method);
  const double gap = std::abs(rows[0].value - rows[1].value);
  const double err =
      std::max(rows[0].error_estimate, rows[1].error_estimate);
  CHECK(gap <= std::max(1e-5, 3.0 * err));
}

TEST_CASE("preset tables cover the survey galleries") {
  SUBCASE("interference-strength gallery") {
    auto rows = cli::preset_table("measure-I-gallery", 1, 0);
    CHECK(rows.size() == 14);  // seven states, strength and photon count
    const auto& coh = find_row(rows, "coherent", "measure_I");
    CHECK(std::abs(coh.value) < 1e-6);
    const auto& cat = find_row(rows, "scs", "measure_I");
    CHECK(std::abs(cat.value - scs_strength(2.0)) < 1e-5);
    const auto& amp = find_row(rows, "qiopa", "measure_I");
    const auto& amp_n = find_row(rows, "qiopa", "mean_photon");
    CHECK(std::abs(amp.value - amp_n.value) < 1e-4);
    CHECK(!cli::has_error_rows(rows));
  }
  SUBCASE("disconnectivity gallery") {
    auto rows = cli::preset_table("disconnectivity", 1, 0);
    CHECK(find_row(rows, "ghz", "disconnectivity").value == 4.0);
    CHECK(find_row(rows, "product_plus", "disconnectivity").value == 1.0);
    CHECK(find_row(rows, "mixed_ghz", "disconnectivity").value == 1.0);
    CHECK(find_row(rows, "generalized_ghz", "disconnectivity").value == 4.0);
  }
  SUBCASE("quadrature-partition gallery") {
    auto rows = cli::preset_table("cavalcanti-reid", 1, 0);
    // on the default S >= 1 grid the delta term swamps the fringe deficit
    CHECK(find_row(rows, "vacuum", "scan_S_max").value == 0.0);
    CHECK(find_row(rows, "scs_2", "scan_S_max").value == 0.0);
    CHECK(find_row(rows, "scs_3", "scan_S_max").value == 0.0);
    const auto& pair = find_row(rows, "scs_2s", "cavalcanti_reid");
    CHECK(pair.method.find("violated") != std::string::npos);
    CHECK(pair.value < 1.0);
  }
  SUBCASE("detector-resolution gallery") {
    auto rows = cli::preset_table("sekatski", 1, 0);
    REQUIRE(rows.size() == 3);
    double loose = 0.0, tight = 0.0;
    for (const auto& r : rows) {
      if (r.state_id == "coherent_10" && r.param_value == 0.6)
        loose = r.value;
      if (r.state_id == "coherent_10" && r.param_value == 0.75)
        tight = r.value;
    }
    CHECK(loose > tight);  // easier guesses tolerate more blur
    CHECK(tight > 0.0);
  }
  SUBCASE("unknown preset is refused") {
    CHECK_THROWS_WITH_AS(cli::preset_table("nope", 1, 0),
                         doctest::Contains("nope"), std::invalid_argument);
    CHECK(cli::preset_names().size() == 4);
  }
}

TEST_CASE("single-state inspection reports photon content and extrema") {
  cli::InspectReport rep = cli::inspect_state("coherent:alpha=1");
  CHECK(rep.kind == "coherent");
  CHECK(rep.modes == 1);
  CHECK(std::abs(rep.mean_photon - 1.0) < 1e-6);
  CHECK(std::abs(rep.purity - 1.0) < 1e-9);
  CHECK(std::abs(rep.wigner_max - 1.0 / M_PI) < 5e-3);
  CHECK(rep.wigner_min > -1e-6);  // coherent states stay positive

  cli::InspectReport cat = cli::inspect_state("scs:alpha=2");
  CHECK(cat.wigner_min < -0.2);  // interference fringes go deep negative

  CHECK_THROWS_AS(cli::inspect_state("ghz:n=3"), std::invalid_argument);
  CHECK_THROWS_AS(cli::inspect_state("coherent:alpha=abc"),
                  std::invalid_argument);
  CHECK_THROWS_AS(cli::inspect_state("coherent:alpha"),
                  std::invalid_argument);
}

TEST_CASE("grid exports are plain csv") {
  const std::string wig = cli::wigner_csv("vacuum:truncation=8", 3.0, 41);
  std::istringstream lines(wig);
  std::string line;
  std::getline(lines, line);
  CHECK(line == "x,y,value");
  int n = 0;
  double peak = 0.0;
  while (std::getline(lines, line)) {
    ++n;
    CHECK(std::count(line.begin(), line.end(), ',') == 2);
    const double v = std::strtod(line.substr(line.rfind(',') + 1).c_str(),
                                 nullptr);
    peak = std::max(peak, v);
  }
  CHECK(n == 41 * 41);
  CHECK(std::abs(peak - 1.0 / M_PI) < 1e-3);

  const std::string mar = cli::marginal_csv("vacuum:truncation=8", 0.0);
  std::istringstream mlines(mar);
  std::getline(mlines, line);
  CHECK(line == "x,angle,density");
  std::vector<double> xs, ds;
  while (std::getline(mlines, line)) {
    std::istringstream cells(line);
    std::string c;
    std::getline(cells, c, ',');
    xs.push_back(std::strtod(c.c_str(), nullptr));
    std::getline(cells, c, ',');
    std::getline(cells, c, ',');
    ds.push_back(std::strtod(c.c_str(), nullptr));
  }
  REQUIRE(xs.size() > 10);
  double mass = 0.0;
  for (std::size_t i = 1; i < xs.size(); ++i)
    mass += 0.5 * (ds[i] + ds[i - 1]) * (xs[i] - xs[i - 1]);
  CHECK(std::abs(mass - 1.0) < 1e-3);
}
