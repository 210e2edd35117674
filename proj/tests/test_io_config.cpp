#include <doctest.h>

#include <cmath>
#include <limits>
#include <string>

#include <json.hpp>

#include "esmppt/config.hpp"
#include "esmppt/errors.hpp"
#include "esmppt/io.hpp"

using namespace esmppt;

namespace {

const std::string kPlantText = R"(
# reference module
pv.i_sc_ref = 5.5
pv.i_0_ref = 1e-10
pv.r_s = 0.5
pv.r_p = 200
pv.n_ideality = 1.2
pv.alpha_i = 0.0047
pv.e_g = 1.121
pv.n_series_cells = 60
load.kind = constant_voltage
load.value = 34.6728089953
mode = quasi_static
)";

const std::string kControllerText = R"(
variant = unbiased_exp
gain_k = 0.01
omega = 5
omega_h = 3
omega_l = 3
amp_a = 0.2
lambda = 0.05
alpha0 = 1
beta = 0.1
d_hat0 = 0.2
)";

const std::string kScenarioText = R"(
duration = 10
dt = 0.005
noise_std = 0
rng_seed = 7
keyframe.0.time = 0
keyframe.0.irradiance = 1000
keyframe.0.temperature = 298.15
keyframe.1.time = 10
keyframe.1.irradiance = 600
keyframe.1.temperature = 298.15
)";

}  // namespace

TEST_CASE("key-value parser") {
  const auto cfg = KeyValueConfig::parse_text("a = 1 # trailing\n\n  b.c =  text value \n");
  CHECK(cfg.get_double("a") == 1.0);
  CHECK(cfg.get_string("b.c") == "text value");
  CHECK(cfg.keys().size() == 2);
  CHECK_FALSE(cfg.has("missing"));

  SUBCASE("errors carry source and line") {
    try {
      KeyValueConfig::parse_text("ok = 1\nbroken line\n", "demo.cfg");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find("demo.cfg:2") != std::string::npos);
    }
    CHECK_THROWS_AS(KeyValueConfig::parse_text("a = 1\na = 2\n"), ParseError);
    CHECK_THROWS_AS(KeyValueConfig::parse_text("a =\n"), ParseError);
    CHECK_THROWS_AS(KeyValueConfig::parse_text("= 3\n"), ParseError);
  }

  SUBCASE("numeric conversions") {
    const auto c = KeyValueConfig::parse_text("x = 2.5\ny = inf\nz = nope\nn = 3\n");
    CHECK(c.get_double("x") == 2.5);
    CHECK(std::isinf(c.get_double("y")));
    CHECK_THROWS_AS(c.get_double("z"), ParseError);
    CHECK(c.get_int("n") == 3);
    CHECK_THROWS_AS(c.get_int("x"), ParseError);
    CHECK_THROWS_AS(c.get_double("missing"), ParseError);
  }

  SUBCASE("unknown keys are rejected per schema") {
    const auto c = KeyValueConfig::parse_text("pv.bogus = 1\n");
    CHECK_THROWS_AS(c.require_known_keys({"load", "mode"}), ParseError);
    CHECK_NOTHROW(c.require_known_keys({"pv"}));
  }
}

TEST_CASE("plant config loading") {
  const auto plant = load_plant_config(KeyValueConfig::parse_text(kPlantText));
  CHECK(plant.pv.i_sc_ref == 5.5);
  CHECK(plant.pv.n_series_cells == 60);
  CHECK(plant.pv.g_ref == 1000.0);  // default
  CHECK(plant.load.kind == LoadKind::ConstantVoltage);
  CHECK(plant.mode == PlantMode::QuasiStatic);

  SUBCASE("infinite shunt resistance sentinel") {
    auto text = kPlantText;
    text.replace(text.find("pv.r_p = 200"), 12, "pv.r_p = inf");
    const auto p = load_plant_config(KeyValueConfig::parse_text(text));
    CHECK(std::isinf(p.pv.r_p));
  }

  SUBCASE("unknown key fails") {
    CHECK_THROWS_AS(load_plant_config(KeyValueConfig::parse_text(kPlantText + "zzz = 1\n")),
                    ParseError);
  }

  SUBCASE("snapshot is stable and complete") {
    const auto snap = plant_snapshot_json(plant);
    CHECK(snap == plant_snapshot_json(plant));
    const auto j = nlohmann::ordered_json::parse(snap);
    CHECK(j["pv.i_sc_ref"] == 5.5);
    CHECK(j["mode"] == "quasi_static");
  }
}

TEST_CASE("controller config loading") {
  const auto params = load_es_params(KeyValueConfig::parse_text(kControllerText));
  CHECK(params.variant == EsVariant::UnbiasedExp);
  CHECK(params.lambda == 0.05);
  CHECK(params.beta == 0.1);
  CHECK(params.pt_q == 1.0);  // default

  CHECK_THROWS_AS(load_es_params(KeyValueConfig::parse_text("variant = magic\ngain_k = 1\n")),
                  ParseError);

  // validation runs at load time
  auto bad = kControllerText;
  bad.replace(bad.find("gain_k = 0.01"), 13, "gain_k = -1.0");
  CHECK_THROWS_AS(load_es_params(KeyValueConfig::parse_text(bad)), InvalidArgument);
}

TEST_CASE("scenario config loading") {
  const auto sc = load_scenario(KeyValueConfig::parse_text(kScenarioText));
  CHECK(sc.duration == 10.0);
  CHECK(sc.rng_seed == 7);
  REQUIRE(sc.env_profile.size() == 2);
  CHECK(sc.env_profile[1].irradiance == 600.0);

  CHECK_THROWS_AS(load_scenario(KeyValueConfig::parse_text("duration = 1\ndt = 0.01\n")),
                  ParseError);
}

TEST_CASE("csv round trips") {
  SUBCASE("pv curve") {
    std::vector<IvPoint> curve{{0.0, 1.5, 0.0}, {10.0, 1.2, 12.0}, {20.0, 0.0, 0.0}};
    const auto parsed = parse_pv_curve_csv(pv_curve_csv(curve));
    REQUIRE(parsed.size() == curve.size());
    for (size_t i = 0; i < curve.size(); ++i) {
      CHECK(parsed[i].voltage == doctest::Approx(curve[i].voltage).epsilon(1e-10));
      CHECK(parsed[i].current == doctest::Approx(curve[i].current).epsilon(1e-10));
    }
  }

  SUBCASE("duty curve with awkward numbers") {
    std::vector<DutyPower> curve{{0.123456789012, 17.2319863423},
                                 {0.98, 1e-9},
                                 {0.5, std::numeric_limits<double>::infinity()}};
    const auto parsed = parse_duty_power_csv(duty_power_csv(curve));
    REQUIRE(parsed.size() == 3);
    CHECK(parsed[0].power == doctest::Approx(17.2319863423).epsilon(1e-10));
    CHECK(std::isinf(parsed[2].power));
  }

  SUBCASE("trace") {
    SimTrace trace;
    for (int i = 0; i < 5; ++i) {
      trace.time.push_back(0.1 * i);
      trace.duty_applied.push_back(0.3 + 0.01 * i);
      trace.d_hat.push_back(0.3);
      trace.g_hat.push_back(-0.2);
      trace.eta.push_back(17.0);
      trace.alpha.push_back(1.0);
      trace.power.push_back(17.1);
      trace.env_irradiance.push_back(1000.0);
      trace.env_temperature.push_back(298.15);
      trace.oracle_d_star.push_back(0.34);
      trace.oracle_p_star.push_back(17.23);
      trace.saturation_flag.push_back(0.0);
    }
    const std::string csv = trace_csv(trace);
    CHECK(csv.rfind("time,duty_applied,d_hat,g_hat,eta,alpha,power,env_irradiance,"
                    "env_temperature,oracle_d_star,oracle_p_star,saturation_flag\n",
                    0) == 0);
    const auto parsed = parse_trace_csv(csv);
    REQUIRE(parsed.rows() == trace.rows());
    for (size_t c = 0; c < SimTrace::kColumnNames.size(); ++c) {
      for (size_t i = 0; i < trace.rows(); ++i) {
        CHECK(parsed.column(c)[i] ==
              doctest::Approx(trace.column(c)[i]).epsilon(1e-10));
      }
    }

    CHECK_THROWS_AS(parse_trace_csv("bogus,header\n1,2\n"), ParseError);
    CHECK_THROWS_AS(parse_pv_curve_csv("voltage,current,power\n1,2\n"), ParseError);
  }
}

TEST_CASE("report json") {
  MetricsReport m;
  m.epsilon = 0.02;
  m.convergence_time = std::numeric_limits<double>::infinity();
  m.steady_bias = 1e-4;
  m.dither_amplitude_final = 0.01;
  m.tracking_rmse = 0.3;
  m.energy_captured_ratio = 0.97;
  const auto j = nlohmann::ordered_json::parse(metrics_json(m));
  CHECK(j["convergence_time"].is_null());
  CHECK(j["energy_captured_ratio"] == 0.97);
  // stable key order
  CHECK(metrics_json(m) == metrics_json(m));

  TuningReport r;
  r.cond_13_ok = true;
  r.cond_14_ok = false;
  r.h_used = -79.2;
  r.jacobian_eigenvalues = {std::complex<double>(-0.05, 0.2),
                            std::complex<double>(-0.05, -0.2),
                            std::complex<double>(-2.9, 0.0),
                            std::complex<double>(-0.05, 0.0)};
  r.hurwitz = true;
  r.degeneracy_warnings = {"omega_l equals lambda"};
  const auto t = nlohmann::ordered_json::parse(tuning_report_json(r));
  CHECK(t["cond_13_ok"] == true);
  CHECK(t["cond_14_ok"] == false);
  CHECK(t["jacobian_eigenvalues"].size() == 4);
  CHECK(t["jacobian_eigenvalues"][0]["im"] == 0.2);
  CHECK(t["degeneracy_warnings"][0] == "omega_l equals lambda");
}
