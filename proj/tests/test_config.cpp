#include <algorithm>

#include "doctest.h"
#include "oracles.hpp"
#include "qfiflow/config.hpp"

using namespace qfiflow;
using namespace qfiflow::cli;

namespace {

bool has_issue(const ConfigError& e, ConfigIssue::Kind kind, const std::string& key) {
    return std::any_of(e.issues().begin(), e.issues().end(),
                       [&](const ConfigIssue& i) { return i.kind == kind && i.key == key; });
}

ConfigError parse_error(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e;
    }
    FAIL("config was accepted: " << text);
    return ConfigError({});
}

const char* kWeak = "model = damped_jc\nmodel.W = 0.3\nmodel.lambda = 1\nmodel.phi = 0\ntime.t_max = 10\ntime.dt = 1e-3\n";

MatrixSpec random_matrix(oracle::Random& rnd, int n, bool hermitian) {
    const Matrix m = hermitian ? rnd.hermitian(n) : rnd.complex_matrix(n);
    return MatrixSpec::from(m);
}

ScenarioConfig random_config(oracle::Random& rnd) {
    ScenarioConfig c;
    const int kind = rnd.integer(0, 2);
    c.t_max = rnd.uniform(0.5, 20.0);
    if (rnd.integer(0, 1)) c.dt = c.t_max / rnd.uniform(10.0, 1e5);
    if (rnd.integer(0, 1)) c.stepper = StepperConfig::Kind::Halving;
    if (rnd.integer(0, 1)) c.stepper_tolerance = std::pow(10.0, rnd.uniform(-12, -6));
    if (rnd.integer(0, 1)) c.guard_halfwidth = rnd.uniform(0.0, 0.1);
    if (rnd.integer(0, 1)) c.witness_eps = rnd.uniform(0.0, 1e-6);
    for (int k = rnd.integer(0, 3); k > 0; --k) c.report_M.push_back(rnd.integer(1, 100000));
    if (kind == 0) {
        c.model = ModelKind::DampedJC;
        c.W = rnd.uniform(0.01, 5.0);
        c.lambda = rnd.uniform(0.1, 4.0);
        if (rnd.integer(0, 1)) c.phi = rnd.uniform(-3.0, 3.0);
        if (rnd.integer(0, 1)) c.path = IntegrationPath::Generator;
        if (rnd.integer(0, 1)) c.sweep = SweepSpec{"W", {rnd.uniform(0.1, 1), rnd.uniform(1, 5)}};
    } else if (kind == 1) {
        c.model = ModelKind::MarkovControl;
        c.gamma0 = rnd.uniform(0.01, 3.0);
        if (rnd.integer(0, 1)) c.sweep = SweepSpec{"gamma0", {rnd.uniform(0.1, 1)}};
    } else {
        c.model = ModelKind::CustomGenerator;
        const int n = rnd.integer(2, 3);
        CustomSpec cs;
        if (rnd.integer(0, 1)) cs.hamiltonian = random_matrix(rnd, n, true);
        cs.probe = MatrixSpec::from(rnd.density(n));
        cs.param_generator = random_matrix(rnd, n, true);
        if (rnd.integer(0, 1)) cs.theta = rnd.uniform(-1, 1);
        for (int k = rnd.integer(0, 2); k > 0; --k) {
            ChannelSpec ch;
            ch.jump = random_matrix(rnd, n, false);
            ch.rate.base = rnd.uniform(-0.5, 1.0);
            if (rnd.integer(0, 1)) {
                ch.has_amp = true;
                ch.rate.amp = rnd.uniform(-1, 1);
            }
            if (rnd.integer(0, 1)) {
                ch.has_freq = true;
                ch.rate.freq = rnd.uniform(0, 5);
            }
            cs.channels.push_back(ch);
        }
        c.custom = cs;
    }
    if (rnd.integer(0, 1)) {
        auto cols = available_columns(c);
        std::vector<std::string> pick;
        for (const auto& col : cols) {
            if (rnd.integer(0, 1)) pick.push_back(col);
        }
        c.outputs = pick;
    }
    return c;
}

} // namespace

TEST_SUITE("config") {

TEST_CASE("parse a damped JC config") {
    const ScenarioConfig c = parse_config(std::string(kWeak) + "report.M = 1, 10, 100  # counts\n");
    CHECK(c.model == ModelKind::DampedJC);
    CHECK(*c.W == 0.3);
    CHECK(*c.lambda == 1.0);
    CHECK(c.effective_dt() == 1e-3);
    CHECK(c.effective_guard_halfwidth() == doctest::Approx(3e-3));
    CHECK(c.effective_M() == std::vector<long>{1, 10, 100});
    CHECK(c.path == IntegrationPath::Segmented);
    CHECK(c.channel_count() == 1);
    CHECK(c.dim() == 2);
}

TEST_CASE("defaults") {
    const ScenarioConfig c = parse_config("model = damped_jc\nmodel.W = 3\nmodel.lambda = 2\ntime.t_max = 1\n");
    CHECK(c.effective_dt() == doctest::Approx(5e-4));
    CHECK(c.effective_M() == std::vector<long>{1});
    CHECK(c.stepper == StepperConfig::Kind::FixedRk4);
    const ScenarioConfig m = parse_config("model = markov_control\nmodel.gamma0 = 0.5\ntime.t_max = 4\n");
    CHECK(m.effective_dt() == doctest::Approx(2e-3));
    // cap at t_max / 10
    const ScenarioConfig s = parse_config("model = damped_jc\nmodel.W = 3\nmodel.lambda = 1e-3\ntime.t_max = 5\n");
    CHECK(s.effective_dt() == doctest::Approx(0.5));
}

TEST_CASE("negative lambda is a range error") {
    const ConfigError e = parse_error("model = damped_jc\nmodel.W = 0.3\nmodel.lambda = -1\ntime.t_max = 10\n");
    CHECK(has_issue(e, ConfigIssue::Kind::Range, "model.lambda"));
    CHECK(std::string(e.what()).find("RangeError [model.lambda]") != std::string::npos);
}

TEST_CASE("dt larger than t_max/10 is a range error") {
    const ConfigError e = parse_error("model = damped_jc\nmodel.W = 0.3\nmodel.lambda = 1\ntime.t_max = 1\ntime.dt = 1\n");
    CHECK(has_issue(e, ConfigIssue::Kind::Range, "time.dt"));
}

TEST_CASE("every violation is reported") {
    const ConfigError e =
        parse_error("model = damped_jc\nmodel.W = 0.3\nmodel.lambda = -1\ntime.t_max = 1\ntime.dt = 1\nbogus.key = 2\n");
    CHECK(e.issues().size() >= 3);
    CHECK(has_issue(e, ConfigIssue::Kind::Range, "model.lambda"));
    CHECK(has_issue(e, ConfigIssue::Kind::Range, "time.dt"));
    CHECK(has_issue(e, ConfigIssue::Kind::Schema, "bogus.key"));
}

TEST_CASE("schema errors") {
    CHECK(has_issue(parse_error("model.W = 1\nmodel.lambda = 1\n"), ConfigIssue::Kind::Schema, "model"));
    CHECK(has_issue(parse_error("model = spin_bath\n"), ConfigIssue::Kind::Schema, "model"));
    CHECK(has_issue(parse_error(std::string(kWeak) + "model.W = 2\n"), ConfigIssue::Kind::Schema, "model.W"));
    CHECK(has_issue(parse_error(std::string(kWeak) + "stepper = euler\n"), ConfigIssue::Kind::Schema, "stepper"));
    CHECK(has_issue(parse_error(std::string(kWeak) + "outputs = t, nope\n"), ConfigIssue::Kind::Schema, "outputs"));
    CHECK(has_issue(parse_error(std::string(kWeak) + "report.M = 1.5\n"), ConfigIssue::Kind::Schema, "report.M"));
    CHECK(has_issue(parse_error(std::string(kWeak) + "time.t_max = abc\n"), ConfigIssue::Kind::Schema, "time.t_max"));
    CHECK(has_issue(parse_error(std::string(kWeak) + "just words\n"), ConfigIssue::Kind::Schema, "line 7"));
    CHECK(has_issue(parse_error(std::string(kWeak) + "sweep.param = gamma0\nsweep.values = 1\n"),
                    ConfigIssue::Kind::Schema, "sweep.param"));
    CHECK(has_issue(parse_error(std::string(kWeak) + "custom.theta = 1\n"), ConfigIssue::Kind::Schema, "custom"));
}

TEST_CASE("custom generator config") {
    const ScenarioConfig c = parse_config(
        "model = custom_generator\n"
        "time.t_max = 2\n"
        "custom.hamiltonian = 1, 0; 0, -1\n"
        "custom.probe = 0.5, 0.5; 0.5, 0.5\n"
        "custom.param_generator = 0, -0.5i; 0.5i, 0\n"
        "custom.channel.1.jump = 0, 0; 1, 0\n"
        "custom.channel.1.rate = 0.2\n"
        "custom.channel.1.rate_amp = 0.1\n"
        "custom.channel.1.rate_freq = 2\n");
    REQUIRE(c.custom);
    CHECK(c.dim() == 2);
    CHECK(c.channel_count() == 1);
    CHECK(c.custom->param_generator.to_matrix()(0, 1) == Complex(0, -0.5));
    CHECK(c.custom->channels[0].rate(0.0) == doctest::Approx(0.3));
    CHECK(c.effective_dt() == doctest::Approx(2e-3));
    const auto cols = available_columns(c);
    CHECK(std::find(cols.begin(), cols.end(), "gamma_1") != cols.end());
    CHECK(std::find(cols.begin(), cols.end(), "F_analytic") == cols.end());

    CHECK(has_issue(parse_error("model = custom_generator\ntime.t_max = 1\ncustom.probe = 1, 0; 0, 0\n"
                                "custom.param_generator = 1, 0; 0, -1\ncustom.channel.2.jump = 0, 1; 0, 0\n"
                                "custom.channel.2.rate = 1\n"),
                    ConfigIssue::Kind::Schema, "custom.channel.1"));
    CHECK(has_issue(parse_error("model = custom_generator\ntime.t_max = 1\ncustom.probe = 1, 0; 0, 0\n"
                                "custom.param_generator = 1, 1; 0, -1\n"),
                    ConfigIssue::Kind::Range, "custom.param_generator"));
}

TEST_CASE("complex tokens") {
    CHECK(parse_complex("1") == Complex(1, 0));
    CHECK(parse_complex("-i") == Complex(0, -1));
    CHECK(parse_complex("2i") == Complex(0, 2));
    CHECK(parse_complex("1+2i") == Complex(1, 2));
    CHECK(parse_complex("1.5e-3-2.5e2i") == Complex(1.5e-3, -250));
    CHECK_THROWS(parse_complex("1+2"));
    CHECK_THROWS(parse_complex("x"));
    oracle::Random rnd(31);
    for (int k = 0; k < 200; ++k) {
        const Complex z(rnd.normal(), rnd.normal());
        CHECK(parse_complex(format_complex(z)) == z);
    }
}

TEST_CASE("format_double keeps 17 significant digits") {
    CHECK(format_double(0.1) == "0.10000000000000001");
    oracle::Random rnd(32);
    for (int k = 0; k < 1000; ++k) {
        const double v = rnd.normal() * std::pow(10.0, rnd.integer(-20, 20));
        CHECK(std::stod(format_double(v)) == v);
    }
}

TEST_CASE("parse(emit(c)) == c for random valid configs") {
    oracle::Random rnd(33);
    for (int k = 0; k < 300; ++k) {
        const ScenarioConfig c = random_config(rnd);
        const std::string text = emit_config(c);
        CAPTURE(text);
        CHECK(parse_config(text) == c);
    }
}

TEST_CASE("sweep plans one run per value") {
    const ScenarioConfig c =
        parse_config(std::string(kWeak) + "sweep.param = W\nsweep.values = 0.3, 3.0\n");
    const auto plan = plan_runs(c);
    REQUIRE(plan.size() == 2);
    CHECK(*plan[0].W == 0.3);
    CHECK(*plan[1].W == 3.0);
    CHECK(!plan[0].sweep);
    CHECK(*plan[1].lambda == 1.0);
    CHECK(plan_runs(parse_config(kWeak)).size() == 1);

    ScenarioConfig bad = c;
    bad.sweep->values = {-1.0};
    CHECK_THROWS_AS(validate_config(bad), ConfigError);
}

} // TEST_SUITE
