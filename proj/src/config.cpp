#include "qfiflow/config.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <regex>
#include <set>
#include <sstream>

#include "qfiflow/operators.hpp"

namespace qfiflow::cli {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep)) parts.push_back(trim(cur));
    if (!s.empty() && s.back() == sep) parts.emplace_back();
    return parts;
}

std::optional<double> to_double(const std::string& s) {
    if (s.empty()) return std::nullopt;
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || errno == ERANGE) return std::nullopt;
    return v;
}

struct Entry {
    std::string value;
    int line;
};

class Reader {
public:
    explicit Reader(std::vector<ConfigIssue>& issues) : issues_(issues) {}

    void schema(const std::string& key, const std::string& msg) {
        issues_.push_back({ConfigIssue::Kind::Schema, key, msg});
    }
    void range(const std::string& key, const std::string& msg) {
        issues_.push_back({ConfigIssue::Kind::Range, key, msg});
    }

    std::optional<double> number(const std::string& key, const std::string& value) {
        auto v = to_double(value);
        if (!v) schema(key, "expected a real number, got '" + value + "'");
        return v;
    }

    std::vector<double> numbers(const std::string& key, const std::string& value) {
        std::vector<double> out;
        for (const auto& tok : split(value, ',')) {
            auto v = to_double(tok);
            if (!v) {
                schema(key, "expected a comma-separated list of reals, bad item '" + tok + "'");
                return {};
            }
            out.push_back(*v);
        }
        return out;
    }

    std::optional<MatrixSpec> matrix(const std::string& key, const std::string& value) {
        MatrixSpec spec;
        const auto rows = split(value, ';');
        for (const auto& row : rows) {
            const auto cells = split(row, ',');
            if (spec.dim == 0) spec.dim = static_cast<int>(rows.size());
            if (static_cast<int>(cells.size()) != spec.dim) {
                schema(key, "matrix must be square: rows separated by ';', entries by ','");
                return std::nullopt;
            }
            for (const auto& c : cells) {
                try {
                    spec.entries.push_back(parse_complex(c));
                } catch (const InvalidArgument& e) {
                    schema(key, e.what());
                    return std::nullopt;
                }
            }
        }
        return spec;
    }

private:
    std::vector<ConfigIssue>& issues_;
};

const std::set<std::string>& model_param_keys() {
    static const std::set<std::string> keys{"model.W", "model.lambda", "model.phi", "model.gamma0"};
    return keys;
}

bool param_applies(ModelKind model, const std::string& name) {
    switch (model) {
        case ModelKind::DampedJC: return name == "W" || name == "lambda" || name == "phi";
        case ModelKind::MarkovControl: return name == "gamma0" || name == "phi";
        case ModelKind::CustomGenerator: return false;
    }
    return false;
}

const std::regex& channel_key_re() {
    static const std::regex re(R"(custom\.channel\.([1-9][0-9]*)\.(jump|rate|rate_amp|rate_freq))");
    return re;
}

void check_ranges(const ScenarioConfig& cfg, Reader& r) {
    auto positive = [&](const std::optional<double>& v, const char* key) {
        if (v && !(*v > 0.0 && std::isfinite(*v))) r.range(key, "must be positive and finite");
    };
    positive(cfg.W, "model.W");
    positive(cfg.lambda, "model.lambda");
    positive(cfg.gamma0, "model.gamma0");
    if (cfg.phi && !std::isfinite(*cfg.phi)) r.range("model.phi", "must be finite");

    if (cfg.model == ModelKind::DampedJC) {
        if (!cfg.W) r.schema("model.W", "required for model damped_jc");
        if (!cfg.lambda) r.schema("model.lambda", "required for model damped_jc");
    } else if (cfg.model == ModelKind::MarkovControl) {
        if (!cfg.gamma0) r.schema("model.gamma0", "required for model markov_control");
    } else if (!cfg.custom) {
        r.schema("custom.probe", "model custom_generator needs custom.probe and custom.param_generator");
    }

    const bool t_ok = cfg.t_max > 0.0 && std::isfinite(cfg.t_max);
    if (!t_ok) r.range("time.t_max", "must be positive and finite");
    if (cfg.dt && !(*cfg.dt > 0.0 && std::isfinite(*cfg.dt))) {
        r.range("time.dt", "must be positive and finite");
    } else if (cfg.dt && t_ok && *cfg.dt > cfg.t_max / 10.0 * (1.0 + 1e-12)) {
        r.range("time.dt", "must satisfy dt <= t_max / 10");
    }
    if (cfg.stepper_tolerance && !(*cfg.stepper_tolerance > 0.0)) r.range("stepper.tolerance", "must be positive");
    if (cfg.guard_halfwidth && !(*cfg.guard_halfwidth >= 0.0 && std::isfinite(*cfg.guard_halfwidth))) {
        r.range("guard.halfwidth", "must be nonnegative and finite");
    }
    if (cfg.witness_eps && !(*cfg.witness_eps >= 0.0 && std::isfinite(*cfg.witness_eps))) {
        r.range("witness.eps", "must be nonnegative and finite");
    }
    for (long m : cfg.report_M) {
        if (m < 1) r.range("report.M", "measurement counts must be >= 1");
    }
    if (cfg.sweep) {
        if (cfg.sweep->values.empty()) r.range("sweep.values", "must be nonempty");
        for (double v : cfg.sweep->values) {
            if (!std::isfinite(v)) r.range("sweep.values", "values must be finite");
        }
        if (!param_applies(cfg.model, cfg.sweep->param)) {
            r.schema("sweep.param", "'" + cfg.sweep->param + "' is not a parameter of model " + to_string(cfg.model));
        } else if (cfg.sweep->param != "phi") {
            for (double v : cfg.sweep->values) {
                if (!(v > 0.0)) r.range("sweep.values", "values of " + cfg.sweep->param + " must be positive");
            }
        }
    }

    if (cfg.custom) {
        const CustomSpec& c = *cfg.custom;
        const int dim = c.probe.dim;
        auto same_dim = [&](const MatrixSpec& m, const std::string& key) {
            if (m.dim != dim) r.range(key, "dimension " + std::to_string(m.dim) + " differs from probe dimension " +
                                               std::to_string(dim));
        };
        if (dim < 1) r.schema("custom.probe", "required for model custom_generator");
        if (c.param_generator.dim < 1) r.schema("custom.param_generator", "required for model custom_generator");
        same_dim(c.param_generator, "custom.param_generator");
        if (c.hamiltonian) same_dim(*c.hamiltonian, "custom.hamiltonian");
        for (std::size_t i = 0; i < c.channels.size(); ++i) {
            const std::string base = "custom.channel." + std::to_string(i + 1);
            if (c.channels[i].jump.dim == 0) {
                r.schema(base + ".jump", "missing jump operator");
            } else {
                same_dim(c.channels[i].jump, base + ".jump");
            }
        }
        if (dim >= 1) {
            const Matrix p = c.probe.to_matrix();
            try {
                DensityMatrix probe(p);
            } catch (const Error& e) {
                r.range("custom.probe", e.what());
            }
            if (c.param_generator.dim == dim &&
                ops::hermiticity_defect(c.param_generator.to_matrix()) > 1e-10) {
                r.range("custom.param_generator", "must be Hermitian");
            }
            if (c.hamiltonian && c.hamiltonian->dim == dim && ops::hermiticity_defect(c.hamiltonian->to_matrix()) > 1e-10) {
                r.range("custom.hamiltonian", "must be Hermitian");
            }
        }
    }

    if (!cfg.outputs.empty()) {
        const auto avail = available_columns(cfg);
        for (const auto& col : cfg.outputs) {
            if (std::find(avail.begin(), avail.end(), col) == avail.end()) {
                r.schema("outputs", "unknown or unavailable column '" + col + "'");
            }
        }
    }
}

} // namespace

ConfigError::ConfigError(std::vector<ConfigIssue> issues)
    : Error([&] {
          std::ostringstream os;
          os << issues.size() << " config error(s)";
          for (const auto& i : issues) {
              os << "\n  " << (i.kind == ConfigIssue::Kind::Schema ? "SchemaError" : "RangeError") << " [" << i.key
                 << "]: " << i.message;
          }
          return os.str();
      }()),
      issues_(std::move(issues)) {}

Matrix MatrixSpec::to_matrix() const {
    Matrix m(dim, dim);
    for (int i = 0; i < dim; ++i) {
        for (int j = 0; j < dim; ++j) m(i, j) = entries[static_cast<std::size_t>(i * dim + j)];
    }
    return m;
}

MatrixSpec MatrixSpec::from(const Matrix& m) {
    MatrixSpec spec;
    spec.dim = static_cast<int>(m.rows());
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) spec.entries.push_back(m(i, j));
    }
    return spec;
}

double RateSpec::operator()(double t) const { return base + amp * std::cos(freq * t); }

const char* to_string(ModelKind k) {
    switch (k) {
        case ModelKind::DampedJC: return "damped_jc";
        case ModelKind::MarkovControl: return "markov_control";
        case ModelKind::CustomGenerator: return "custom_generator";
    }
    return "?";
}

double ScenarioConfig::effective_dt() const {
    if (dt) return *dt;
    double base = 1e-3 * t_max;
    if (model == ModelKind::DampedJC && lambda) base = 1e-3 / *lambda;
    if (model == ModelKind::MarkovControl && gamma0) base = 1e-3 / *gamma0;
    return std::min(base, t_max / 10.0);
}

double ScenarioConfig::effective_guard_halfwidth() const { return guard_halfwidth.value_or(3.0 * effective_dt()); }

std::vector<long> ScenarioConfig::effective_M() const {
    return report_M.empty() ? std::vector<long>{1} : report_M;
}

StepperConfig ScenarioConfig::stepper_config() const {
    StepperConfig s;
    s.kind = stepper;
    if (stepper_tolerance) s.tolerance = *stepper_tolerance;
    return s;
}

std::size_t ScenarioConfig::channel_count() const {
    if (model == ModelKind::CustomGenerator) return custom ? custom->channels.size() : 0;
    return 1;
}

int ScenarioConfig::dim() const {
    if (model == ModelKind::CustomGenerator) return custom ? custom->probe.dim : 0;
    return 2;
}

std::vector<std::string> available_columns(const ScenarioConfig& cfg) {
    std::vector<std::string> cols{"t", "F_numeric"};
    const bool analytic = cfg.model != ModelKind::CustomGenerator;
    if (analytic) cols.emplace_back("F_analytic");
    cols.emplace_back("I_direct");
    cols.emplace_back("I_decomposed");
    if (analytic) cols.emplace_back("I_analytic");
    for (std::size_t i = 1; i <= cfg.channel_count(); ++i) {
        cols.push_back("gamma_" + std::to_string(i));
        cols.push_back("J_" + std::to_string(i));
        cols.push_back("I_" + std::to_string(i));
    }
    if (cfg.dim() == 2) {
        cols.emplace_back("Bx");
        cols.emplace_back("By");
        cols.emplace_back("Bz");
    }
    cols.emplace_back("guard");
    return cols;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

Complex parse_complex(const std::string& token) {
    const std::string s = trim(token);
    auto bad = [&] { return InvalidArgument("bad complex literal '" + token + "'"); };
    if (s.empty()) throw bad();
    if (s.back() != 'i') {
        auto v = to_double(s);
        if (!v) throw bad();
        return {*v, 0.0};
    }
    const std::string body = s.substr(0, s.size() - 1);
    // split at the last sign that is not an exponent sign or the leading sign
    std::size_t split_at = std::string::npos;
    for (std::size_t k = body.size(); k-- > 1;) {
        if ((body[k] == '+' || body[k] == '-') && body[k - 1] != 'e' && body[k - 1] != 'E') {
            split_at = k;
            break;
        }
    }
    auto imag_of = [&](const std::string& part) -> double {
        if (part.empty() || part == "+") return 1.0;
        if (part == "-") return -1.0;
        auto v = to_double(part);
        if (!v) throw bad();
        return *v;
    };
    if (split_at == std::string::npos) return {0.0, imag_of(body)};
    auto re = to_double(body.substr(0, split_at));
    if (!re) throw bad();
    return {*re, imag_of(body.substr(split_at))};
}

std::string format_complex(Complex z) {
    if (z.imag() == 0.0) return format_double(z.real());
    std::string im = format_double(z.imag());
    if (im[0] != '-') im = "+" + im;
    return format_double(z.real()) + im + "i";
}

ScenarioConfig parse_config(const std::string& text) {
    std::vector<ConfigIssue> issues;
    Reader r(issues);

    std::map<std::string, Entry> entries;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            r.schema("line " + std::to_string(lineno), "expected 'key = value'");
            continue;
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (!entries.emplace(key, Entry{value, lineno}).second) r.schema(key, "duplicate key");
    }

    ScenarioConfig cfg;
    if (auto it = entries.find("model"); it == entries.end()) {
        r.schema("model", "required key missing");
    } else if (it->second.value == "damped_jc") {
        cfg.model = ModelKind::DampedJC;
    } else if (it->second.value == "markov_control") {
        cfg.model = ModelKind::MarkovControl;
    } else if (it->second.value == "custom_generator") {
        cfg.model = ModelKind::CustomGenerator;
    } else {
        r.schema("model", "expected damped_jc, markov_control or custom_generator");
    }

    std::map<int, ChannelSpec> channels;
    std::map<int, std::set<std::string>> channel_fields;
    CustomSpec custom;
    bool any_custom = false;

    for (const auto& [key, entry] : entries) {
        const std::string& v = entry.value;
        std::smatch m;
        if (key == "model") continue;
        if (model_param_keys().count(key)) {
            const std::string name = key.substr(6);
            if (!param_applies(cfg.model, name)) {
                r.schema(key, "not a parameter of model " + std::string(to_string(cfg.model)));
                continue;
            }
            auto d = r.number(key, v);
            if (name == "W") cfg.W = d;
            if (name == "lambda") cfg.lambda = d;
            if (name == "phi") cfg.phi = d;
            if (name == "gamma0") cfg.gamma0 = d;
        } else if (key == "time.t_max") {
            if (auto d = r.number(key, v)) cfg.t_max = *d;
        } else if (key == "time.dt") {
            cfg.dt = r.number(key, v);
        } else if (key == "stepper") {
            if (v == "fixed_rk4") {
                cfg.stepper = StepperConfig::Kind::FixedRk4;
            } else if (v == "halving") {
                cfg.stepper = StepperConfig::Kind::Halving;
            } else {
                r.schema(key, "expected fixed_rk4 or halving");
            }
        } else if (key == "stepper.tolerance") {
            cfg.stepper_tolerance = r.number(key, v);
        } else if (key == "integration.path") {
            if (v == "segmented") {
                cfg.path = IntegrationPath::Segmented;
            } else if (v == "generator") {
                cfg.path = IntegrationPath::Generator;
            } else {
                r.schema(key, "expected segmented or generator");
            }
        } else if (key == "guard.halfwidth") {
            cfg.guard_halfwidth = r.number(key, v);
        } else if (key == "outputs") {
            for (const auto& col : split(v, ',')) {
                if (col.empty()) {
                    r.schema(key, "empty column name");
                } else {
                    cfg.outputs.push_back(col);
                }
            }
        } else if (key == "report.M") {
            for (double d : r.numbers(key, v)) {
                if (d != std::floor(d)) {
                    r.schema(key, "measurement counts must be integers");
                } else {
                    cfg.report_M.push_back(static_cast<long>(d));
                }
            }
        } else if (key == "witness.eps") {
            cfg.witness_eps = r.number(key, v);
        } else if (key == "sweep.param") {
            if (!cfg.sweep) cfg.sweep.emplace();
            cfg.sweep->param = v;
        } else if (key == "sweep.values") {
            if (!cfg.sweep) cfg.sweep.emplace();
            cfg.sweep->values = r.numbers(key, v);
        } else if (key == "custom.hamiltonian" || key == "custom.probe" || key == "custom.param_generator") {
            any_custom = true;
            auto mat = r.matrix(key, v);
            if (!mat) continue;
            if (key == "custom.hamiltonian") custom.hamiltonian = *mat;
            if (key == "custom.probe") custom.probe = *mat;
            if (key == "custom.param_generator") custom.param_generator = *mat;
        } else if (key == "custom.theta") {
            any_custom = true;
            custom.theta = r.number(key, v);
        } else if (std::regex_match(key, m, channel_key_re())) {
            any_custom = true;
            const int idx = std::stoi(m[1].str());
            const std::string field = m[2].str();
            ChannelSpec& ch = channels[idx];
            channel_fields[idx].insert(field);
            if (field == "jump") {
                if (auto mat = r.matrix(key, v)) ch.jump = *mat;
            } else if (auto d = r.number(key, v)) {
                if (field == "rate") ch.rate.base = *d;
                if (field == "rate_amp") {
                    ch.rate.amp = *d;
                    ch.has_amp = true;
                }
                if (field == "rate_freq") {
                    ch.rate.freq = *d;
                    ch.has_freq = true;
                }
            }
        } else {
            r.schema(key, "unknown key");
        }
    }

    if (cfg.sweep && (cfg.sweep->param.empty() || !entries.count("sweep.values"))) {
        r.schema("sweep", "sweep needs both sweep.param and sweep.values");
    }

    if (any_custom) {
        if (cfg.model != ModelKind::CustomGenerator) {
            r.schema("custom", "custom.* keys are only valid for model custom_generator");
        } else {
            int expect = 1;
            for (const auto& [idx, ch] : channels) {
                if (idx != expect) {
                    r.schema("custom.channel." + std::to_string(expect), "channel indices must be contiguous from 1");
                    break;
                }
                if (!channel_fields[idx].count("rate")) {
                    r.schema("custom.channel." + std::to_string(idx) + ".rate", "missing rate");
                }
                custom.channels.push_back(ch);
                ++expect;
            }
            cfg.custom = custom;
        }
    }

    check_ranges(cfg, r);
    if (!issues.empty()) throw ConfigError(std::move(issues));
    return cfg;
}

ScenarioConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError({{ConfigIssue::Kind::Schema, path, "cannot open config file"}});
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

void validate_config(const ScenarioConfig& cfg) {
    std::vector<ConfigIssue> issues;
    Reader r(issues);
    check_ranges(cfg, r);
    if (!issues.empty()) throw ConfigError(std::move(issues));
}

std::string emit_config(const ScenarioConfig& cfg) {
    std::ostringstream os;
    auto kv = [&](const std::string& k, const std::string& v) { os << k << " = " << v << '\n'; };
    auto opt = [&](const std::string& k, const std::optional<double>& v) {
        if (v) kv(k, format_double(*v));
    };
    auto mat = [&](const MatrixSpec& m) {
        std::string s;
        for (int i = 0; i < m.dim; ++i) {
            if (i) s += "; ";
            for (int j = 0; j < m.dim; ++j) {
                if (j) s += ", ";
                s += format_complex(m.entries[static_cast<std::size_t>(i * m.dim + j)]);
            }
        }
        return s;
    };
    auto list = [](const auto& xs, auto fmt) {
        std::string s;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            if (i) s += ", ";
            s += fmt(xs[i]);
        }
        return s;
    };

    kv("model", to_string(cfg.model));
    opt("model.W", cfg.W);
    opt("model.lambda", cfg.lambda);
    opt("model.phi", cfg.phi);
    opt("model.gamma0", cfg.gamma0);
    kv("time.t_max", format_double(cfg.t_max));
    opt("time.dt", cfg.dt);
    kv("stepper", cfg.stepper == StepperConfig::Kind::FixedRk4 ? "fixed_rk4" : "halving");
    opt("stepper.tolerance", cfg.stepper_tolerance);
    kv("integration.path", cfg.path == IntegrationPath::Segmented ? "segmented" : "generator");
    opt("guard.halfwidth", cfg.guard_halfwidth);
    if (!cfg.outputs.empty()) kv("outputs", list(cfg.outputs, [](const std::string& s) { return s; }));
    if (!cfg.report_M.empty()) kv("report.M", list(cfg.report_M, [](long m) { return std::to_string(m); }));
    opt("witness.eps", cfg.witness_eps);
    if (cfg.sweep) {
        kv("sweep.param", cfg.sweep->param);
        kv("sweep.values", list(cfg.sweep->values, format_double));
    }
    if (cfg.custom) {
        const CustomSpec& c = *cfg.custom;
        if (c.hamiltonian) kv("custom.hamiltonian", mat(*c.hamiltonian));
        kv("custom.probe", mat(c.probe));
        kv("custom.param_generator", mat(c.param_generator));
        opt("custom.theta", c.theta);
        for (std::size_t i = 0; i < c.channels.size(); ++i) {
            const std::string base = "custom.channel." + std::to_string(i + 1);
            const ChannelSpec& ch = c.channels[i];
            kv(base + ".jump", mat(ch.jump));
            kv(base + ".rate", format_double(ch.rate.base));
            if (ch.has_amp) kv(base + ".rate_amp", format_double(ch.rate.amp));
            if (ch.has_freq) kv(base + ".rate_freq", format_double(ch.rate.freq));
        }
    }
    return os.str();
}

std::vector<ScenarioConfig> plan_runs(const ScenarioConfig& cfg) {
    if (!cfg.sweep) return {cfg};
    std::vector<ScenarioConfig> plan;
    for (double v : cfg.sweep->values) {
        ScenarioConfig run = cfg;
        run.sweep.reset();
        const std::string& p = cfg.sweep->param;
        if (p == "W") run.W = v;
        if (p == "lambda") run.lambda = v;
        if (p == "phi") run.phi = v;
        if (p == "gamma0") run.gamma0 = v;
        validate_config(run);
        plan.push_back(std::move(run));
    }
    return plan;
}

} // namespace qfiflow::cli
