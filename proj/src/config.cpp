#include "fwdcurve/config.hpp"

#include <cmath>
#include <set>
#include <sstream>

namespace fwdcurve {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& msg) { throw ConfigError(msg); }

void check_keys(const json& obj, const std::string& where,
                const std::set<std::string>& allowed) {
  if (!obj.is_object()) fail(where + ": expected an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key))
      fail(where + ": unknown key \"" + key + "\"");
  }
}

template <typename T>
T get_or(const json& obj, const std::string& key, const std::string& where,
         T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    fail(where + ": key \"" + key + "\" has the wrong type");
  }
}

template <typename T>
T get_req(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.contains(key)) fail(where + ": missing required key \"" + key + "\"");
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    fail(where + ": key \"" + key + "\" has the wrong type");
  }
}

EigenPairSpec parse_eigenpair(const json& j, const std::string& where) {
  check_keys(j, where, {"lambda", "shape", "rate", "freq", "scale"});
  EigenPairSpec p;
  p.lambda = get_req<double>(j, "lambda", where);
  const std::string shape = get_req<std::string>(j, "shape", where);
  if (shape == "constant")
    p.shape.kind = EigenShape::Kind::constant;
  else if (shape == "expsat")
    p.shape.kind = EigenShape::Kind::expsat;
  else if (shape == "damped")
    p.shape.kind = EigenShape::Kind::damped;
  else
    fail(where + ": unknown shape \"" + shape + "\"");
  p.shape.rate = get_or<double>(j, "rate", where, 1.0);
  p.shape.freq = get_or<double>(j, "freq", where, 1.0);
  p.shape.scale = get_or<double>(j, "scale", where, 1.0);
  return p;
}

}  // namespace

RunConfig parse_config(const nlohmann::json& j) {
  check_keys(j, "config",
             {"space", "noise", "model", "initial_curve", "sim", "outputs",
              "compare", "girsanov"});
  RunConfig cfg;

  if (j.contains("space")) {
    const json& s = j.at("space");
    check_keys(s, "space", {"weight_param", "x_max", "n_nodes"});
    cfg.weight_param = get_or<double>(s, "weight_param", "space", 1.0);
    cfg.x_max = get_or<double>(s, "x_max", "space", 14.0);
    cfg.n_nodes = get_or<int>(s, "n_nodes", "space", 201);
  }

  if (j.contains("noise")) {
    const json& s = j.at("noise");
    check_keys(s, "noise", {"eigenpairs"});
    const json& pairs = s.contains("eigenpairs") ? s.at("eigenpairs") : json::array();
    if (!pairs.is_array()) fail("noise.eigenpairs: expected an array");
    int idx = 0;
    for (const json& p : pairs) {
      std::ostringstream where;
      where << "noise.eigenpairs[" << idx++ << "]";
      cfg.eigenpairs.push_back(parse_eigenpair(p, where.str()));
    }
  }

  if (!j.contains("model")) fail("config: missing required section \"model\"");
  {
    const json& m = j.at("model");
    check_keys(m, "model", {"diffusion", "drift"});
    const json& d = m.contains("diffusion") ? m.at("diffusion") : json::object();
    check_keys(d, "model.diffusion",
               {"family", "gamma", "beta", "eps", "sigma0", "psi_tilde", "phi",
                "name", "value"});
    cfg.diffusion.family = get_req<std::string>(d, "family", "model.diffusion");
    cfg.diffusion.gamma = get_or<double>(d, "gamma", "model.diffusion", 1.0);
    cfg.diffusion.beta = get_or<double>(d, "beta", "model.diffusion", 1.0);
    cfg.diffusion.eps = get_or<double>(d, "eps", "model.diffusion", 1e-2);
    cfg.diffusion.sigma0 = get_or<double>(d, "sigma0", "model.diffusion", 0.2);
    cfg.diffusion.psi_tilde =
        get_or<std::string>(d, "psi_tilde", "model.diffusion", "constant");
    cfg.diffusion.phi = get_or<std::string>(d, "phi", "model.diffusion", "identity");
    cfg.diffusion.name =
        get_or<std::string>(d, "name", "model.diffusion", "constant");
    cfg.diffusion.value = get_or<double>(d, "value", "model.diffusion", 1.0);
    if (m.contains("drift")) {
      const json& dr = m.at("drift");
      check_keys(dr, "model.drift", {"family", "a0", "kappa", "theta", "mu"});
      cfg.drift.family = get_or<std::string>(dr, "family", "model.drift", "zero");
      cfg.drift.a0 = get_or<double>(dr, "a0", "model.drift", 0.0);
      cfg.drift.kappa = get_or<double>(dr, "kappa", "model.drift", 1.0);
      cfg.drift.theta = get_or<double>(dr, "theta", "model.drift", 1.0);
      cfg.drift.mu = get_or<double>(dr, "mu", "model.drift", 0.0);
    }
  }

  if (j.contains("initial_curve")) {
    const json& s = j.at("initial_curve");
    check_keys(s, "initial_curve", {"kind", "level", "base", "amplitude", "rate"});
    cfg.initial.kind = get_or<std::string>(s, "kind", "initial_curve", "flat");
    cfg.initial.level = get_or<double>(s, "level", "initial_curve", 1.0);
    cfg.initial.base = get_or<double>(s, "base", "initial_curve", 1.0);
    cfg.initial.amplitude = get_or<double>(s, "amplitude", "initial_curve", 1.0);
    cfg.initial.rate = get_or<double>(s, "rate", "initial_curve", 1.0);
    if (cfg.initial.kind != "flat" && cfg.initial.kind != "exp")
      fail("initial_curve.kind: expected \"flat\" or \"exp\"");
  }

  if (j.contains("sim")) {
    const json& s = j.at("sim");
    check_keys(s, "sim",
               {"dt", "horizon", "n_paths", "master_seed", "blowup_norm",
                "snapshot_stride", "positivity_monitor", "track_maturity"});
    cfg.sim.dt = get_or<double>(s, "dt", "sim", 1e-2);
    cfg.sim.horizon = get_or<double>(s, "horizon", "sim", 1.0);
    cfg.sim.n_paths = get_or<int>(s, "n_paths", "sim", 1);
    cfg.sim.master_seed = get_or<std::uint64_t>(s, "master_seed", "sim", 0);
    cfg.sim.blowup_norm = get_or<double>(s, "blowup_norm", "sim", 1e6);
    cfg.sim.snapshot_stride = get_or<int>(s, "snapshot_stride", "sim", 1);
    cfg.sim.positivity_monitor =
        get_or<bool>(s, "positivity_monitor", "sim", false);
    if (s.contains("track_maturity"))
      cfg.sim.track_maturity = get_req<double>(s, "track_maturity", "sim");
  }

  if (j.contains("outputs")) {
    const json& s = j.at("outputs");
    check_keys(s, "outputs", {"dir", "formats"});
    cfg.outputs.dir = get_or<std::string>(s, "dir", "outputs", "out");
    if (s.contains("formats")) {
      if (!s.at("formats").is_array()) fail("outputs.formats: expected an array");
      cfg.outputs.csv = false;
      cfg.outputs.json = false;
      for (const json& f : s.at("formats")) {
        const std::string v = f.get<std::string>();
        if (v == "csv")
          cfg.outputs.csv = true;
        else if (v == "json")
          cfg.outputs.json = true;
        else
          fail("outputs.formats: unknown format \"" + v + "\"");
      }
    }
  }

  if (j.contains("compare")) {
    const json& s = j.at("compare");
    check_keys(s, "compare",
               {"maturities", "dt_halvings", "n_paths", "exp_model",
                "absorb_at_zero"});
    cfg.compare.present = true;
    if (s.contains("maturities")) {
      if (!s.at("maturities").is_array())
        fail("compare.maturities: expected an array");
      for (const json& m : s.at("maturities"))
        cfg.compare.maturities.push_back(m.get<double>());
    }
    cfg.compare.dt_halvings = get_or<int>(s, "dt_halvings", "compare", 4);
    cfg.compare.n_paths = get_or<int>(s, "n_paths", "compare", 200);
    cfg.compare.exp_model = get_or<bool>(s, "exp_model", "compare", false);
    cfg.compare.absorb_at_zero =
        get_or<bool>(s, "absorb_at_zero", "compare", true);
  }

  if (j.contains("girsanov")) {
    const json& s = j.at("girsanov");
    check_keys(s, "girsanov", {"enabled", "t_bar"});
    cfg.girsanov.enabled = get_or<bool>(s, "enabled", "girsanov", false);
    cfg.girsanov.t_bar = get_or<double>(s, "t_bar", "girsanov", cfg.sim.horizon);
  }
  if (cfg.girsanov.enabled && cfg.girsanov.t_bar == 0.0)
    cfg.girsanov.t_bar = cfg.sim.horizon;

  return cfg;
}

RunConfig parse_config_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    // Translate the byte offset into line and column for the message.
    std::size_t line = 1, col = 1;
    const std::size_t upto = std::min(e.byte > 0 ? e.byte - 1 : 0, text.size());
    for (std::size_t i = 0; i < upto; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::ostringstream msg;
    msg << "malformed JSON at line " << line << ", column " << col << ": "
        << e.what();
    fail(msg.str());
  }
  return parse_config(j);
}

nlohmann::ordered_json resolved_config_json(const RunConfig& cfg) {
  nlohmann::ordered_json j;
  j["space"] = {{"weight_param", cfg.weight_param},
                {"x_max", cfg.x_max},
                {"n_nodes", cfg.n_nodes}};
  nlohmann::ordered_json pairs = nlohmann::ordered_json::array();
  for (const auto& p : cfg.eigenpairs) {
    const char* shape = p.shape.kind == EigenShape::Kind::constant ? "constant"
                        : p.shape.kind == EigenShape::Kind::expsat ? "expsat"
                                                                   : "damped";
    pairs.push_back({{"lambda", p.lambda},
                     {"shape", shape},
                     {"rate", p.shape.rate},
                     {"freq", p.shape.freq},
                     {"scale", p.shape.scale}});
  }
  j["noise"] = {{"eigenpairs", pairs}};
  j["model"] = {{"diffusion",
                 {{"family", cfg.diffusion.family},
                  {"gamma", cfg.diffusion.gamma},
                  {"beta", cfg.diffusion.beta},
                  {"eps", cfg.diffusion.eps},
                  {"sigma0", cfg.diffusion.sigma0},
                  {"psi_tilde", cfg.diffusion.psi_tilde},
                  {"phi", cfg.diffusion.phi},
                  {"name", cfg.diffusion.name},
                  {"value", cfg.diffusion.value}}},
                {"drift",
                 {{"family", cfg.drift.family},
                  {"a0", cfg.drift.a0},
                  {"kappa", cfg.drift.kappa},
                  {"theta", cfg.drift.theta},
                  {"mu", cfg.drift.mu}}}};
  j["initial_curve"] = {{"kind", cfg.initial.kind},
                        {"level", cfg.initial.level},
                        {"base", cfg.initial.base},
                        {"amplitude", cfg.initial.amplitude},
                        {"rate", cfg.initial.rate}};
  j["sim"] = {{"dt", cfg.sim.dt},
              {"horizon", cfg.sim.horizon},
              {"n_paths", cfg.sim.n_paths},
              {"master_seed", cfg.sim.master_seed},
              {"blowup_norm", cfg.sim.blowup_norm},
              {"snapshot_stride", cfg.sim.snapshot_stride},
              {"positivity_monitor", cfg.sim.positivity_monitor}};
  if (cfg.sim.track_maturity)
    j["sim"]["track_maturity"] = *cfg.sim.track_maturity;
  std::vector<std::string> formats;
  if (cfg.outputs.csv) formats.push_back("csv");
  if (cfg.outputs.json) formats.push_back("json");
  j["outputs"] = {{"dir", cfg.outputs.dir}, {"formats", formats}};
  if (cfg.compare.present) {
    j["compare"] = {{"maturities", cfg.compare.maturities},
                    {"dt_halvings", cfg.compare.dt_halvings},
                    {"n_paths", cfg.compare.n_paths},
                    {"exp_model", cfg.compare.exp_model},
                    {"absorb_at_zero", cfg.compare.absorb_at_zero}};
  }
  if (cfg.girsanov.enabled)
    j["girsanov"] = {{"enabled", true}, {"t_bar", cfg.girsanov.t_bar}};
  return j;
}

SpaceConfigPtr build_space(const RunConfig& cfg) {
  try {
    return SpaceConfig::make(cfg.weight_param, cfg.x_max, cfg.n_nodes);
  } catch (const DomainError& e) {
    fail(std::string("space: ") + e.what());
  }
}

CovariancePtr build_noise(const RunConfig& cfg, const SpaceConfigPtr& space) {
  if (cfg.eigenpairs.empty())
    fail("noise: at least one eigenpair is required for simulation");
  try {
    return CovarianceOperator::make(space, cfg.eigenpairs);
  } catch (const DomainError& e) {
    fail(std::string("noise: ") + e.what());
  }
}

namespace {

PointwiseMap registry_map(const std::string& name, double value) {
  if (name == "zero") return make_zero_map();
  if (name == "constant") return make_const_map(value);
  if (name == "identity") return make_identity_map();
  if (name == "square") {
    PointwiseMap m;
    m.psi = [](double, double y) { return y * y; };
    m.dpsi_dy = [](double, double y) { return 2.0 * y; };
    m.dpsi_dt = [](double, double) { return 0.0; };
    m.d2psi_dy2 = [](double, double) { return 2.0; };
    return m;
  }
  if (name == "sin") {
    PointwiseMap m;
    m.psi = [](double, double y) { return std::sin(y); };
    m.dpsi_dy = [](double, double y) { return std::cos(y); };
    m.dpsi_dt = [](double, double) { return 0.0; };
    m.d2psi_dy2 = [](double, double y) { return -std::sin(y); };
    return m;
  }
  if (name == "sqrt_pos") {
    PointwiseMap m;
    m.domain = Domain::pos;
    m.psi = [](double, double y) { return std::sqrt(y); };
    m.dpsi_dy = [](double, double y) { return 0.5 / std::sqrt(y); };
    return m;
  }
  fail("model: unknown registry map \"" + name + "\"");
}

}  // namespace

PointwiseMap build_diffusion(const RunConfig::DiffusionConfig& cfg) {
  if (cfg.family == "cev") return make_cev(cfg.gamma, cfg.beta);
  if (cfg.family == "cev_tilde") return make_cev_tilde(cfg.gamma, cfg.eps);
  if (cfg.family == "exp_form") {
    PointwiseMap inner;
    if (cfg.psi_tilde == "constant") {
      inner = make_const_map(cfg.sigma0);
      inner.domain = Domain::nonneg;
    } else if (cfg.psi_tilde == "expdecay") {
      inner.domain = Domain::nonneg;
      const double s0 = cfg.sigma0;
      inner.psi = [s0](double, double y) { return s0 * std::exp(-y); };
      inner.dpsi_dy = [s0](double, double y) { return -s0 * std::exp(-y); };
      inner.dpsi_dt = [](double, double) { return 0.0; };
      inner.d2psi_dy2 = [s0](double, double y) { return s0 * std::exp(-y); };
    } else {
      fail("model.diffusion.psi_tilde: unknown inner map \"" + cfg.psi_tilde +
           "\"");
    }
    return make_exp_form(inner);
  }
  if (cfg.family == "separable") {
    const PointwiseMap shape = registry_map(cfg.phi, 1.0);
    const double b = cfg.beta;
    return make_separable([b](double) { return b; },
                          [shape](double y) { return shape.psi(0.0, y); },
                          [shape](double y) { return shape.dpsi_dy(0.0, y); },
                          shape.has_second_derivative()
                              ? std::function<double(double)>(
                                    [shape](double y) {
                                      return shape.d2psi_dy2(0.0, y);
                                    })
                              : std::function<double(double)>{},
                          [](double) { return 0.0; }, shape.domain);
  }
  if (cfg.family == "custom") return registry_map(cfg.name, cfg.value);
  fail("model.diffusion.family: unknown family \"" + cfg.family + "\"");
}

PointwiseMap build_drift(const RunConfig::DriftConfig& cfg) {
  if (cfg.family == "zero") return make_zero_map();
  if (cfg.family == "constant") return make_const_drift(cfg.a0);
  if (cfg.family == "mean_revert")
    return make_mean_revert_drift(cfg.kappa, cfg.theta);
  if (cfg.family == "proportional") return make_proportional_drift(cfg.mu);
  fail("model.drift.family: unknown family \"" + cfg.family + "\"");
}

CoefficientSpecPtr build_coefficients(const RunConfig& cfg) {
  return std::make_shared<CoefficientSpec>(
      make_coefficients(build_drift(cfg.drift), build_diffusion(cfg.diffusion)));
}

CurveGrid build_initial_curve(const RunConfig& cfg,
                              const SpaceConfigPtr& space) {
  if (cfg.initial.kind == "flat")
    return make_flat_curve(space, cfg.initial.level);
  const double base = cfg.initial.base;
  const double amp = cfg.initial.amplitude;
  const double rate = cfg.initial.rate;
  return make_curve_from(
      space, [&](double x) { return base + amp * std::exp(-rate * x); }, base);
}

}  // namespace fwdcurve
