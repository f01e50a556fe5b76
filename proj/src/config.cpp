#include "kerrsim/config.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "kerrsim/classical.hpp"
#include "kerrsim/error.hpp"

namespace kerrsim {

using nlohmann::json;

namespace {

constexpr std::array<std::pair<Mode, std::string_view>, 9> kModeNames{{
    {Mode::qsd, "qsd"},
    {Mode::master, "master"},
    {Mode::classical, "classical"},
    {Mode::duffing, "duffing"},
    {Mode::poincare, "poincare"},
    {Mode::wigner, "wigner"},
    {Mode::sweep_omega2, "sweep-omega2"},
    {Mode::sweep_noise, "sweep-noise"},
    {Mode::scale_check, "scale-check"},
}};

[[noreturn]] void type_error(const std::string& key, std::string_view expected, const json& got) {
  std::ostringstream os;
  os << "key '" << key << "': expected " << expected << ", got " << got.dump();
  throw ConfigError(os.str());
}

// Walks one JSON object, tracking which keys were consumed so that leftovers
// can be reported as unknown.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) type_error(path_.empty() ? "<root>" : path_, "object", j_);
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json* raw(const std::string& key) {
    seen_.push_back(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string full(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  double number(const std::string& key, double def) {
    const json* v = raw(key);
    if (!v) return def;
    if (!v->is_number()) type_error(full(key), "number", *v);
    return v->get<double>();
  }

  std::optional<double> number_or_auto(const std::string& key, std::optional<double> def) {
    const json* v = raw(key);
    if (!v) return def;
    if (v->is_string() && v->get<std::string>() == "auto") return std::nullopt;
    if (!v->is_number()) type_error(full(key), "number or \"auto\"", *v);
    return v->get<double>();
  }

  std::optional<double> optional_number(const std::string& key) {
    const json* v = raw(key);
    if (!v || v->is_null()) return std::nullopt;
    if (!v->is_number()) type_error(full(key), "number", *v);
    return v->get<double>();
  }

  int integer(const std::string& key, int def) {
    const json* v = raw(key);
    if (!v) return def;
    if (!v->is_number_integer()) type_error(full(key), "integer", *v);
    const auto x = v->get<std::int64_t>();
    if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) {
      type_error(full(key), "integer in int range", *v);
    }
    return static_cast<int>(x);
  }

  std::optional<int> integer_or_auto(const std::string& key, std::optional<int> def) {
    const json* v = raw(key);
    if (!v) return def;
    if (v->is_string() && v->get<std::string>() == "auto") return std::nullopt;
    if (!v->is_number_integer()) type_error(full(key), "integer or \"auto\"", *v);
    return static_cast<int>(v->get<std::int64_t>());
  }

  std::uint64_t unsigned64(const std::string& key, std::uint64_t def) {
    const json* v = raw(key);
    if (!v) return def;
    if (!v->is_number_unsigned()) type_error(full(key), "non-negative integer", *v);
    return v->get<std::uint64_t>();
  }

  bool boolean(const std::string& key, bool def) {
    const json* v = raw(key);
    if (!v) return def;
    if (!v->is_boolean()) type_error(full(key), "boolean", *v);
    return v->get<bool>();
  }

  std::string string(const std::string& key, const std::string& def) {
    const json* v = raw(key);
    if (!v) return def;
    if (!v->is_string()) type_error(full(key), "string", *v);
    return v->get<std::string>();
  }

  static cplx to_complex(const json& v, const std::string& key) {
    if (v.is_number()) return {v.get<double>(), 0.0};
    if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
      return {v[0].get<double>(), v[1].get<double>()};
    }
    type_error(key, "number or [re, im]", v);
  }

  cplx complex(const std::string& key, cplx def) {
    const json* v = raw(key);
    if (!v) return def;
    return to_complex(*v, full(key));
  }

  std::optional<cplx> optional_complex(const std::string& key) {
    const json* v = raw(key);
    if (!v || v->is_null()) return std::nullopt;
    return to_complex(*v, full(key));
  }

  std::vector<double> numbers(const std::string& key) {
    const json* v = raw(key);
    if (!v) return {};
    if (!v->is_array()) type_error(full(key), "array of numbers", *v);
    std::vector<double> out;
    for (const auto& x : *v) {
      if (!x.is_number()) type_error(full(key), "array of numbers", *v);
      out.push_back(x.get<double>());
    }
    return out;
  }

  std::optional<Section> child(const std::string& key) {
    const json* v = raw(key);
    if (!v) return std::nullopt;
    return Section(*v, full(key));
  }

  // Raises on any key that no accessor asked for.
  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (std::find(seen_.begin(), seen_.end(), k) == seen_.end()) {
        throw ConfigError("unknown key '" + full(k) + "'");
      }
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::vector<std::string> seen_;
};

json complex_to_json(cplx c) {
  if (c.imag() == 0.0) return c.real();
  return json::array({c.real(), c.imag()});
}

json auto_or(const std::optional<double>& v) { return v ? json(*v) : json("auto"); }
json auto_or(const std::optional<int>& v) { return v ? json(*v) : json("auto"); }

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) throw InvalidParameter(name, "must be > 0");
}

void require_non_negative(double v, const char* name) {
  if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidParameter(name, "must be >= 0");
}

void check_estimator(const std::string& e, const char* name) {
  if (e != "rho" && e != "traj") throw InvalidParameter(name, "must be \"rho\" or \"traj\", got \"" + e + "\"");
}

void check_phases(const std::vector<double>& phases, const char* name) {
  for (double ph : phases) require_non_negative(ph, name);
}

void validate_trajectory(const TrajectorySection& t) {
  if (t.dt) require_positive(*t.dt, "trajectory.dt");
  require_non_negative(t.t_end, "trajectory.t_end");
  require_positive(t.record_interval, "trajectory.record_interval");
  if (t.dim && *t.dim < 2) throw InvalidParameter("trajectory.dim", "must be >= 2");
  require_positive(t.tail_threshold, "trajectory.tail_threshold");
  if (t.noise_substeps < 1) throw InvalidParameter("trajectory.noise_substeps", "must be >= 1");
  if (t.max_refinement < 0 || t.max_refinement > 30) {
    throw InvalidParameter("trajectory.max_refinement", "must be in [0, 30]");
  }
}

void validate_ensemble(const EnsembleSection& e) {
  if (e.m < 1) throw InvalidParameter("ensemble.m", "must be >= 1");
  if (e.workers < 1) throw InvalidParameter("ensemble.workers", "must be >= 1");
  check_phases(e.snapshot_phases, "ensemble.snapshot_phases");
}

}  // namespace

std::string_view to_string(Mode m) {
  for (const auto& [mode, name] : kModeNames) {
    if (mode == m) return name;
  }
  return "unknown";
}

Mode mode_from_string(std::string_view name) {
  for (const auto& [mode, n] : kModeNames) {
    if (n == name) return mode;
  }
  throw ConfigError("key 'mode': unknown mode \"" + std::string(name) + "\"");
}

void RunConfig::validate() const {
  params.validate();
  const auto need = [&](bool present, const char* section) {
    if (!present) {
      throw ConfigError("mode '" + std::string(to_string(mode)) + "' requires the '" + section + "' section");
    }
  };
  switch (mode) {
    case Mode::qsd:
    case Mode::sweep_omega2:
    case Mode::sweep_noise:
    case Mode::scale_check:
      need(trajectory.has_value(), "trajectory");
      need(ensemble.has_value(), "ensemble");
      break;
    case Mode::master: need(master.has_value(), "master"); break;
    case Mode::classical: need(classical.has_value(), "classical"); break;
    case Mode::duffing: need(duffing.has_value(), "duffing"); break;
    case Mode::poincare: need(poincare.has_value(), "poincare"); break;
    case Mode::wigner:
      need(wigner.has_value(), "wigner");
      if (wigner->source == "master") {
        need(master.has_value(), "master");
      } else {
        need(trajectory.has_value(), "trajectory");
        need(ensemble.has_value(), "ensemble");
      }
      break;
  }
  if (mode == Mode::sweep_omega2 || mode == Mode::sweep_noise) need(sweep.has_value(), "sweep");
  if (mode == Mode::scale_check) need(scale.has_value(), "scale");

  if (trajectory) validate_trajectory(*trajectory);
  if (ensemble) validate_ensemble(*ensemble);
  if (master) {
    if (master->dt) require_positive(*master->dt, "master.dt");
    require_non_negative(master->t_end, "master.t_end");
    require_positive(master->record_interval, "master.record_interval");
    if (master->dim && *master->dim < 2) throw InvalidParameter("master.dim", "must be >= 2");
    check_phases(master->snapshot_phases, "master.snapshot_phases");
  }
  if (classical) {
    require_non_negative(classical->t_end, "classical.t_end");
    if (classical->dt) require_positive(*classical->dt, "classical.dt");
    require_positive(classical->record_interval, "classical.record_interval");
    require_positive(classical->lyapunov_time, "classical.lyapunov_time");
  }
  if (duffing) {
    DuffingParams dp{duffing->omega0, duffing->omega1, duffing->omega2, duffing->gamma_abs,
                     duffing->chi_abs, duffing->drive1, duffing->drive2};
    dp.validate();
    require_non_negative(duffing->t_end, "duffing.t_end");
    if (duffing->dt) require_positive(*duffing->dt, "duffing.dt");
    require_positive(duffing->record_interval, "duffing.record_interval");
  }
  if (poincare) {
    require_non_negative(poincare->phase, "poincare.phase");
    if (poincare->n_points < 0) throw InvalidParameter("poincare.n_points", "must be >= 0");
    if (poincare->n_skip < 0) throw InvalidParameter("poincare.n_skip", "must be >= 0");
    if (poincare->dt) require_positive(*poincare->dt, "poincare.dt");
  }
  if (wigner) {
    if (wigner->n_r < 1) throw InvalidParameter("wigner.n_r", "must be >= 1");
    if (wigner->n_theta < 1) throw InvalidParameter("wigner.n_theta", "must be >= 1");
    if (wigner->r_max) require_positive(*wigner->r_max, "wigner.r_max");
    if (wigner->source != "qsd" && wigner->source != "master") {
      throw InvalidParameter("wigner.source", "must be \"qsd\" or \"master\", got \"" + wigner->source + "\"");
    }
    if (mode == Mode::wigner) {
      const bool any = wigner->source == "master" ? !master->snapshot_phases.empty()
                                                  : !ensemble->snapshot_phases.empty();
      if (!any) throw InvalidParameter("snapshot_phases", "a wigner run needs at least one snapshot phase");
    }
  }
  if (sweep) {
    require_non_negative(sweep->transient, "sweep.transient");
    check_estimator(sweep->estimator, "sweep.estimator");
    for (double g : sweep->grid) {
      if (!std::isfinite(g)) throw InvalidParameter("sweep.grid", "values must be finite");
      if (mode == Mode::sweep_noise && g < 0.0) throw InvalidParameter("sweep.grid", "noise values must be >= 0");
    }
  }
  if (scale) {
    require_positive(scale->lambda, "scale.lambda");
    require_non_negative(scale->transient, "scale.transient");
    check_estimator(scale->estimator, "scale.estimator");
  }
  if (output_field) {
    if (!(output_field->detector_eff > 0.0 && output_field->detector_eff <= 1.0)) {
      throw InvalidParameter("output_field.detector_eff", "must be in (0, 1]");
    }
    require_non_negative(output_field->count_window, "output_field.count_window");
  }
  if (output.dir.empty()) throw InvalidParameter("output.dir", "must not be empty");
}

RunConfig parse_config(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed configuration document: ") + e.what());
  }
  Section root(doc, "");
  RunConfig cfg;

  const json* mode = root.raw("mode");
  if (!mode) throw ConfigError("key 'mode': required");
  if (!mode->is_string()) type_error("mode", "string", *mode);
  cfg.mode = mode_from_string(mode->get<std::string>());

  auto params = root.child("params");
  if (!params) throw ConfigError("key 'params': required");
  cfg.params.chi = params->number("chi", 0.0);
  cfg.params.detuning = params->number("detuning", 0.0);
  cfg.params.omega1 = params->complex("omega1", {});
  cfg.params.omega2 = params->complex("omega2", {});
  cfg.params.delta_mod = params->number("delta_mod", 0.0);
  cfg.params.n_bath = params->number("n_bath", 0.0);
  cfg.params.gamma_abs = params->number("gamma_abs", 1.0);
  params->finish();

  if (auto s = root.child("trajectory")) {
    TrajectorySection t;
    t.dt = s->number_or_auto("dt", t.dt);
    t.t_end = s->number("t_end", t.t_end);
    t.record_interval = s->number("record_interval", t.record_interval);
    t.dim = s->integer_or_auto("dim", t.dim);
    t.tail_threshold = s->number("tail_threshold", t.tail_threshold);
    const std::string scheme = s->string("scheme", std::string(to_string(t.scheme)));
    try {
      t.scheme = qsd_scheme_from_string(scheme);
    } catch (const Error&) {
      throw ConfigError("key 'trajectory.scheme': expected \"exponential_rk4\" or \"euler_maruyama\", got \"" +
                        scheme + "\"");
    }
    t.noise_substeps = s->integer("noise_substeps", t.noise_substeps);
    t.max_refinement = s->integer("max_refinement", t.max_refinement);
    t.initial_alpha = s->optional_complex("initial_alpha");
    s->finish();
    cfg.trajectory = t;
  }
  if (auto s = root.child("ensemble")) {
    EnsembleSection e;
    e.m = s->integer("m", e.m);
    e.base_seed = s->unsigned64("base_seed", e.base_seed);
    e.workers = s->integer("workers", e.workers);
    e.snapshot_phases = s->numbers("snapshot_phases");
    s->finish();
    cfg.ensemble = e;
  }
  if (auto s = root.child("master")) {
    MasterSection m;
    m.dt = s->number_or_auto("dt", m.dt);
    m.t_end = s->number("t_end", m.t_end);
    m.record_interval = s->number("record_interval", m.record_interval);
    m.dim = s->integer_or_auto("dim", m.dim);
    m.initial_alpha = s->optional_complex("initial_alpha");
    m.snapshot_phases = s->numbers("snapshot_phases");
    s->finish();
    cfg.master = m;
  }
  if (auto s = root.child("classical")) {
    ClassicalSection c;
    c.alpha0 = s->complex("alpha0", c.alpha0);
    c.t_end = s->number("t_end", c.t_end);
    c.dt = s->number_or_auto("dt", c.dt);
    c.record_interval = s->number("record_interval", c.record_interval);
    c.lyapunov = s->boolean("lyapunov", c.lyapunov);
    c.lyapunov_time = s->number("lyapunov_time", c.lyapunov_time);
    s->finish();
    cfg.classical = c;
  }
  if (auto s = root.child("duffing")) {
    DuffingSection d;
    d.omega0 = s->number("omega0", d.omega0);
    d.omega1 = s->number("omega1", d.omega1);
    d.omega2 = s->number("omega2", d.omega2);
    d.gamma_abs = s->number("gamma_abs", d.gamma_abs);
    d.chi_abs = s->number("chi_abs", d.chi_abs);
    d.drive1 = s->number("drive1", d.drive1);
    d.drive2 = s->number("drive2", d.drive2);
    d.e0 = s->number("e0", d.e0);
    d.edot0 = s->number("edot0", d.edot0);
    d.t_end = s->number("t_end", d.t_end);
    d.dt = s->number_or_auto("dt", d.dt);
    d.record_interval = s->number("record_interval", d.record_interval);
    s->finish();
    cfg.duffing = d;
  }
  if (auto s = root.child("poincare")) {
    PoincareSection p;
    p.alpha0 = s->complex("alpha0", p.alpha0);
    p.phase = s->number("phase", p.phase);
    p.n_points = s->integer("n_points", p.n_points);
    p.n_skip = s->integer("n_skip", p.n_skip);
    p.dt = s->number_or_auto("dt", p.dt);
    s->finish();
    cfg.poincare = p;
  }
  if (auto s = root.child("wigner")) {
    WignerSection w;
    w.n_r = s->integer("n_r", w.n_r);
    w.n_theta = s->integer("n_theta", w.n_theta);
    w.r_max = s->number_or_auto("r_max", w.r_max);
    w.source = s->string("source", w.source);
    s->finish();
    cfg.wigner = w;
  }
  if (auto s = root.child("sweep")) {
    SweepSection w;
    w.grid = s->numbers("grid");
    w.transient = s->number("transient", w.transient);
    w.estimator = s->string("estimator", w.estimator);
    s->finish();
    cfg.sweep = w;
  }
  if (auto s = root.child("scale")) {
    ScaleSection c;
    c.lambda = s->number("lambda", c.lambda);
    c.scaled_detuning = s->optional_number("scaled_detuning");
    c.transient = s->number("transient", c.transient);
    c.estimator = s->string("estimator", c.estimator);
    c.classical = s->boolean("classical", c.classical);
    s->finish();
    cfg.scale = c;
  }
  if (auto s = root.child("output_field")) {
    OutputFieldSection o;
    o.detector_eff = s->number("detector_eff", o.detector_eff);
    o.count_window = s->number("count_window", o.count_window);
    s->finish();
    cfg.output_field = o;
  }
  if (auto s = root.child("output")) {
    cfg.output.dir = s->string("dir", cfg.output.dir);
    const json* emit = s->raw("emit");
    if (emit) {
      if (!emit->is_array()) type_error("output.emit", "array of \"csv\"/\"json\"", *emit);
      cfg.output.csv = false;
      cfg.output.json = false;
      for (const auto& e : *emit) {
        if (e == "csv") {
          cfg.output.csv = true;
        } else if (e == "json") {
          cfg.output.json = true;
        } else {
          type_error("output.emit", "array of \"csv\"/\"json\"", *emit);
        }
      }
    }
    s->finish();
  }
  root.finish();
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read configuration file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

json to_json(const RunConfig& cfg) {
  json j;
  j["mode"] = std::string(to_string(cfg.mode));
  const SystemParams& p = cfg.params;
  j["params"] = {{"chi", p.chi},
                 {"detuning", p.detuning},
                 {"omega1", complex_to_json(p.omega1)},
                 {"omega2", complex_to_json(p.omega2)},
                 {"delta_mod", p.delta_mod},
                 {"n_bath", p.n_bath},
                 {"gamma_abs", p.gamma_abs}};
  if (const auto& t = cfg.trajectory) {
    json s = {{"dt", auto_or(t->dt)},
              {"t_end", t->t_end},
              {"record_interval", t->record_interval},
              {"dim", auto_or(t->dim)},
              {"tail_threshold", t->tail_threshold},
              {"scheme", std::string(to_string(t->scheme))},
              {"noise_substeps", t->noise_substeps},
              {"max_refinement", t->max_refinement}};
    if (t->initial_alpha) s["initial_alpha"] = complex_to_json(*t->initial_alpha);
    j["trajectory"] = s;
  }
  if (const auto& e = cfg.ensemble) {
    j["ensemble"] = {{"m", e->m},
                     {"base_seed", e->base_seed},
                     {"workers", e->workers},
                     {"snapshot_phases", e->snapshot_phases}};
  }
  if (const auto& m = cfg.master) {
    json s = {{"dt", auto_or(m->dt)},
              {"t_end", m->t_end},
              {"record_interval", m->record_interval},
              {"dim", auto_or(m->dim)},
              {"snapshot_phases", m->snapshot_phases}};
    if (m->initial_alpha) s["initial_alpha"] = complex_to_json(*m->initial_alpha);
    j["master"] = s;
  }
  if (const auto& c = cfg.classical) {
    j["classical"] = {{"alpha0", complex_to_json(c->alpha0)},
                      {"t_end", c->t_end},
                      {"dt", auto_or(c->dt)},
                      {"record_interval", c->record_interval},
                      {"lyapunov", c->lyapunov},
                      {"lyapunov_time", c->lyapunov_time}};
  }
  if (const auto& d = cfg.duffing) {
    j["duffing"] = {{"omega0", d->omega0},   {"omega1", d->omega1}, {"omega2", d->omega2},
                    {"gamma_abs", d->gamma_abs}, {"chi_abs", d->chi_abs}, {"drive1", d->drive1},
                    {"drive2", d->drive2},   {"e0", d->e0},         {"edot0", d->edot0},
                    {"t_end", d->t_end},     {"dt", auto_or(d->dt)}, {"record_interval", d->record_interval}};
  }
  if (const auto& s = cfg.poincare) {
    j["poincare"] = {{"alpha0", complex_to_json(s->alpha0)},
                     {"phase", s->phase},
                     {"n_points", s->n_points},
                     {"n_skip", s->n_skip},
                     {"dt", auto_or(s->dt)}};
  }
  if (const auto& w = cfg.wigner) {
    j["wigner"] = {{"n_r", w->n_r}, {"n_theta", w->n_theta}, {"r_max", auto_or(w->r_max)}, {"source", w->source}};
  }
  if (const auto& s = cfg.sweep) {
    j["sweep"] = {{"grid", s->grid}, {"transient", s->transient}, {"estimator", s->estimator}};
  }
  if (const auto& s = cfg.scale) {
    json o = {{"lambda", s->lambda}, {"transient", s->transient}, {"estimator", s->estimator},
              {"classical", s->classical}};
    if (s->scaled_detuning) o["scaled_detuning"] = *s->scaled_detuning;
    j["scale"] = o;
  }
  if (const auto& o = cfg.output_field) {
    j["output_field"] = {{"detector_eff", o->detector_eff}, {"count_window", o->count_window}};
  }
  json emit = json::array();
  if (cfg.output.csv) emit.push_back("csv");
  if (cfg.output.json) emit.push_back("json");
  j["output"] = {{"dir", cfg.output.dir}, {"emit", emit}};
  return j;
}

}  // namespace kerrsim
