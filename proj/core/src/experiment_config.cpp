#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "lagflow/error.hpp"
#include "lagflow/experiment.hpp"

namespace lagflow {

namespace {

using nlohmann::json;

constexpr int kMaxDtLevel = 24;
constexpr int kMaxDxLevel = 12;

// Typed access to one JSON object; finish() rejects keys that were never read.
class Obj {
 public:
  Obj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail("", "must be a JSON object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& raw(const std::string& key) {
    used_.insert(key);
    return j_.at(key);
  }

  template <class T>
  T get(const std::string& key, T fallback) {
    if (!has(key)) return fallback;
    return as<T>(key, raw(key));
  }

  template <class T>
  T require(const std::string& key) {
    if (!has(key)) fail(key, "is required");
    return as<T>(key, raw(key));
  }

  Obj child(const std::string& key) { return Obj(raw(key), name(key)); }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.count(it.key())) throw InvalidInput("config: unknown key '" + name(it.key()) + "'");
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw InvalidInput("config: '" + name(key) + "' " + what);
  }

  std::string name(const std::string& key) const {
    if (path_.empty()) return key;
    return key.empty() ? path_ : path_ + "." + key;
  }

 private:
  template <class T>
  T as(const std::string& key, const json& v) const {
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) fail(key, "must be a number");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) fail(key, "must be an integer");
        if constexpr (std::is_unsigned_v<T>)
          if (v.is_number_integer() && !v.is_number_unsigned()) fail(key, "must be >= 0");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) fail(key, "must be a string");
      }
      return v.get<T>();
    } catch (const json::exception&) {
      fail(key, "has the wrong type");
    }
  }

  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

std::vector<double> number_list(Obj& o, const std::string& key) {
  const json& v = o.raw(key);
  if (!v.is_array()) o.fail(key, "must be an array of numbers");
  std::vector<double> out;
  for (const json& x : v) {
    if (!x.is_number()) o.fail(key, "must be an array of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

std::vector<int> int_list(Obj& o, const std::string& key) {
  const json& v = o.raw(key);
  if (!v.is_array()) o.fail(key, "must be an array of integers");
  std::vector<int> out;
  for (const json& x : v) {
    if (!x.is_number_integer()) o.fail(key, "must be an array of integers");
    out.push_back(x.get<int>());
  }
  return out;
}

// Parser callback that rejects repeated keys inside one object.
class DuplicateGuard {
 public:
  bool operator()(int, json::parse_event_t event, json& parsed) {
    switch (event) {
      case json::parse_event_t::object_start: keys_.emplace_back(); break;
      case json::parse_event_t::object_end: keys_.pop_back(); break;
      case json::parse_event_t::key: {
        const std::string key = parsed.get<std::string>();
        if (!keys_.back().insert(key).second)
          throw InvalidInput("config: duplicate key '" + key + "'");
        break;
      }
      default: break;
    }
    return true;
  }

 private:
  std::vector<std::set<std::string>> keys_;
};

FieldSpec parse_field(Obj o) {
  FieldSpec f;
  f.name = o.require<std::string>("name");
  CatalogParams& p = f.params;
  p.dim = o.get<int>("dim", 2);
  if (o.has("velocity")) p.velocity = number_list(o, "velocity");
  p.amplitude = o.get<double>("amplitude", p.amplitude);
  if (o.has("center")) p.center = number_list(o, "center");
  p.omega = o.get<double>("omega", p.omega);
  p.inner_radius = o.get<double>("inner_radius", p.inner_radius);
  p.outer_radius = o.get<double>("outer_radius", p.outer_radius);
  p.alpha = o.get<double>("alpha", p.alpha);
  p.p = o.get<double>("p", p.p);
  p.seed = o.get<std::uint64_t>("seed", p.seed);
  p.grid = o.get<int>("grid", p.grid);
  p.modes = o.get<int>("modes", p.modes);
  if (o.has("horizon") && !o.raw("horizon").is_null()) p.horizon = o.get<double>("horizon", p.horizon);
  o.finish();
  if (f.name == "constant" && p.velocity.empty()) p.velocity.assign(p.dim, 0.0);
  return f;
}

DensitySpec parse_density(Obj o) {
  DensitySpec d;
  d.name = o.require<std::string>("name");
  d.amplitude = o.get<double>("amplitude", d.amplitude);
  d.exponent = o.get<double>("exponent", d.exponent);
  d.level = o.get<double>("level", d.level);
  if (o.has("center")) d.center = number_list(o, "center");
  o.finish();
  return d;
}

MetricSpec parse_metric(Obj o) {
  MetricSpec m;
  const std::string kind = o.require<std::string>("kind");
  if (kind == "w1") {
    m.logarithmic = false;
  } else if (kind == "log") {
    m.logarithmic = true;
    m.alpha = o.get<double>("alpha", m.alpha);
    if (!(m.alpha >= 0.0 && m.alpha <= 1.0)) o.fail("alpha", "must lie in [0, 1]");
    const std::string rule = o.get<std::string>("h_rule", "max_dt_dx");
    if (rule == "max_dt_dx") {
      m.h_rule = HRule::max_dt_dx;
    } else if (rule == "explicit") {
      m.h_rule = HRule::explicit_value;
      m.h = o.require<double>("h");
      if (!(m.h > 0.0)) o.fail("h", "must be > 0");
    } else {
      o.fail("h_rule", "must be 'max_dt_dx' or 'explicit'");
    }
  } else {
    o.fail("kind", "must be 'w1' or 'log'");
  }
  o.finish();
  return m;
}

SweepSpec parse_sweep(Obj o) {
  SweepSpec s;
  s.dt_levels = int_list(o, "dt_levels");
  s.dx_levels = int_list(o, "dx_levels");
  const std::string pairing = o.get<std::string>("pairing", "zip");
  if (pairing == "zip")
    s.pairing = LevelPairing::zip;
  else if (pairing == "grid")
    s.pairing = LevelPairing::grid;
  else
    o.fail("pairing", "must be 'zip' or 'grid'");
  o.finish();
  if (s.dt_levels.empty()) o.fail("dt_levels", "must not be empty");
  if (s.dx_levels.empty()) o.fail("dx_levels", "must not be empty");
  for (int l : s.dt_levels)
    if (l < 0 || l > kMaxDtLevel) o.fail("dt_levels", "entries must lie in [0, 24]");
  for (int l : s.dx_levels)
    if (l < 1 || l > kMaxDxLevel) o.fail("dx_levels", "entries must lie in [1, 12]");
  if (s.pairing == LevelPairing::zip && s.dt_levels.size() != s.dx_levels.size() &&
      s.dt_levels.size() != 1 && s.dx_levels.size() != 1)
    o.fail("", "zip pairing needs equally long level lists (or one list of length 1)");
  return s;
}

FlowSpec parse_flow(Obj o) {
  FlowSpec f;
  f.T = o.get<double>("T", f.T);
  f.delta_rule = o.get<std::string>("delta_rule", f.delta_rule);
  if (f.delta_rule != "auto") static_cast<void>(parse_delta_rule(f.delta_rule));
  f.delta = o.get<double>("delta", f.delta);
  f.n_quad_time = o.get<int>("n_quad_time", f.n_quad_time);
  if (o.has("kernel")) f.kernel = parse_mollifier_profile(o.get<std::string>("kernel", ""));
  f.mollifier_quad = o.get<int>("mollifier_quad", f.mollifier_quad);
  o.finish();
  if (!(f.T > 0.0)) o.fail("T", "must be > 0");
  return f;
}

ReferenceSpec parse_reference(Obj o) {
  ReferenceSpec r;
  r.n_particles = o.get<int>("n_particles", r.n_particles);
  r.dt_ref = o.get<double>("dt_ref", r.dt_ref);
  r.self_dt_level = o.get<int>("self_dt_level", r.self_dt_level);
  r.self_dx_level = o.get<int>("self_dx_level", r.self_dx_level);
  r.master_seed = o.get<std::uint64_t>("master_seed", r.master_seed);
  o.finish();
  if (r.n_particles < 0 || r.n_particles > static_cast<int>(kExactSupportCap))
    o.fail("n_particles", "must lie in [0, 5000]");
  if (!(r.dt_ref > 0.0)) o.fail("dt_ref", "must be > 0");
  return r;
}

DiagnosticOptions parse_diagnostics(Obj o) {
  DiagnosticOptions d;
  d.det_points = o.get<int>("det_points", d.det_points);
  d.fd_step = o.get<double>("fd_step", d.fd_step);
  d.probe_pairs = o.get<int>("probe_pairs", d.probe_pairs);
  d.probe_radius = o.get<double>("probe_radius", d.probe_radius);
  o.finish();
  if (d.det_points < 0) o.fail("det_points", "must be >= 0");
  if (d.probe_pairs < 0) o.fail("probe_pairs", "must be >= 0");
  if (!(d.fd_step >= 1e-7 && d.fd_step <= 1e-3)) o.fail("fd_step", "must lie in [1e-7, 1e-3]");
  if (!(d.probe_radius > 0.0 && d.probe_radius <= 0.5)) o.fail("probe_radius", "must lie in (0, 0.5]");
  return d;
}

template <class Fn>
auto with_key(const std::string& key, Fn&& fn) {
  try {
    return fn();
  } catch (const InvalidInput& e) {
    const std::string what = e.what();
    if (what.rfind("config:", 0) == 0) throw;
    throw InvalidInput("config: '" + key + "': " + what);
  }
}

void validate(const ExperimentConfig& c) {
  const VelocityField field = with_key("field", [&] { return build_field(c.field); });
  const int d = field.dim();
  with_key("rho0", [&] { return build_density(c.rho0, d); });
  if (c.n_reps < 1) throw InvalidInput("config: 'n_reps' must be >= 1");
  if (c.quad_per_cell < 1) throw InvalidInput("config: 'quad_per_cell' must be >= 1");
  if (c.workers < 0) throw InvalidInput("config: 'workers' must be >= 0");
  if (c.sample_times.empty()) throw InvalidInput("config: 'sample_times' must not be empty");
  double prev = 0.0;
  for (double t : c.sample_times) {
    if (!(t >= prev) || t > c.flow.T * (1.0 + 1e-12))
      throw InvalidInput("config: 'sample_times' must be nondecreasing within [0, flow.T]");
    prev = t;
  }
  if (c.flow.delta_rule == "explicit" && !(c.flow.delta > 0.0))
    throw InvalidInput("config: 'flow.delta' must be > 0 with the explicit rule");
  for (const SweepLevel& l : sweep_levels(c.sweep)) {
    FlowConfig cfg;
    cfg.dt = l.dt;
    cfg.T = c.flow.T;
    cfg.n_quad_time = c.flow.n_quad_time;
    cfg.mollifier_quad = c.flow.mollifier_quad;
    cfg.delta_rule = c.flow.delta_rule == "auto" ? default_delta_rule(field)
                                                 : parse_delta_rule(c.flow.delta_rule);
    cfg.delta = c.flow.delta;
    with_key("flow", [&] {
      cfg.validate();
      return 0;
    });
    if (std::pow(2.0, d * l.dx_level) > double(1 << 22))
      throw InvalidInput("config: 'sweep.dx_levels' gives more than 2^22 cells");
  }
}

json spec_json(const CatalogParams& p, const std::string& name) {
  json j = {{"name", name},         {"dim", p.dim},
            {"velocity", p.velocity}, {"amplitude", p.amplitude},
            {"center", p.center},   {"omega", p.omega},
            {"inner_radius", p.inner_radius}, {"outer_radius", p.outer_radius},
            {"alpha", p.alpha},     {"p", p.p},
            {"seed", p.seed},       {"grid", p.grid},
            {"modes", p.modes}};
  j["horizon"] = std::isfinite(p.horizon) ? json(p.horizon) : json(nullptr);
  return j;
}

}  // namespace

ExperimentConfig parse_config(std::string_view text) {
  json j;
  try {
    j = json::parse(text.begin(), text.end(), DuplicateGuard());
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("config: malformed JSON: ") + e.what());
  }
  ExperimentConfig c;
  Obj o(j, "");
  c.field = parse_field(o.child("field"));
  if (o.has("mesh")) {
    Obj m = o.child("mesh");
    c.mesh.kind = with_key("mesh.kind", [&] { return parse_mesh_kind(m.get<std::string>("kind", "cartesian")); });
    c.mesh.jitter = m.get<double>("jitter", 0.0);
    c.mesh.seed = m.get<std::uint64_t>("seed", 0);
    m.finish();
    if (!(c.mesh.jitter >= 0.0 && c.mesh.jitter < 0.5)) m.fail("jitter", "must lie in [0, 0.5)");
  }
  if (o.has("rho0")) c.rho0 = parse_density(o.child("rho0"));
  if (o.has("scheme")) c.scheme = with_key("scheme", [&] { return parse_scheme(o.get<std::string>("scheme", "")); });
  if (o.has("metric")) c.metric = parse_metric(o.child("metric"));
  if (o.has("flow")) c.flow = parse_flow(o.child("flow"));
  c.sweep = parse_sweep(o.child("sweep"));
  c.n_reps = o.get<int>("n_reps", c.n_reps);
  c.base_seed = o.get<std::uint64_t>("base_seed", c.base_seed);
  if (o.has("aggregate"))
    c.aggregate = with_key("aggregate", [&] { return parse_aggregate(o.get<std::string>("aggregate", "")); });
  if (o.has("rep_mode"))
    c.rep_mode = with_key("rep_mode", [&] { return parse_representative_mode(o.get<std::string>("rep_mode", "")); });
  c.quad_per_cell = o.get<int>("quad_per_cell", c.quad_per_cell);
  if (o.has("sample_times")) c.sample_times = number_list(o, "sample_times");
  if (o.has("reference")) c.reference = parse_reference(o.child("reference"));
  if (o.has("diagnostics")) c.diagnostics = parse_diagnostics(o.child("diagnostics"));
  c.workers = o.get<int>("workers", c.workers);
  c.output = o.get<std::string>("output", c.output);
  o.finish();
  validate(c);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_json(const ExperimentConfig& c) {
  json metric = {{"kind", c.metric.logarithmic ? "log" : "w1"}};
  if (c.metric.logarithmic) {
    metric["alpha"] = c.metric.alpha;
    metric["h_rule"] = c.metric.h_rule == HRule::max_dt_dx ? "max_dt_dx" : "explicit";
    if (c.metric.h_rule == HRule::explicit_value) metric["h"] = c.metric.h;
  }
  json j = {
      {"field", spec_json(c.field.params, c.field.name)},
      {"mesh", {{"kind", std::string(to_string(c.mesh.kind))}, {"jitter", c.mesh.jitter}, {"seed", c.mesh.seed}}},
      {"rho0", {{"name", c.rho0.name}, {"amplitude", c.rho0.amplitude}, {"exponent", c.rho0.exponent},
                {"level", c.rho0.level}, {"center", c.rho0.center}}},
      {"scheme", std::string(to_string(c.scheme))},
      {"metric", metric},
      {"flow", {{"T", c.flow.T}, {"delta_rule", c.flow.delta_rule}, {"delta", c.flow.delta},
                {"n_quad_time", c.flow.n_quad_time}, {"kernel", std::string(to_string(c.flow.kernel))},
                {"mollifier_quad", c.flow.mollifier_quad}}},
      {"sweep", {{"dt_levels", c.sweep.dt_levels}, {"dx_levels", c.sweep.dx_levels},
                 {"pairing", c.sweep.pairing == LevelPairing::zip ? "zip" : "grid"}}},
      {"n_reps", c.n_reps},
      {"base_seed", c.base_seed},
      {"aggregate", std::string(to_string(c.aggregate))},
      {"rep_mode", std::string(to_string(c.rep_mode))},
      {"quad_per_cell", c.quad_per_cell},
      {"sample_times", c.sample_times},
      {"reference", {{"n_particles", c.reference.n_particles}, {"dt_ref", c.reference.dt_ref},
                     {"self_dt_level", c.reference.self_dt_level},
                     {"self_dx_level", c.reference.self_dx_level},
                     {"master_seed", c.reference.master_seed}}},
      {"diagnostics", {{"det_points", c.diagnostics.det_points}, {"fd_step", c.diagnostics.fd_step},
                       {"probe_pairs", c.diagnostics.probe_pairs},
                       {"probe_radius", c.diagnostics.probe_radius}}},
      {"workers", c.workers},
      {"output", c.output}};
  return j.dump();
}

std::string config_hash(const ExperimentConfig& config) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : config_to_json(config)) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

VelocityField build_field(const FieldSpec& spec) { return catalog_field(spec.name, spec.params); }

Density build_density(const DensitySpec& spec, int dim) {
  if (spec.name == "uniform") return uniform_density(dim);
  if (spec.name == "sinusoidal_bump") return sinusoidal_bump(dim, spec.amplitude);
  if (spec.name == "truncated_singular")
    return truncated_singular(dim, spec.exponent, spec.level, spec.center);
  throw InvalidInput("unknown density '" + spec.name + "'");
}

std::vector<SweepLevel> sweep_levels(const SweepSpec& sweep) {
  std::vector<SweepLevel> out;
  const auto make = [](int lt, int lx) {
    return SweepLevel{lt, lx, std::ldexp(1.0, -lt), std::ldexp(1.0, -lx)};
  };
  if (sweep.pairing == LevelPairing::grid) {
    for (int lt : sweep.dt_levels)
      for (int lx : sweep.dx_levels) out.push_back(make(lt, lx));
  } else {
    const std::size_t n = std::max(sweep.dt_levels.size(), sweep.dx_levels.size());
    for (std::size_t k = 0; k < n; ++k)
      out.push_back(make(sweep.dt_levels[sweep.dt_levels.size() == 1 ? 0 : k],
                         sweep.dx_levels[sweep.dx_levels.size() == 1 ? 0 : k]));
  }
  return out;
}

}  // namespace lagflow
