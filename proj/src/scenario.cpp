#include "afc/scenario.hpp"

#include <cmath>
#include <set>
#include <utility>

#include <nlohmann/json.hpp>

#include "afc/errors.hpp"

namespace afc {
namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

// Strict object view: every key must be consumed, leftovers are reported with
// their full path.
class Obj {
 public:
  Obj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  std::string key_path(const char* k) const {
    return path_.empty() ? k : path_ + "." + k;
  }

  const json* take(const char* k) {
    seen_.insert(k);
    const auto it = j_.find(k);
    return it == j_.end() ? nullptr : &*it;
  }

  bool has(const char* k) const { return j_.contains(k); }

  double number(const char* k, double fallback) {
    const json* v = take(k);
    if (!v) return fallback;
    if (!v->is_number()) throw ConfigError(key_path(k) + ": expected a number");
    return v->get<double>();
  }

  double required_number(const char* k) {
    const json* v = take(k);
    if (!v) throw ConfigError(key_path(k) + ": missing required key");
    if (!v->is_number()) throw ConfigError(key_path(k) + ": expected a number");
    return v->get<double>();
  }

  long long integer(const char* k, long long fallback) {
    const json* v = take(k);
    if (!v) return fallback;
    if (!v->is_number_integer()) {
      throw ConfigError(key_path(k) + ": expected an integer");
    }
    return v->get<long long>();
  }

  bool boolean(const char* k, bool fallback) {
    const json* v = take(k);
    if (!v) return fallback;
    if (!v->is_boolean()) throw ConfigError(key_path(k) + ": expected a boolean");
    return v->get<bool>();
  }

  std::string string(const char* k, std::string fallback) {
    const json* v = take(k);
    if (!v) return fallback;
    if (!v->is_string()) throw ConfigError(key_path(k) + ": expected a string");
    return v->get<std::string>();
  }

  std::string required_string(const char* k) {
    const json* v = take(k);
    if (!v) throw ConfigError(key_path(k) + ": missing required key");
    if (!v->is_string()) throw ConfigError(key_path(k) + ": expected a string");
    return v->get<std::string>();
  }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) {
        throw ConfigError(path_.empty()
                              ? "unknown key '" + item.key() + "'"
                              : "unknown key '" + path_ + "." + item.key() + "'");
      }
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

Eigen::VectorXd number_array(const json& v, const std::string& path) {
  if (!v.is_array()) throw ConfigError(path + ": expected an array of numbers");
  Eigen::VectorXd out(v.size());
  Eigen::Index i = 0;
  for (const auto& e : v) {
    if (!e.is_number()) throw ConfigError(path + ": expected an array of numbers");
    out[i++] = e.get<double>();
  }
  return out;
}

Plant parse_plant(const json& j) {
  Obj o(j, "plant");
  const std::string kind = o.required_string("kind");
  Plant plant;
  if (kind == "mech") {
    MechPlant p;
    p.friction.theta1 = o.number("theta1", p.friction.theta1);
    p.friction.theta2 = o.number("theta2", p.friction.theta2);
    p.friction.vartheta = o.number("vartheta", p.friction.vartheta);
    if (!p.friction.valid()) throw ConfigError("plant: friction coefficients must be positive");
    plant = p;
  } else if (kind == "hydro") {
    HydroPlant p;
    p.params.a1 = o.number("a1", p.params.a1);
    p.params.a2 = o.number("a2", p.params.a2);
    p.params.a3 = o.number("a3", p.params.a3);
    p.params.friction.theta1 = o.number("theta1", p.params.friction.theta1);
    p.params.friction.theta2 = o.number("theta2", p.params.friction.theta2);
    p.params.friction.vartheta = o.number("vartheta", p.params.friction.vartheta);
    if (!p.params.valid()) throw ConfigError("plant: hydro constants must be positive");
    plant = p;
  } else if (kind == "lugre") {
    LuGrePlant p;
    p.params.sigma0 = o.number("sigma0", p.params.sigma0);
    p.params.sigma1 = o.number("sigma1", p.params.sigma1);
    p.params.sigma2 = o.number("sigma2", p.params.sigma2);
    p.params.FC = o.number("FC", p.params.FC);
    p.params.FS = o.number("FS", p.params.FS);
    p.params.vS = o.number("vS", p.params.vS);
    if (!p.params.valid()) {
      throw ConfigError("plant: lugre coefficients must be positive with FS >= FC");
    }
    plant = p;
  } else {
    throw ConfigError("plant.kind: expected one of mech|hydro|lugre");
  }
  o.finish();
  return plant;
}

Drive parse_controller(const json& j) {
  Obj o(j, "controller");
  Drive drive;
  if (const json* ol = o.take("open_loop")) {
    if (o.has("alpha1") || o.has("alpha2")) {
      throw ConfigError("controller: give either gains or open_loop, not both");
    }
    Obj in(*ol, "controller.open_loop");
    const std::string kind = in.required_string("kind");
    if (kind == "constant") {
      drive = InputSignal{ConstantInput{in.number("value", 0.0)}};
    } else if (kind == "sinusoid") {
      SinusoidInput s;
      s.amplitude = in.number("amplitude", s.amplitude);
      s.omega = in.number("omega", s.omega);
      s.phase = in.number("phase", s.phase);
      drive = InputSignal{s};
    } else {
      throw ConfigError("controller.open_loop.kind: expected constant|sinusoid");
    }
    in.finish();
  } else {
    ControllerGains g;
    g.alpha1 = o.number("alpha1", g.alpha1);
    g.alpha2 = o.number("alpha2", g.alpha2);
    if (!g.valid()) throw ConfigError("controller: alpha1 and alpha2 must be positive");
    drive = g;
  }
  o.finish();
  return drive;
}

ReferenceGenerator parse_reference(const json& j) {
  Obj o(j, "reference");
  const std::string kind = o.required_string("kind");
  ReferenceGenerator gen;
  if (kind == "constant") {
    gen = ConstantRef{o.number("value", 0.0)};
  } else if (kind == "sinusoid") {
    SinusoidRef r;
    r.amplitude = o.number("amplitude", r.amplitude);
    r.omega = o.number("omega", r.omega);
    r.phase = o.number("phase", r.phase);
    r.offset = o.number("offset", r.offset);
    gen = r;
  } else if (kind == "chirp") {
    ChirpRef r;
    r.amplitude = o.number("amplitude", r.amplitude);
    r.rate = o.number("rate", r.rate);
    gen = r;
  } else if (kind == "step_plus_ramp") {
    StepRampRef r;
    r.base = o.number("base", r.base);
    r.step_time = o.number("step_time", r.step_time);
    r.step_height = o.number("step_height", r.step_height);
    r.ramp_start = o.number("ramp_start", r.ramp_start);
    r.ramp_slope = o.number("ramp_slope", r.ramp_slope);
    r.blend = o.number("blend", r.blend);
    if (!(r.blend > 0.0)) throw ConfigError("reference.blend: must be positive");
    gen = r;
  } else {
    throw ConfigError(
        "reference.kind: expected one of constant|sinusoid|chirp|step_plus_ramp");
  }
  o.finish();
  return gen;
}

InitSpec parse_init(const json& j) {
  Obj o(j, "init");
  InitSpec spec;
  if (const json* rb = o.take("random_box")) {
    if (o.has("plant") || o.has("observer")) {
      throw ConfigError("init: give either explicit states or random_box, not both");
    }
    Obj in(*rb, "init.random_box");
    RandomBoxInit box;
    const json* lo = in.take("low");
    const json* hi = in.take("high");
    if (!lo || !hi) throw ConfigError("init.random_box: low and high are required");
    box.low = number_array(*lo, "init.random_box.low");
    box.high = number_array(*hi, "init.random_box.high");
    box.draws = static_cast<int>(in.integer("draws", 1));
    in.finish();
    if (box.low.size() != box.high.size()) {
      throw ConfigError("init.random_box: low and high lengths differ");
    }
    if ((box.high - box.low).minCoeff() < 0.0) {
      throw ConfigError("init.random_box: low must not exceed high");
    }
    if (box.draws < 1) throw ConfigError("init.random_box.draws: must be >= 1");
    spec = box;
  } else {
    ExplicitInit init;
    if (const json* p = o.take("plant")) init.plant = number_array(*p, "init.plant");
    if (const json* v = o.take("observer")) {
      init.observer = number_array(*v, "init.observer");
    }
    spec = init;
  }
  o.finish();
  return spec;
}

std::optional<ExcitationSpec> parse_excitation(const json& j) {
  Obj o(j, "output.excitation");
  ExcitationSpec spec;
  spec.mode = o.required_string("mode");
  spec.window = o.number("window", 0.0);
  spec.mu = o.number("mu", 0.0);
  spec.stride = o.number("stride", 0.0);
  spec.gap = o.number("gap", 0.0);
  spec.partition_dt = o.number("partition_dt", 0.0);
  o.finish();
  if (spec.mode == "pe") {
    if (!(spec.window > 0.0) || !(spec.mu > 0.0)) {
      throw ConfigError("output.excitation: pe mode needs window > 0 and mu > 0");
    }
  } else if (spec.mode == "intervals") {
    if (!(spec.window > 0.0)) {
      throw ConfigError("output.excitation: intervals mode needs window > 0");
    }
  } else if (spec.mode == "conservative") {
    if (!(spec.partition_dt > 0.0)) {
      throw ConfigError("output.excitation: conservative mode needs partition_dt > 0");
    }
  } else {
    throw ConfigError(
        "output.excitation.mode: expected pe|intervals|conservative");
  }
  return spec;
}

Eigen::Index plant_dim(const Plant& p) {
  return std::holds_alternative<MechPlant>(p) ? 2 : 3;
}
Eigen::Index observer_dim(bool hydro) { return hydro ? 4 : 3; }

}  // namespace

Scenario parse_scenario(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("scenario is not valid JSON: ") + e.what());
  }

  Obj top(doc, "");
  Scenario s;
  s.name = top.string("name", s.name);

  const json* plant = top.take("plant");
  if (!plant) throw ConfigError("plant: missing required section");
  s.plant = parse_plant(*plant);
  const bool is_hydro = std::holds_alternative<HydroPlant>(s.plant);

  if (const json* obs = top.take("observer")) {
    Obj o(*obs, "observer");
    s.k1_auto = o.boolean("k1_auto", false);
    if (const json* k1 = o.take("k1")) {
      if (s.k1_auto) throw ConfigError("observer: give either k1 or k1_auto, not both");
      if (k1->is_number()) {
        s.k1_values = {k1->get<double>()};
      } else {
        const Eigen::VectorXd vals = number_array(*k1, "observer.k1");
        s.k1_values.assign(vals.data(), vals.data() + vals.size());
      }
      if (s.k1_values.empty()) throw ConfigError("observer.k1: empty sweep list");
      for (const double v : s.k1_values) {
        if (!(v > 0.0)) throw ConfigError("observer.k1: values must be positive");
      }
    } else if (s.k1_auto) {
      s.k1_values.clear();
    }
    s.vartheta = o.number("vartheta", s.vartheta);
    s.hydro_observer = o.boolean("x3hat", is_hydro);
    if (o.has("theta2_upper")) s.theta2_upper = o.required_number("theta2_upper");
    if (o.has("alpha1_lyap")) s.alpha1_lyap = o.required_number("alpha1_lyap");
    o.finish();
  } else {
    s.hydro_observer = is_hydro;
  }
  if (!(s.vartheta > 0.0)) throw ConfigError("observer.vartheta: must be positive");
  if (is_hydro && !s.hydro_observer) {
    throw ConfigError("observer.x3hat: a hydro plant requires the pressure-estimate channel");
  }
  if (!is_hydro && s.hydro_observer) {
    throw ConfigError("observer.x3hat: only valid with a hydro plant");
  }
  if (s.k1_auto) {
    if (!is_hydro) throw ConfigError("observer.k1_auto: requires a hydro plant");
    if (!s.theta2_upper) {
      throw ConfigError("observer.theta2_upper: required when k1_auto is set");
    }
  }

  if (const json* ctrl = top.take("controller")) s.drive = parse_controller(*ctrl);
  if (const json* ref = top.take("reference")) s.reference = parse_reference(*ref);
  if (const json* init = top.take("init")) s.init = parse_init(*init);

  if (const json* sim = top.take("sim")) {
    Obj o(*sim, "sim");
    s.sim.t_end = o.required_number("t_end");
    s.sim.dt = o.number("dt", 0.0);
    s.sim.log_every = static_cast<int>(o.integer("log_every", s.sim.log_every));
    if (o.has("seed")) {
      s.sim.seed = static_cast<std::uint64_t>(o.integer("seed", 0));
    }
    o.finish();
  }
  if (!(s.sim.t_end > 0.0)) throw ConfigError("sim.t_end: must be positive");
  if (s.sim.dt < 0.0) throw ConfigError("sim.dt: must be nonnegative");
  if (s.sim.log_every < 1) throw ConfigError("sim.log_every: must be >= 1");

  if (const json* out = top.take("output")) {
    Obj o(*out, "output");
    s.output.directory = o.string("directory", "");
    s.output.emit_plots = o.boolean("emit_plots", false);
    if (const json* exc = o.take("excitation")) {
      s.output.excitation = parse_excitation(*exc);
    }
    o.finish();
  }
  if (s.output.directory.empty()) s.output.directory = s.name;

  top.finish();

  // Resolve and check initial-state dimensions.
  const Eigen::Index pd = plant_dim(s.plant);
  const Eigen::Index od = observer_dim(s.hydro_observer);
  if (auto* init = std::get_if<ExplicitInit>(&s.init)) {
    if (init->plant.size() == 0) init->plant = Eigen::VectorXd::Zero(pd);
    if (init->observer.size() == 0) init->observer = Eigen::VectorXd::Zero(od);
    if (init->plant.size() != pd) {
      throw ConfigError("init.plant: expected " + std::to_string(pd) + " values");
    }
    if (init->observer.size() != od) {
      throw ConfigError("init.observer: expected " + std::to_string(od) + " values");
    }
  } else {
    const auto& box = std::get<RandomBoxInit>(s.init);
    if (box.low.size() != pd + od) {
      throw ConfigError("init.random_box: expected " + std::to_string(pd + od) +
                        " values (stacked plant + observer state)");
    }
  }
  return s;
}

namespace {

ordered_json plant_json(const Plant& plant) {
  ordered_json j;
  if (const auto* m = std::get_if<MechPlant>(&plant)) {
    j["kind"] = "mech";
    j["theta1"] = m->friction.theta1;
    j["theta2"] = m->friction.theta2;
    j["vartheta"] = m->friction.vartheta;
  } else if (const auto* h = std::get_if<HydroPlant>(&plant)) {
    j["kind"] = "hydro";
    j["a1"] = h->params.a1;
    j["a2"] = h->params.a2;
    j["a3"] = h->params.a3;
    j["theta1"] = h->params.friction.theta1;
    j["theta2"] = h->params.friction.theta2;
    j["vartheta"] = h->params.friction.vartheta;
  } else {
    const auto& p = std::get<LuGrePlant>(plant).params;
    j["kind"] = "lugre";
    j["sigma0"] = p.sigma0;
    j["sigma1"] = p.sigma1;
    j["sigma2"] = p.sigma2;
    j["FC"] = p.FC;
    j["FS"] = p.FS;
    j["vS"] = p.vS;
  }
  return j;
}

ordered_json drive_json(const Drive& drive) {
  ordered_json j;
  if (const auto* g = std::get_if<ControllerGains>(&drive)) {
    j["alpha1"] = g->alpha1;
    j["alpha2"] = g->alpha2;
  } else {
    const auto& in = std::get<InputSignal>(drive);
    ordered_json ol;
    if (const auto* c = std::get_if<ConstantInput>(&in)) {
      ol["kind"] = "constant";
      ol["value"] = c->value;
    } else {
      const auto& sig = std::get<SinusoidInput>(in);
      ol["kind"] = "sinusoid";
      ol["amplitude"] = sig.amplitude;
      ol["omega"] = sig.omega;
      ol["phase"] = sig.phase;
    }
    j["open_loop"] = std::move(ol);
  }
  return j;
}

ordered_json reference_json(const ReferenceGenerator& gen) {
  ordered_json j;
  if (const auto* c = std::get_if<ConstantRef>(&gen)) {
    j["kind"] = "constant";
    j["value"] = c->value;
  } else if (const auto* sr = std::get_if<SinusoidRef>(&gen)) {
    j["kind"] = "sinusoid";
    j["amplitude"] = sr->amplitude;
    j["omega"] = sr->omega;
    j["phase"] = sr->phase;
    j["offset"] = sr->offset;
  } else if (const auto* ch = std::get_if<ChirpRef>(&gen)) {
    j["kind"] = "chirp";
    j["amplitude"] = ch->amplitude;
    j["rate"] = ch->rate;
  } else {
    const auto& st = std::get<StepRampRef>(gen);
    j["kind"] = "step_plus_ramp";
    j["base"] = st.base;
    j["step_time"] = st.step_time;
    j["step_height"] = st.step_height;
    j["ramp_start"] = st.ramp_start;
    j["ramp_slope"] = st.ramp_slope;
    j["blend"] = st.blend;
  }
  return j;
}

ordered_json init_json(const InitSpec& init) {
  ordered_json j;
  if (const auto* e = std::get_if<ExplicitInit>(&init)) {
    j["plant"] = std::vector<double>(e->plant.data(), e->plant.data() + e->plant.size());
    j["observer"] =
        std::vector<double>(e->observer.data(), e->observer.data() + e->observer.size());
  } else {
    const auto& box = std::get<RandomBoxInit>(init);
    ordered_json b;
    b["low"] = std::vector<double>(box.low.data(), box.low.data() + box.low.size());
    b["high"] = std::vector<double>(box.high.data(), box.high.data() + box.high.size());
    b["draws"] = box.draws;
    j["random_box"] = std::move(b);
  }
  return j;
}

}  // namespace

std::string serialize_scenario(const Scenario& s, int indent) {
  ordered_json j;
  j["name"] = s.name;
  j["plant"] = plant_json(s.plant);

  ordered_json obs;
  if (s.k1_auto) {
    obs["k1_auto"] = true;
  } else {
    obs["k1"] = s.k1_values;
  }
  obs["vartheta"] = s.vartheta;
  obs["x3hat"] = s.hydro_observer;
  if (s.theta2_upper) obs["theta2_upper"] = *s.theta2_upper;
  if (s.alpha1_lyap) obs["alpha1_lyap"] = *s.alpha1_lyap;
  j["observer"] = std::move(obs);

  j["controller"] = drive_json(s.drive);
  j["reference"] = reference_json(s.reference);
  j["init"] = init_json(s.init);

  ordered_json sim;
  sim["t_end"] = s.sim.t_end;
  sim["dt"] = s.sim.dt;
  sim["log_every"] = s.sim.log_every;
  if (s.sim.seed) sim["seed"] = *s.sim.seed;
  j["sim"] = std::move(sim);

  ordered_json out;
  out["directory"] = s.output.directory;
  out["emit_plots"] = s.output.emit_plots;
  if (s.output.excitation) {
    const auto& e = *s.output.excitation;
    ordered_json exc;
    exc["mode"] = e.mode;
    exc["window"] = e.window;
    exc["mu"] = e.mu;
    exc["stride"] = e.stride;
    exc["gap"] = e.gap;
    exc["partition_dt"] = e.partition_dt;
    out["excitation"] = std::move(exc);
  }
  j["output"] = std::move(out);
  return j.dump(indent);
}

ClosedLoopSystem make_system(const Scenario& s, double k1) {
  ClosedLoopSystem sys;
  sys.plant = s.plant;
  sys.observer = {k1, s.vartheta};
  sys.drive = s.drive;
  sys.reference = s.reference;
  sys.alpha1_lyap = s.alpha1_lyap;
  return sys;
}

}  // namespace afc
