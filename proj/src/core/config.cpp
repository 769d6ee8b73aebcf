#include "core/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "core/error.hpp"

namespace synthdet {

using nlohmann::ordered_json;

namespace {

[[noreturn]] void config_fail(const std::string& path,
                              const std::string& what) {
  throw Error(ErrorCode::kConfigError, path + ": " + what);
}

// Strict object reader: every key must be consumed, unknown keys are
// errors (typos in ablation sweeps must not pass silently).
class Fields {
 public:
  Fields(const ordered_json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) config_fail(path_, "expected an object");
  }

  ~Fields() = default;

  const ordered_json* optional(const std::string& name) {
    seen_.insert(name);
    auto it = j_.find(name);
    return it == j_.end() ? nullptr : &*it;
  }

  const ordered_json& required(const std::string& name) {
    const ordered_json* p = optional(name);
    if (!p) config_fail(path_, "missing required field '" + name + "'");
    return *p;
  }

  template <typename T>
  T get(const std::string& name, T fallback) {
    const ordered_json* p = optional(name);
    if (!p) return fallback;
    return convert<T>(*p, path_ + "." + name);
  }

  template <typename T>
  T get_required(const std::string& name) {
    return convert<T>(required(name), path_ + "." + name);
  }

  void check_no_unknown() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key()))
        config_fail(path_, "unknown field '" + it.key() + "'");
  }

  const std::string& path() const { return path_; }

  template <typename T>
  static T convert(const ordered_json& j, const std::string& path) {
    try {
      return j.get<T>();
    } catch (const ordered_json::exception&) {
      config_fail(path, "has the wrong type");
    }
  }

 private:
  const ordered_json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

Vec3 parse_vec3(const ordered_json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 3)
    config_fail(path, "expected an array of 3 numbers");
  return {Fields::convert<double>(j[0], path + "[0]"),
          Fields::convert<double>(j[1], path + "[1]"),
          Fields::convert<double>(j[2], path + "[2]")};
}

std::pair<double, double> parse_range(const ordered_json& j,
                                      const std::string& path) {
  if (!j.is_array() || j.size() != 2)
    config_fail(path, "expected an array [lo, hi]");
  return {Fields::convert<double>(j[0], path + "[0]"),
          Fields::convert<double>(j[1], path + "[1]")};
}

CameraIntrinsics parse_camera(const ordered_json& j, const std::string& path) {
  Fields f(j, path);
  CameraIntrinsics cam;
  cam.fx = f.get_required<double>("fx");
  cam.fy = f.get_required<double>("fy");
  cam.cx = f.get_required<double>("cx");
  cam.cy = f.get_required<double>("cy");
  cam.width = f.get_required<int>("width");
  cam.height = f.get_required<int>("height");
  f.check_no_unknown();
  return cam;
}

PoseGridSpec parse_pose_grid(const ordered_json& j, const std::string& path) {
  Fields f(j, path);
  PoseGridSpec g;
  g.subdivision_level = f.get<int>("subdivision_level", 2);
  g.in_plane_count = f.get<int>("in_plane_count", 1);
  if (const auto* r = f.optional("in_plane_range_deg")) {
    auto [lo, hi] = parse_range(*r, path + ".in_plane_range_deg");
    g.in_plane_lo_deg = lo;
    g.in_plane_hi_deg = hi;
  }
  g.distance_min = f.get_required<double>("distance_min");
  g.distance_max = f.get_required<double>("distance_max");
  g.scale_levels = f.get<int>("scale_levels", 1);
  g.hemisphere_only = f.get<bool>("hemisphere_only", false);
  f.check_no_unknown();
  return g;
}

PhongMaterial parse_material(const ordered_json& j, const std::string& path) {
  Fields f(j, path);
  PhongMaterial m;
  if (const auto* v = f.optional("ambient"))
    m.k_ambient = parse_vec3(*v, path + ".ambient");
  if (const auto* v = f.optional("diffuse"))
    m.k_diffuse = parse_vec3(*v, path + ".diffuse");
  if (const auto* v = f.optional("specular"))
    m.k_specular = parse_vec3(*v, path + ".specular");
  m.shininess = f.get<double>("shininess", m.shininess);
  f.check_no_unknown();
  return m;
}

LightSpec parse_light(const ordered_json& j, const std::string& path) {
  Fields f(j, path);
  LightSpec l;
  if (const auto* v = f.optional("direction"))
    l.direction = normalized(parse_vec3(*v, path + ".direction"));
  if (const auto* v = f.optional("color"))
    l.color = parse_vec3(*v, path + ".color");
  if (const auto* v = f.optional("ambient_color"))
    l.ambient_color = parse_vec3(*v, path + ".ambient_color");
  f.check_no_unknown();
  return l;
}

JitterSpec parse_jitter(const ordered_json& j, const std::string& path) {
  Fields f(j, path);
  JitterSpec spec;
  spec.material_jitter = f.get<double>("material_jitter", 0.0);
  spec.light_color_jitter = f.get<double>("light_color_jitter", 0.0);
  spec.light_cone_angle_deg = f.get<double>("light_cone_angle_deg", 0.0);
  f.check_no_unknown();
  return spec;
}

ComposeSpec parse_compose(const ordered_json& j, const std::string& path) {
  Fields f(j, path);
  ComposeSpec c;
  if (const auto* r = f.optional("noise_sigma_range")) {
    auto [lo, hi] = parse_range(*r, path + ".noise_sigma_range");
    c.noise_sigma_lo = lo;
    c.noise_sigma_hi = hi;
  }
  if (const auto* r = f.optional("blur_sigma_range")) {
    auto [lo, hi] = parse_range(*r, path + ".blur_sigma_range");
    c.blur_sigma_lo = lo;
    c.blur_sigma_hi = hi;
  }
  std::string placement = f.get<std::string>("placement", "full_inside");
  if (placement == "full_inside")
    c.placement = PlacementMode::kFullInside;
  else if (placement == "min_visibility")
    c.placement = PlacementMode::kMinVisibility;
  else
    config_fail(path + ".placement",
                "must be 'full_inside' or 'min_visibility'");
  c.min_visibility = f.get<double>("min_visibility", c.min_visibility);
  c.channel_swap = f.get<bool>("channel_swap", false);
  c.flips = f.get<bool>("flips", false);
  c.rotations = f.get<std::vector<int>>("rotations", {});
  f.check_no_unknown();
  return c;
}

PrimitiveParams parse_primitive_params(Fields& f, const std::string& path) {
  PrimitiveParams p;
  p.size = f.get<double>("size", p.size);
  p.radius = f.get<double>("radius", p.radius);
  p.height = f.get<double>("height", p.height);
  p.major_radius = f.get<double>("major_radius", p.major_radius);
  p.segments = f.get<int>("segments", p.segments);
  p.rings = f.get<int>("rings", p.rings);
  p.subdivisions = f.get<int>("subdivisions", p.subdivisions);
  (void)path;
  return p;
}

ObjectSpec parse_object(const ordered_json& j, const std::string& path) {
  Fields f(j, path);
  ObjectSpec o;
  o.class_id = f.get_required<int>("class_id");
  o.class_name = f.get_required<std::string>("class_name");
  const auto* mesh = f.optional("mesh");
  const auto* prim = f.optional("primitive");
  if ((mesh == nullptr) == (prim == nullptr))
    config_fail(path, "exactly one of 'mesh' or 'primitive' must be set");
  if (mesh) o.mesh_path = Fields::convert<std::string>(*mesh, path + ".mesh");
  if (prim) {
    Fields pf(*prim, path + ".primitive");
    std::string kind = pf.get_required<std::string>("kind");
    try {
      o.primitive = primitive_kind_from_string(kind);
    } catch (const Error& e) {
      config_fail(path + ".primitive.kind", e.what());
    }
    o.primitive_params = parse_primitive_params(pf, path + ".primitive");
    pf.check_no_unknown();
  }
  if (const auto* c = f.optional("color"))
    o.color = parse_vec3(*c, path + ".color");
  f.check_no_unknown();
  return o;
}

BackgroundsConfig parse_backgrounds(const ordered_json& j,
                                    const std::string& path) {
  Fields f(j, path);
  BackgroundsConfig b;
  std::string mode = f.get<std::string>("mode", "procedural");
  if (mode == "directory")
    b.mode = BackgroundMode::kDirectory;
  else if (mode == "procedural")
    b.mode = BackgroundMode::kProcedural;
  else if (mode == "constant_color")
    b.mode = BackgroundMode::kConstantColor;
  else
    config_fail(path + ".mode",
                "must be 'directory', 'procedural' or 'constant_color'");
  b.directory = f.get<std::string>("directory", "");
  if (const auto* p = f.optional("procedural")) {
    Fields pf(*p, path + ".procedural");
    b.procedural.count = pf.get<int>("count", b.procedural.count);
    b.procedural.width = pf.get<int>("width", 0);
    b.procedural.height = pf.get<int>("height", 0);
    b.procedural.polygon_count =
        pf.get<int>("polygon_count", b.procedural.polygon_count);
    b.procedural.noise_cell = pf.get<int>("noise_cell", b.procedural.noise_cell);
    b.procedural.noise_amplitude =
        pf.get<double>("noise_amplitude", b.procedural.noise_amplitude);
    b.procedural.seed = pf.get<uint64_t>("seed", b.procedural.seed);
    pf.check_no_unknown();
  }
  if (b.mode == BackgroundMode::kDirectory && b.directory.empty())
    config_fail(path + ".directory", "required when mode is 'directory'");
  f.check_no_unknown();
  return b;
}

BackgroundMode parse_domain_background(const ordered_json& j,
                                       const std::string& path) {
  std::string mode = Fields::convert<std::string>(j, path);
  if (mode == "cluttered") return BackgroundMode::kProcedural;
  if (mode == "constant_color") return BackgroundMode::kConstantColor;
  config_fail(path, "must be 'cluttered' or 'constant_color'");
}

DomainSpec parse_domain(const ordered_json& j, const std::string& path,
                        const std::string& name) {
  Fields f(j, path);
  DomainSpec d;
  d.name = name;
  d.light_jitter = f.get<bool>("light_jitter", true);
  if (const auto* r = f.optional("noise_sigma_range")) {
    auto [lo, hi] = parse_range(*r, path + ".noise_sigma_range");
    d.noise_sigma_lo = lo;
    d.noise_sigma_hi = hi;
  }
  if (const auto* r = f.optional("blur_sigma_range")) {
    auto [lo, hi] = parse_range(*r, path + ".blur_sigma_range");
    d.blur_sigma_lo = lo;
    d.blur_sigma_hi = hi;
  }
  if (const auto* b = f.optional("background"))
    d.background = parse_domain_background(*b, path + ".background");
  d.channel_swap = f.get<bool>("channel_swap", false);
  f.check_no_unknown();
  return d;
}

TrainConfig parse_train(const ordered_json& j, const std::string& path) {
  Fields f(j, path);
  TrainConfig t;
  t.learning_rate = f.get<double>("learning_rate", t.learning_rate);
  t.momentum = f.get<double>("momentum", t.momentum);
  t.steps = f.get<int>("steps", t.steps);
  t.batch_size = f.get<int>("batch_size", t.batch_size);
  f.check_no_unknown();
  return t;
}

std::vector<FreezeSchedule> parse_schedules(const ordered_json& j,
                                            const std::string& path) {
  if (!j.is_array() || j.empty())
    config_fail(path, "expected a non-empty array of schedules");
  std::vector<FreezeSchedule> out;
  for (size_t i = 0; i < j.size(); ++i) {
    std::string p = path + "[" + std::to_string(i) + "]";
    Fields f(j[i], p);
    FreezeSchedule s;
    s.frozen_prefix_layers = f.get_required<int>("frozen_prefix_layers");
    if (const auto* u = f.optional("unfreeze_at_step"))
      s.unfreeze_at_step = Fields::convert<int>(*u, p + ".unfreeze_at_step");
    f.check_no_unknown();
    out.push_back(s);
  }
  return out;
}

}  // namespace

Mesh ObjectSpec::build_mesh() const {
  Mesh mesh = primitive ? make_primitive_mesh(*primitive, primitive_params)
                        : load_mesh(mesh_path);
  if (color) set_uniform_color(mesh, *color);
  return mesh;
}

std::string FreezeSchedule::label() const {
  std::string s = "frozen_prefix=" + std::to_string(frozen_prefix_layers);
  if (unfreeze_at_step) s += ",unfreeze_at=" + std::to_string(*unfreeze_at_step);
  return s;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0))
    throw Error(ErrorCode::kConfigError,
                "experiment.train.learning_rate must be > 0");
  if (momentum < 0 || momentum >= 1)
    throw Error(ErrorCode::kConfigError,
                "experiment.train.momentum must be in [0,1)");
  if (steps < 1 || batch_size < 1)
    throw Error(ErrorCode::kConfigError,
                "experiment.train.steps and batch_size must be >= 1");
}

void GenerationConfig::validate() const {
  if (objects.empty())
    throw Error(ErrorCode::kConfigError, "objects: at least one is required");
  std::set<int> ids;
  for (size_t i = 0; i < objects.size(); ++i) {
    if (!ids.insert(objects[i].class_id).second)
      throw Error(ErrorCode::kConfigError,
                  "objects[" + std::to_string(i) + "].class_id duplicated");
  }
  try {
    camera.validate();
    pose_grid.validate();
    material.validate();
    light.validate();
    jitter.validate();
    compose.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kConfigError, e.what());
  }
  if (sample_count < 1)
    throw Error(ErrorCode::kConfigError,
                "generation.sample_count must be >= 1");
}

void ExperimentConfig::validate() const {
  base.validate();
  train.validate();
  if (schedules.empty())
    throw Error(ErrorCode::kConfigError, "experiment.schedules is empty");
  if (seeds.empty())
    throw Error(ErrorCode::kConfigError, "experiment.seeds is empty");
  if (train_crops_per_domain < 1 || test_crops < 1 || pair_count < 1)
    throw Error(ErrorCode::kConfigError, "experiment crop counts must be >= 1");
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kFileNotFound, "no such config: " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return from_json_text(text, path);
}

Config Config::from_json_text(const std::string& text,
                              const std::string& origin) {
  Config cfg;
  cfg.origin_ = origin;
  try {
    cfg.raw_ = ordered_json::parse(text);
  } catch (const ordered_json::parse_error& e) {
    throw Error(ErrorCode::kConfigError, origin + ": " + e.what());
  }
  cfg.parse_and_validate();
  return cfg;
}

void Config::parse_and_validate() {
  Fields root(raw_, "config");
  int version = root.get_required<int>("schema_version");
  if (version != kConfigSchemaVersion)
    config_fail("config.schema_version",
                "unsupported version " + std::to_string(version));

  GenerationConfig gen;
  gen.camera = parse_camera(root.required("camera"), "config.camera");
  const auto& objs = root.required("objects");
  if (!objs.is_array()) config_fail("config.objects", "expected an array");
  for (size_t i = 0; i < objs.size(); ++i)
    gen.objects.push_back(
        parse_object(objs[i], "config.objects[" + std::to_string(i) + "]"));
  gen.pose_grid =
      parse_pose_grid(root.required("pose_grid"), "config.pose_grid");
  if (const auto* r = root.optional("render")) {
    Fields rf(*r, "config.render");
    if (const auto* m = rf.optional("material"))
      gen.material = parse_material(*m, "config.render.material");
    if (const auto* l = rf.optional("light"))
      gen.light = parse_light(*l, "config.render.light");
    if (const auto* j = rf.optional("jitter"))
      gen.jitter = parse_jitter(*j, "config.render.jitter");
    rf.check_no_unknown();
  }
  if (const auto* c = root.optional("compose"))
    gen.compose = parse_compose(*c, "config.compose");
  if (const auto* b = root.optional("backgrounds"))
    gen.backgrounds = parse_backgrounds(*b, "config.backgrounds");
  if (const auto* g = root.optional("generation")) {
    Fields gf(*g, "config.generation");
    gen.sample_count = gf.get<long>("sample_count", 1);
    gen.master_seed = gf.get<uint64_t>("master_seed", 0);
    gen.output_dir = gf.get<std::string>("output_dir", "");
    gen.emit_masks = gf.get<bool>("emit_masks", true);
    gen.exhaustive = gf.get<bool>("exhaustive", false);
    gf.check_no_unknown();
  }
  // Procedural backgrounds default to a square crop-safe size.
  if (gen.backgrounds.procedural.width == 0 ||
      gen.backgrounds.procedural.height == 0) {
    int side = std::max(gen.camera.width, gen.camera.height) + 64;
    gen.backgrounds.procedural.width = side;
    gen.backgrounds.procedural.height = side;
  }

  std::optional<ExperimentConfig> exp;
  if (const auto* e = root.optional("experiment")) {
    Fields ef(*e, "config.experiment");
    ExperimentConfig x;
    x.base = gen;
    const auto& domains = ef.required("domains");
    Fields df(domains, "config.experiment.domains");
    x.real_proxy = parse_domain(df.required("real_proxy"),
                                "config.experiment.domains.real_proxy",
                                "real_proxy");
    x.plain_synthetic = parse_domain(
        df.required("plain_synthetic"),
        "config.experiment.domains.plain_synthetic", "plain_synthetic");
    df.check_no_unknown();
    if (const auto* n = ef.optional("net")) {
      Fields nf(*n, "config.experiment.net");
      x.net.conv1_out = nf.get<int>("conv1_out", x.net.conv1_out);
      x.net.conv2_out = nf.get<int>("conv2_out", x.net.conv2_out);
      nf.check_no_unknown();
    }
    if (const auto* t = ef.optional("train"))
      x.train = parse_train(*t, "config.experiment.train");
    x.schedules = parse_schedules(ef.required("schedules"),
                                  "config.experiment.schedules");
    x.seeds = ef.get_required<std::vector<uint64_t>>("seeds");
    x.train_crops_per_domain =
        ef.get<long>("train_crops_per_domain", x.train_crops_per_domain);
    x.test_crops = ef.get<long>("test_crops", x.test_crops);
    x.pair_count = ef.get<long>("pair_count", x.pair_count);
    ef.check_no_unknown();
    exp = std::move(x);
  }
  root.check_no_unknown();

  gen.validate();
  if (exp) exp->validate();
  generation_ = std::move(gen);
  experiment_ = std::move(exp);
}

const ExperimentConfig& Config::experiment() const {
  if (!experiment_)
    throw Error(ErrorCode::kConfigError,
                origin_ + ": config has no 'experiment' section");
  return *experiment_;
}

void Config::override_value(const std::string& dotted_key,
                            const std::string& json_value) {
  ordered_json value;
  try {
    value = ordered_json::parse(json_value);
  } catch (const ordered_json::parse_error&) {
    // Bare words are treated as strings so --set output_dir=out works.
    value = json_value;
  }
  ordered_json* node = &raw_;
  size_t start = 0;
  while (true) {
    size_t dot = dotted_key.find('.', start);
    std::string key = dotted_key.substr(
        start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty())
      throw Error(ErrorCode::kConfigError,
                  "override key '" + dotted_key + "' is malformed");
    if (dot == std::string::npos) {
      (*node)[key] = value;
      break;
    }
    if (!node->contains(key)) (*node)[key] = ordered_json::object();
    node = &(*node)[key];
    if (!node->is_object())
      throw Error(ErrorCode::kConfigError,
                  "override key '" + dotted_key +
                      "' walks through a non-object");
    start = dot + 1;
  }
  parse_and_validate();
}

void Config::set_master_seed(uint64_t seed) {
  raw_["generation"]["master_seed"] = seed;
  parse_and_validate();
}

void Config::set_output_dir(const std::string& dir) {
  raw_["generation"]["output_dir"] = dir;
  parse_and_validate();
}

}  // namespace synthdet
