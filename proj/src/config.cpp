#include "lamestab/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <yaml-cpp/yaml.h>

#include "lamestab/errors.hpp"

namespace lamestab {
namespace {

constexpr CheckKind kAllChecks[] = {
    CheckKind::kIntegralEstimate, CheckKind::kInterpolation,
    CheckKind::kThreeSphere,      CheckKind::kDoubling,
    CheckKind::kPropagationOfSmallness, CheckKind::kStrainLowerBound,
    CheckKind::kHolderStability,  CheckKind::kReconstruction,
};

int line_of(const YAML::Node& node) {
  if (!node.IsDefined()) return -1;
  const auto mark = node.Mark();
  return mark.line >= 0 ? mark.line + 1 : -1;
}

std::string join_path(const std::string& parent, const std::string& key) {
  return parent.empty() ? key : parent + "." + key;
}

// A mapping node together with its dotted path, for diagnostics.
class Section {
 public:
  Section(YAML::Node node, std::string path) : node_(std::move(node)), path_(std::move(path)) {
    if (!node_.IsMap())
      throw ConfigError(fmt::format("'{}' must be a mapping", path_.empty() ? "<root>" : path_),
                        line_of(node_), path_);
  }

  void allow(std::initializer_list<std::string_view> keys) const {
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (std::find(keys.begin(), keys.end(), key) == keys.end())
        throw ConfigError(fmt::format("unknown key '{}' (expected one of: {})", join_path(path_, key),
                                      fmt::join(keys, ", ")),
                          line_of(kv.first), join_path(path_, key));
    }
  }

  bool has(const std::string& key) const { return static_cast<bool>(node_[key]); }
  YAML::Node raw(const std::string& key) const { return node_[key]; }
  std::string path(const std::string& key) const { return join_path(path_, key); }
  int line() const { return line_of(node_); }

  Section sub(const std::string& key) const { return Section(node_[key], path(key)); }

  template <typename T>
  T get(const std::string& key, const T& fallback) const {
    const auto n = node_[key];
    if (!n) return fallback;
    return convert<T>(n, path(key));
  }

  template <typename T>
  T require(const std::string& key) const {
    const auto n = node_[key];
    if (!n) throw ConfigError(fmt::format("missing required key '{}'", path(key)), line(), path(key));
    return convert<T>(n, path(key));
  }

  template <typename T>
  static T convert(const YAML::Node& n, const std::string& path) {
    try {
      return n.as<T>();
    } catch (const YAML::Exception&) {
      throw ConfigError(fmt::format("'{}' has the wrong type", path), line_of(n), path);
    }
  }

 private:
  YAML::Node node_;
  std::string path_;
};

void require_positive(double v, const Section& s, const std::string& key) {
  if (!(v > 0.0) || !std::isfinite(v))
    throw ConfigError(fmt::format("'{}' must be positive and finite", s.path(key)),
                      line_of(s.raw(key)), s.path(key));
}

Vec2 parse_point(const YAML::Node& n, const std::string& path) {
  if (!n) throw ConfigError(fmt::format("missing required key '{}'", path), -1, path);
  const auto v = Section::convert<std::vector<double>>(n, path);
  if (v.size() != 2) throw ConfigError(fmt::format("'{}' must be a pair [x, y]", path), line_of(n), path);
  return Vec2(v[0], v[1]);
}

std::vector<double> positive_list(const Section& s, const std::string& key,
                                  const std::vector<double>& fallback, bool ascending) {
  if (!s.has(key)) return fallback;
  auto v = s.get<std::vector<double>>(key, {});
  for (double x : v)
    if (!(x > 0.0) || !std::isfinite(x))
      throw ConfigError(fmt::format("'{}' entries must be positive", s.path(key)), line_of(s.raw(key)),
                        s.path(key));
  if (ascending && !std::is_sorted(v.begin(), v.end()))
    throw ConfigError(fmt::format("'{}' must be sorted ascending", s.path(key)), line_of(s.raw(key)),
                      s.path(key));
  return v;
}

DomainSpec parse_domain(const Section& s) {
  s.allow({"kind", "scale", "a", "b", "corner_radius"});
  const auto kind = s.get<std::string>("kind", "unit_disk");
  const double scale = s.get<double>("scale", 1.0);
  require_positive(scale, s, "scale");
  if (kind == "unit_disk") return DomainSpec::unit_disk(scale);
  if (kind == "ellipse") return DomainSpec::ellipse(s.require<double>("a"), s.require<double>("b"), scale);
  if (kind == "smoothed_square") return DomainSpec::smoothed_square(s.require<double>("corner_radius"), scale);
  throw ConfigError(
      fmt::format("'{}' is '{}' (expected unit_disk, ellipse or smoothed_square)", s.path("kind"), kind),
      line_of(s.raw("kind")), s.path("kind"));
}

PhantomSpec parse_phantom(const Section& s, const PhantomSpec& fallback) {
  s.allow({"background", "mollification_width", "floor", "inclusions"});
  PhantomSpec p = fallback;
  p.background = s.get<double>("background", p.background);
  p.mollification_width = s.get<double>("mollification_width", p.mollification_width);
  if (p.mollification_width < 0.0)
    throw ConfigError(fmt::format("'{}' must be nonnegative", s.path("mollification_width")),
                      line_of(s.raw("mollification_width")), s.path("mollification_width"));
  if (s.has("floor")) p.floor = s.get<double>("floor", 0.0);
  if (s.has("inclusions")) {
    const auto list = s.raw("inclusions");
    if (!list.IsSequence())
      throw ConfigError(fmt::format("'{}' must be a list", s.path("inclusions")), line_of(list),
                        s.path("inclusions"));
    p.inclusions.clear();
    for (std::size_t i = 0; i < list.size(); ++i) {
      Section inc(list[i], fmt::format("{}[{}]", s.path("inclusions"), i));
      inc.allow({"center", "radius", "contrast"});
      Inclusion c;
      c.center = parse_point(inc.raw("center"), inc.path("center"));
      c.radius = inc.require<double>("radius");
      require_positive(c.radius, inc, "radius");
      c.contrast = inc.require<double>("contrast");
      p.inclusions.push_back(c);
    }
  }
  return p;
}

LameSpec parse_lame(const Section& s) {
  s.allow({"alpha0", "beta0", "M", "degree", "lambda", "mu", "perturbation"});
  LameSpec l;
  l.alpha0 = s.get<double>("alpha0", l.alpha0);
  l.beta0 = s.get<double>("beta0", l.beta0);
  l.M = s.get<double>("M", l.M);
  require_positive(l.alpha0, s, "alpha0");
  require_positive(l.beta0, s, "beta0");
  require_positive(l.M, s, "M");
  l.degree = s.get<int>("degree", l.degree);
  if (l.degree != 1 && l.degree != 2)
    throw ConfigError(fmt::format("'{}' must be 1 or 2", s.path("degree")), line_of(s.raw("degree")),
                      s.path("degree"));
  if (s.has("lambda")) l.lambda = parse_phantom(s.sub("lambda"), l.lambda);
  if (s.has("mu")) l.mu = parse_phantom(s.sub("mu"), l.mu);
  if (s.has("perturbation")) l.perturbation = parse_phantom(s.sub("perturbation"), l.perturbation);
  return l;
}

Mat2 parse_matrix(const YAML::Node& n, const std::string& path) {
  if (!n) throw ConfigError(fmt::format("missing required key '{}'", path), -1, path);
  const auto rows = Section::convert<std::vector<std::vector<double>>>(n, path);
  if (rows.size() != 2 || rows[0].size() != 2 || rows[1].size() != 2)
    throw ConfigError(fmt::format("'{}' must be a 2x2 matrix [[a, b], [c, d]]", path), line_of(n), path);
  Mat2 A;
  A << rows[0][0], rows[0][1], rows[1][0], rows[1][1];
  return A;
}

BoundaryDataSpec parse_boundary(const Section& s) {
  s.allow({"affine", "fourier_modes"});
  if (s.has("affine") == s.has("fourier_modes"))
    throw ConfigError("'boundary_g' needs exactly one of 'affine' or 'fourier_modes'",
                      s.line(), "boundary_g");
  BoundaryDataSpec g;
  if (s.has("affine")) {
    g.kind = BoundaryDataSpec::Kind::kAffine;
    const auto a = s.sub("affine");
    a.allow({"A", "b"});
    g.A = parse_matrix(a.raw("A"), a.path("A"));
    if (a.has("b")) g.b = parse_point(a.raw("b"), a.path("b"));
    return g;
  }
  g.kind = BoundaryDataSpec::Kind::kFourierModes;
  g.modes.clear();
  const auto list = s.raw("fourier_modes");
  if (!list.IsSequence() || list.size() == 0)
    throw ConfigError(fmt::format("'{}' must be a nonempty list", s.path("fourier_modes")), line_of(list),
                      s.path("fourier_modes"));
  for (std::size_t i = 0; i < list.size(); ++i) {
    Section m(list[i], fmt::format("{}[{}]", s.path("fourier_modes"), i));
    m.allow({"k", "amp_x", "amp_y", "phase"});
    FourierMode mode;
    mode.k = m.require<int>("k");
    if (mode.k < 0)
      throw ConfigError(fmt::format("'{}' must be nonnegative", m.path("k")), line_of(m.raw("k")), m.path("k"));
    mode.amp_x = m.get<double>("amp_x", 0.0);
    mode.amp_y = m.get<double>("amp_y", 0.0);
    mode.phase = m.get<double>("phase", 0.0);
    g.modes.push_back(mode);
  }
  return g;
}

void parse_three_sphere(const Section& s, ThreeSphereParams& p) {
  s.allow({"radii", "num_centers", "max_center_radius", "constant_factor", "delta_window"});
  p.radii = positive_list(s, "radii", p.radii, true);
  if (p.radii.size() != 3 || !(p.radii[0] < p.radii[1] && p.radii[1] < p.radii[2]))
    throw ConfigError(fmt::format("'{}' must be three increasing radii", s.path("radii")),
                      line_of(s.raw("radii")), s.path("radii"));
  p.num_centers = s.get<int>("num_centers", p.num_centers);
  if (p.num_centers < 1)
    throw ConfigError(fmt::format("'{}' must be at least 1", s.path("num_centers")),
                      line_of(s.raw("num_centers")), s.path("num_centers"));
  p.max_center_radius = s.get<double>("max_center_radius", p.max_center_radius);
  require_positive(p.max_center_radius, s, "max_center_radius");
  p.constant_factor = s.get<double>("constant_factor", p.constant_factor);
  require_positive(p.constant_factor, s, "constant_factor");
  p.delta_window = s.get<double>("delta_window", p.delta_window);
  if (!(p.delta_window >= 0.0 && p.delta_window < 0.5))
    throw ConfigError(fmt::format("'{}' must lie in [0, 0.5)", s.path("delta_window")),
                      line_of(s.raw("delta_window")), s.path("delta_window"));
}

void parse_doubling(const Section& s, DoublingParams& p) {
  s.allow({"center", "radii", "mode", "d"});
  if (s.has("center")) p.center = parse_point(s.raw("center"), s.path("center"));
  p.radii = positive_list(s, "radii", p.radii, true);
  if (p.radii.size() < 2)
    throw ConfigError(fmt::format("'{}' needs at least two radii", s.path("radii")), line_of(s.raw("radii")),
                      s.path("radii"));
  const auto mode = s.get<std::string>("mode", "strain");
  if (mode == "strain") {
    p.mode = DoublingMode::kStrain;
  } else if (mode == "displacement") {
    p.mode = DoublingMode::kDisplacement;
  } else {
    throw ConfigError(fmt::format("'{}' is '{}' (expected strain or displacement)", s.path("mode"), mode),
                      line_of(s.raw("mode")), s.path("mode"));
  }
  p.d = s.get<double>("d", p.d);
  require_positive(p.d, s, "d");
}

void parse_propagation(const Section& s, PropagationParams& p) {
  s.allow({"rho", "spacing"});
  p.rho = positive_list(s, "rho", p.rho, false);
  if (p.rho.empty())
    throw ConfigError(fmt::format("'{}' must be nonempty", s.path("rho")), line_of(s.raw("rho")), s.path("rho"));
  p.spacing = s.get<double>("spacing", p.spacing);
}

void parse_lower_bound(const Section& s, StrainLowerBoundParams& p) {
  s.allow({"x0", "d", "radii"});
  if (s.has("x0")) p.x0 = parse_point(s.raw("x0"), s.path("x0"));
  p.d = s.get<double>("d", p.d);
  require_positive(p.d, s, "d");
  p.radii = positive_list(s, "radii", p.radii, true);
  if (p.radii.size() < 3)
    throw ConfigError(fmt::format("'{}' needs at least three radii", s.path("radii")), line_of(s.raw("radii")),
                      s.path("radii"));
  if (p.radii.back() > p.d)
    throw ConfigError(fmt::format("'{}' must not exceed '{}'", s.path("radii"), s.path("d")),
                      line_of(s.raw("radii")), s.path("radii"));
}

void parse_reconstruction(const Section& s, ReconstructionParams& p) {
  s.allow({"noise_levels", "repeats", "reg_weight", "d"});
  if (s.has("noise_levels")) {
    p.noise_levels = s.get<std::vector<double>>("noise_levels", {});
    const auto& v = p.noise_levels;
    const bool ok = v.size() >= 2 && v.front() == 0.0 && std::is_sorted(v.begin(), v.end()) &&
                    std::adjacent_find(v.begin(), v.end()) == v.end();
    if (!ok)
      throw ConfigError(
          fmt::format("'{}' must start at 0 and increase strictly", s.path("noise_levels")),
          line_of(s.raw("noise_levels")), s.path("noise_levels"));
  }
  p.repeats = s.get<int>("repeats", p.repeats);
  if (p.repeats < 1)
    throw ConfigError(fmt::format("'{}' must be at least 1", s.path("repeats")), line_of(s.raw("repeats")),
                      s.path("repeats"));
  if (s.has("reg_weight")) {
    p.reg_weight = s.get<double>("reg_weight", 0.0);
    if (*p.reg_weight < 0.0)
      throw ConfigError(fmt::format("'{}' must be nonnegative", s.path("reg_weight")),
                        line_of(s.raw("reg_weight")), s.path("reg_weight"));
  }
  if (s.has("d")) {
    p.d = s.get<double>("d", 0.0);
    require_positive(*p.d, s, "d");
  }
}

}  // namespace

std::string_view check_name(CheckKind kind) {
  switch (kind) {
    case CheckKind::kIntegralEstimate: return "integral_estimate";
    case CheckKind::kInterpolation: return "interpolation";
    case CheckKind::kThreeSphere: return "three_sphere";
    case CheckKind::kDoubling: return "doubling";
    case CheckKind::kPropagationOfSmallness: return "propagation_of_smallness";
    case CheckKind::kStrainLowerBound: return "strain_lower_bound";
    case CheckKind::kHolderStability: return "holder_stability";
    case CheckKind::kReconstruction: return "reconstruction";
  }
  return "unknown";
}

const std::vector<std::string_view>& valid_check_names() {
  static const std::vector<std::string_view> names = [] {
    std::vector<std::string_view> v;
    for (auto k : kAllChecks) v.push_back(check_name(k));
    return v;
  }();
  return names;
}

CheckKind parse_check_name(const std::string& name, int line) {
  for (auto k : kAllChecks)
    if (check_name(k) == name) return k;
  throw ConfigError(fmt::format("unknown check '{}'; valid checks: {}", name, fmt::join(valid_check_names(), ", ")),
                    line, "checks");
}

PhantomSpec default_perturbation_shape() {
  PhantomSpec p;
  p.background = 0.0;
  p.inclusions = {{Vec2(0.1, 0.05), 0.3, 1.0}};
  p.mollification_width = 0.15;
  return p;
}

BoundaryTrace BoundaryDataSpec::realize(std::shared_ptr<const TriMesh> mesh) const {
  if (kind == Kind::kAffine) return trace_from_closure(std::move(mesh), affine_map(A, b));
  return trace_from_modes(std::move(mesh), modes);
}

bool ExperimentConfig::wants(CheckKind kind) const {
  return std::find(checks.begin(), checks.end(), kind) != checks.end();
}

bool ExperimentConfig::needs_family() const {
  return wants(CheckKind::kIntegralEstimate) || wants(CheckKind::kInterpolation) ||
         wants(CheckKind::kHolderStability);
}

ElasticityOptions ExperimentConfig::elasticity_options() const {
  ElasticityOptions o;
  o.shear_factor = shear_factor;
  o.solver = solver;
  return o;
}

ExperimentConfig parse_config(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(fmt::format("malformed config: {}", e.msg), e.mark.line >= 0 ? e.mark.line + 1 : -1);
  }
  if (!root || root.IsNull()) throw ConfigError("config is empty");
  Section s(root, "");
  s.allow({"domain", "mesh_h", "solver", "shear_factor", "lame", "boundary_g", "d", "scales", "checks",
           "output_dir", "seed", "three_sphere", "doubling", "propagation_of_smallness",
           "strain_lower_bound", "reconstruction"});

  ExperimentConfig c;
  if (s.has("domain")) c.domain = parse_domain(s.sub("domain"));
  c.mesh_h = s.require<double>("mesh_h");
  require_positive(c.mesh_h, s, "mesh_h");

  const auto solver = s.get<std::string>("solver", "cg");
  if (solver == "cg") {
    c.solver = LinearSolver::kConjugateGradient;
  } else if (solver == "direct") {
    c.solver = LinearSolver::kDirect;
  } else {
    throw ConfigError(fmt::format("'solver' is '{}' (expected cg or direct)", solver), line_of(s.raw("solver")),
                      "solver");
  }
  c.shear_factor = s.get<double>("shear_factor", 1.0);
  if (c.shear_factor != 1.0 && c.shear_factor != 2.0)
    throw ConfigError("'shear_factor' must be 1 or 2", line_of(s.raw("shear_factor")), "shear_factor");

  if (s.has("lame")) c.lame = parse_lame(s.sub("lame"));
  if (s.has("boundary_g")) c.boundary_g = parse_boundary(s.sub("boundary_g"));
  c.d = s.get<double>("d", c.d);
  require_positive(c.d, s, "d");

  if (s.has("scales")) {
    c.scales = s.get<std::vector<double>>("scales", {});
    for (double t : c.scales)
      if (!(t >= 0.0) || !std::isfinite(t))
        throw ConfigError("'scales' entries must be nonnegative", line_of(s.raw("scales")), "scales");
  }

  if (s.has("checks")) {
    const auto list = s.raw("checks");
    if (!list.IsSequence()) throw ConfigError("'checks' must be a list", line_of(list), "checks");
    for (const auto& item : list) {
      const auto kind = parse_check_name(Section::convert<std::string>(item, "checks"), line_of(item));
      if (c.wants(kind))
        throw ConfigError(fmt::format("check '{}' listed twice", check_name(kind)), line_of(item), "checks");
      c.checks.push_back(kind);
    }
  }

  c.output_dir = s.get<std::string>("output_dir", "");
  c.seed = s.get<std::uint64_t>("seed", 0);

  if (s.has("three_sphere")) parse_three_sphere(s.sub("three_sphere"), c.three_sphere);
  if (s.has("doubling")) parse_doubling(s.sub("doubling"), c.doubling);
  if (s.has("propagation_of_smallness")) parse_propagation(s.sub("propagation_of_smallness"), c.propagation);
  if (s.has("strain_lower_bound")) parse_lower_bound(s.sub("strain_lower_bound"), c.strain_lower_bound);
  if (s.has("reconstruction")) parse_reconstruction(s.sub("reconstruction"), c.reconstruction);

  validate_config(c);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot read config '{}'", path));
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

void validate_config(const ExperimentConfig& c) {
  if (c.needs_family()) {
    const auto positive = std::count_if(c.scales.begin(), c.scales.end(), [](double t) { return t > 0.0; });
    if (positive == 0)
      throw ConfigError("'scales' needs at least one positive scale for the perturbation-family checks", -1,
                        "scales");
  }
  if (c.wants(CheckKind::kHolderStability) && c.scales.size() < 3)
    throw ConfigError("'scales' needs at least three entries for holder_stability", -1, "scales");
}

std::uint64_t derive_seed(std::uint64_t seed, SeedStream stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  std::mt19937_64 gen(seq);
  return gen();
}

}  // namespace lamestab
