#include "metamorph/config.hpp"

#include "metamorph/uq.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace metamorph {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& key, const std::string& what) {
  throw InputError("config: key '" + key + "': " + what);
}

std::string join(const std::string& prefix, const std::string& key) { return prefix.empty() ? key : prefix + "." + key; }

/// Typed access with the dotted key path in every error message.
class Node {
 public:
  Node(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) bad(path_.empty() ? "<root>" : path_, "expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }
  std::string key(const std::string& k) const { return join(path_, k); }

  Node object(const std::string& k) const {
    static const json empty = json::object();
    return has(k) ? Node(j_.at(k), key(k)) : Node(empty, key(k));
  }
  const json& raw(const std::string& k) const { return j_.at(k); }

  double number(const std::string& k, double fallback) const {
    if (!has(k)) return fallback;
    const json& v = j_.at(k);
    if (!v.is_number()) bad(key(k), "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) bad(key(k), "must be finite");
    return x;
  }
  double positive(const std::string& k, double fallback) const {
    const double x = number(k, fallback);
    if (!(x > 0.0)) bad(key(k), "must be > 0");
    return x;
  }
  long long integer(const std::string& k, long long fallback) const {
    if (!has(k)) return fallback;
    const json& v = j_.at(k);
    if (!v.is_number_integer()) bad(key(k), "expected an integer");
    return v.get<long long>();
  }
  std::size_t count(const std::string& k, std::size_t fallback, std::size_t minimum = 0) const {
    const long long x = integer(k, static_cast<long long>(fallback));
    if (x < static_cast<long long>(minimum)) bad(key(k), "must be >= " + std::to_string(minimum));
    return static_cast<std::size_t>(x);
  }
  std::uint64_t seed(const std::string& k, std::uint64_t fallback) const {
    if (!has(k)) return fallback;
    const json& v = j_.at(k);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
      bad(key(k), "expected a non-negative integer");
    return v.get<std::uint64_t>();
  }
  bool boolean(const std::string& k, bool fallback) const {
    if (!has(k)) return fallback;
    if (!j_.at(k).is_boolean()) bad(key(k), "expected true or false");
    return j_.at(k).get<bool>();
  }
  std::string string(const std::string& k, const std::string& fallback) const {
    if (!has(k)) return fallback;
    if (!j_.at(k).is_string()) bad(key(k), "expected a string");
    return j_.at(k).get<std::string>();
  }
  std::vector<double> numbers(const std::string& k) const {
    std::vector<double> out;
    if (!has(k)) return out;
    const json& v = j_.at(k);
    if (!v.is_array()) bad(key(k), "expected an array of numbers");
    for (const auto& e : v) {
      if (!e.is_number()) bad(key(k), "expected an array of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }
  Points points(const std::string& k, int dim = -1) const {
    Points out;
    if (!has(k)) return out;
    const json& v = j_.at(k);
    if (!v.is_array()) bad(key(k), "expected an array of points");
    for (const auto& p : v) {
      if (!p.is_array() || p.empty() || p.size() > 2) bad(key(k), "each point must be an array of 1 or 2 numbers");
      Vec x(static_cast<int>(p.size()));
      for (std::size_t i = 0; i < p.size(); ++i) {
        if (!p[i].is_number()) bad(key(k), "point coordinates must be numbers");
        x(static_cast<int>(i)) = p[i].get<double>();
      }
      if (!x.allFinite()) bad(key(k), "point coordinates must be finite");
      if (dim > 0 && x.size() != dim) bad(key(k), "points must have dimension " + std::to_string(dim));
      if (!out.empty() && x.size() != out.front().size()) bad(key(k), "points have mixed dimensions");
      out.push_back(x);
    }
    return out;
  }

 private:
  const json& j_;
  std::string path_;
};

double periodic_distance_sq(const Vec& x, const Vec& c, double length) {
  double s = 0.0;
  for (int i = 0; i < x.size(); ++i) {
    double d = std::fmod(x(i) - c(i), length);
    if (d > 0.5 * length) d -= length;
    if (d < -0.5 * length) d += length;
    s += d * d;
  }
  return s;
}

/// Image data: a number (constant), {"values": [...]}, {"file": path} or
/// {"gaussian": {center, width, amplitude, offset}}.
std::vector<double> grid_values(const json& spec, const std::string& key, const Domain& domain,
                                const std::filesystem::path& base_dir, std::string& file_bytes) {
  if (spec.is_number()) return std::vector<double>(domain.size(), spec.get<double>());
  const Node node(spec, key);
  int forms = node.has("values") + node.has("file") + node.has("gaussian");
  if (forms != 1) bad(key, "expected exactly one of 'values', 'file' or 'gaussian'");
  if (node.has("values")) {
    auto v = node.numbers("values");
    if (v.size() != domain.size())
      bad(node.key("values"), "expected " + std::to_string(domain.size()) + " samples, got " + std::to_string(v.size()));
    return v;
  }
  if (node.has("file")) {
    std::filesystem::path p = node.string("file", "");
    if (p.is_relative()) p = base_dir / p;
    ScalarField f;
    try {
      f = read_raw_grid(p);
    } catch (const InputError& e) {
      bad(node.key("file"), e.what());
    }
    if (!(f.domain() == domain)) bad(node.key("file"), "grid shape does not match 'domain'");
    std::ifstream in(p, std::ios::binary);
    file_bytes += std::string(std::istreambuf_iterator<char>(in), {});
    return f.values();
  }
  const Node g = node.object("gaussian");
  const Points c = g.points("center", domain.dim);
  if (c.size() != 1) bad(g.key("center"), "expected one point, e.g. [[3.14, 3.14]]");
  const double width = g.positive("width", 0.5);
  const double amplitude = g.number("amplitude", 1.0);
  const double offset = g.number("offset", 0.0);
  std::vector<double> v(domain.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    v[i] = offset + amplitude * std::exp(-periodic_distance_sq(domain.node(i), c[0], domain.length) / (2 * width * width));
  return v;
}

}  // namespace

std::string structure_name(Structure s) { return s == Structure::landmark ? "landmark" : "image"; }

RunConfig parse_config(const json& document, const std::filesystem::path& base_dir) {
  const Node root(document, "");
  RunConfig c;
  c.document = document;
  std::string file_bytes;

  const std::string structure = root.string("structure", "");
  if (structure == "landmark")
    c.structure = Structure::landmark;
  else if (structure == "image")
    c.structure = Structure::image;
  else
    bad("structure", "expected \"landmark\" or \"image\"");

  const Node init = root.object("initial");
  const Node target = root.object("target");

  if (c.structure == Structure::image) {
    const Node dom = root.object("domain");
    const long long dim = dom.integer("dim", 1);
    if (dim != 1 && dim != 2) bad(dom.key("dim"), "must be 1 or 2");
    const long long points = dom.integer("points", 64);
    if (points < 8) bad(dom.key("points"), "must be >= 8");
    const double length = dom.positive("length", two_pi);
    c.domain = Domain::grid(static_cast<int>(dim), static_cast<int>(points), length);
  }

  const Node lag = root.object("lagrangian");
  c.spec.inertia.alpha = lag.number("alpha", 1.0);
  if (c.spec.inertia.alpha < 0.0) bad(lag.key("alpha"), "must be >= 0");
  const long long power = lag.integer("s", 1);
  if (power != 1 && power != 2) bad(lag.key("s"), "must be 1 or 2");
  c.spec.inertia.power = static_cast<int>(power);
  c.spec.kernel.length_scale = lag.positive("lambda", 1.0);
  c.spec.kernel.amplitude = lag.positive("c", 1.0);
  c.spec.sigma_m_sq = lag.positive("sigma_m_sq", 0.5);
  c.spec.potential_weight = lag.number("potential_weight", 0.0);
  if (c.spec.potential_weight < 0.0) bad(lag.key("potential_weight"), "must be >= 0");

  if (c.structure == Structure::landmark) {
    c.q0 = init.points("landmarks");
    if (c.q0.empty()) bad(init.key("landmarks"), "at least one landmark is required");
    const int d = static_cast<int>(c.q0.front().size());
    c.domain = Domain::plane(d);
    c.sigma0 = init.has("sigma") ? init.points("sigma", d) : zero_points(d, c.q0.size());
    if (c.sigma0.size() != c.q0.size()) bad(init.key("sigma"), "must have one entry per landmark");
    if (init.has("mu")) {
      const Node mu = init.object("mu");
      PointMomentum m(d, mu.points("points", d), mu.points("weights", d));
      if (m.points.size() != m.weights.size()) bad(mu.key("weights"), "must have one entry per point");
      c.mu0 = m;
    }
    c.q1 = target.points("landmarks", d);
    if (!c.q1.empty() && c.q1.size() != c.q0.size()) bad(target.key("landmarks"), "must match initial.landmarks");
    c.spec.landmark_reference = lag.points("reference", d);
    if (!c.spec.landmark_reference.empty() && c.spec.landmark_reference.size() != c.q0.size())
      bad(lag.key("reference"), "must have one entry per landmark");
  } else {
    if (!init.has("n")) bad(init.key("n"), "initial image is required");
    c.n0 = ScalarField(c.domain, grid_values(init.raw("n"), init.key("n"), c.domain, base_dir, file_bytes));
    c.image_sigma0 = init.has("sigma") ? ScalarDensity(c.domain, grid_values(init.raw("sigma"), init.key("sigma"),
                                                                             c.domain, base_dir, file_bytes))
                                       : ScalarDensity(c.domain);
    if (target.has("n"))
      c.n1 = ScalarField(c.domain, grid_values(target.raw("n"), target.key("n"), c.domain, base_dir, file_bytes));
    if (lag.has("reference"))
      c.spec.image_reference =
          ScalarField(c.domain, grid_values(lag.raw("reference"), lag.key("reference"), c.domain, base_dir, file_bytes));
  }

  const Node noise = root.object("noise");
  c.noise.kind = noise.string("kind", "none");
  const int d = c.domain.dim;
  if (c.noise.kind == "bumps") {
    if (c.structure != Structure::landmark) bad(noise.key("kind"), "'bumps' noise is for landmark runs");
    c.noise.centers = noise.points("centers", d);
    for (double v : noise.numbers("directions")) {
      if (v != std::floor(v) || v < 0 || v >= d) bad(noise.key("directions"), "entries must be axis indices");
      c.noise.directions.push_back(static_cast<int>(v));
    }
    c.noise.amplitudes = noise.numbers("amplitudes");
    c.noise.length_scale = noise.positive("length_scale", 1.0);
    if (c.noise.centers.empty()) bad(noise.key("centers"), "at least one center is required");
    if (c.noise.directions.size() != c.noise.centers.size()) bad(noise.key("directions"), "one entry per center");
    if (c.noise.amplitudes.size() != c.noise.centers.size()) bad(noise.key("amplitudes"), "one entry per center");
    c.noise.J = c.noise.centers.size();
  } else if (c.noise.kind == "constant") {
    c.noise.vectors = noise.points("vectors", d);
    c.noise.J = c.noise.vectors.size();
  } else if (c.noise.kind == "fourier") {
    if (c.structure != Structure::image) bad(noise.key("kind"), "'fourier' noise is for image runs");
    c.noise.J = noise.count("J", 2);
    c.noise.amplitudes = noise.numbers("amplitudes");
    if (c.noise.amplitudes.empty()) c.noise.amplitudes.assign(c.noise.J, 0.1);
    if (c.noise.amplitudes.size() == 1) c.noise.amplitudes.assign(c.noise.J, c.noise.amplitudes.front());
    if (c.noise.amplitudes.size() != c.noise.J) bad(noise.key("amplitudes"), "expected 1 or J entries");
  } else if (c.noise.kind != "none") {
    bad(noise.key("kind"), "expected none, bumps, constant or fourier");
  }
  if (noise.has("J") && noise.count("J", 0) != c.noise.J) bad(noise.key("J"), "does not match the listed modes");

  const std::string scheme = root.string("scheme", c.noise.J > 0 ? "stratonovich_heun" : "deterministic_rk4");
  try {
    c.scheme = parse_scheme(scheme);
  } catch (const InputError&) {
    bad("scheme", "expected deterministic_rk4, stratonovich_heun or ito_euler_maruyama");
  }
  c.dt = root.positive("dt", 1e-2);
  c.horizon = root.positive("horizon", 1.0);
  {
    EnsembleConfig probe;
    probe.dt = c.dt;
    probe.horizon = c.horizon;
    try {
      probe.steps();
    } catch (const InputError&) {
      bad("dt", "must divide 'horizon' into a whole number of steps");
    }
  }
  c.record_every = root.count("record_every", 1, 1);
  c.seed = root.seed("seed", 0);

  const Node m = root.object("match");
  c.match.epsilon = m.positive("epsilon", c.match.epsilon);
  c.match.exact = m.boolean("exact", c.match.exact);
  c.match.max_iters = static_cast<int>(m.count("max_iters", c.match.max_iters, 1));
  c.match.max_outer = static_cast<int>(m.count("max_outer", c.match.max_outer, 1));
  c.match.tolerance = m.positive("tolerance", c.match.tolerance);
  c.match.fd_step = m.positive("fd_step", c.match.fd_step);
  c.match.image_modes = static_cast<int>(m.count("image_modes", c.match.image_modes));

  const Node uq = root.object("uq");
  c.n_samples = uq.count("n_samples", 1024, 1);
  c.probes = uq.points("probes", d);
  c.uq_record_every = uq.count("record_every", 0);

  c.output_dir = root.object("output").string("dir", "out");

  try {
    c.spec.validate();
  } catch (const InputError& e) {
    bad("lagrangian", e.what());
  }
  c.hash = sha256_hex(document.dump() + file_bytes);
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("config: cannot open '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError("config: '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return parse_config(doc, path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

NoiseBasis RunConfig::noise_basis() const {
  if (noise.kind == "bumps") return NoiseBasis::gaussian_bumps(noise.centers, noise.directions, noise.amplitudes, noise.length_scale);
  if (noise.kind == "constant")
    return structure == Structure::landmark ? NoiseBasis::constant(noise.vectors) : NoiseBasis::constant(domain, noise.vectors);
  if (noise.kind == "fourier") return NoiseBasis::fourier(domain, noise.J, noise.amplitudes);
  return {};
}

LandmarkState RunConfig::landmark_state() const {
  if (structure != Structure::landmark) throw InputError("config: not a landmark run");
  return mu0 ? LandmarkState::from_parts(0.0, *mu0, sigma0, q0) : LandmarkState::zero_level(sigma0, q0);
}

ImageState RunConfig::image_state() const {
  if (structure != Structure::image) throw InputError("config: not an image run");
  return ImageState::zero_level(*image_sigma0, *n0);
}

// ---- file formats ----------------------------------------------------------------

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

void write_json(const std::filesystem::path& path, const json& value) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << value.dump(2) << '\n';
  if (!out) throw InputError("cannot write '" + path.string() + "'");
}

void write_raw_grid(const std::filesystem::path& path, const Domain& domain, const std::vector<double>& values,
                    const std::string& config_hash, std::uint64_t seed) {
  if (values.size() != domain.size()) throw InputError("raw grid: sample count does not match domain");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(double)));
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  json side;
  side["dtype"] = "float64";
  side["byte_order"] = "little";
  side["order"] = "row-major";
  side["shape"] = std::vector<int>(static_cast<std::size_t>(domain.dim), domain.points);
  side["length"] = domain.length;
  side["config_sha256"] = config_hash;
  side["seed"] = seed;
  write_json(path.string() + ".json", side);
}

ScalarField read_raw_grid(const std::filesystem::path& path) {
  const std::filesystem::path side_path = path.string() + ".json";
  std::ifstream side_in(side_path);
  if (!side_in) throw InputError("raw grid: missing sidecar '" + side_path.string() + "'");
  json side;
  try {
    side = json::parse(side_in);
  } catch (const json::parse_error&) {
    throw InputError("raw grid: sidecar '" + side_path.string() + "' is not valid JSON");
  }
  if (!side.contains("shape") || !side["shape"].is_array() || side["shape"].empty() || side["shape"].size() > 2)
    throw InputError("raw grid: sidecar needs 'shape' with 1 or 2 entries");
  if (side.value("dtype", "float64") != "float64") throw InputError("raw grid: only float64 is supported");
  const int points = side["shape"][0].get<int>();
  for (const auto& s : side["shape"])
    if (s.get<int>() != points) throw InputError("raw grid: axes must have equal length");
  const Domain domain = Domain::grid(static_cast<int>(side["shape"].size()), points, side.value("length", two_pi));
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("raw grid: cannot open '" + path.string() + "'");
  std::vector<double> v(domain.size());
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
  if (in.gcount() != static_cast<std::streamsize>(v.size() * sizeof(double)) || in.peek() != EOF)
    throw InputError("raw grid: '" + path.string() + "' does not hold exactly the sidecar shape");
  return ScalarField(domain, std::move(v));
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::string& kind, const std::string& config_hash,
                     std::uint64_t seed, const std::vector<std::string>& columns, const std::string& column_notes)
    : path_(path), width_(columns.size()) {
  std::ostringstream head;
  head << "# metamorph " << kind << " config_sha256=" << config_hash << " seed=" << seed;
  if (!column_notes.empty()) head << " columns: " << column_notes;
  head << '\n';
  for (std::size_t i = 0; i < columns.size(); ++i) head << (i ? "," : "") << columns[i];
  head << '\n';
  text_ = head.str();
}

void CsvWriter::row(const std::vector<double>& values) {
  if (values.size() != width_) throw std::logic_error("csv row width mismatch");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) text_ += ',';
    text_ += format_double(values[i]);
  }
  text_ += '\n';
}

void CsvWriter::close() {
  std::ofstream out(path_, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path_.string() + "'");
  out << text_;
  if (!out) throw InputError("cannot write '" + path_.string() + "'");
}

}  // namespace metamorph
