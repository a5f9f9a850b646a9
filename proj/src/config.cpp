#include "mlab/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace mlab {

ConfigError::ConfigError(int line, std::string field, const std::string& msg)
    : Error(line > 0 ? "line " + std::to_string(line) + ": " + field + ": " + msg : field + ": " + msg),
      line(line),
      field(std::move(field)) {}

Metric ExperimentConfig::metric() const { return make_metric(grid.n, g0, h); }

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> words(const std::string& s) {
  std::istringstream is(s);
  std::vector<std::string> out;
  for (std::string w; is >> w;) out.push_back(w);
  return out;
}

struct Reader {
  int line;
  std::string field;

  [[noreturn]] void fail(const std::string& msg) const { throw ConfigError(line, field, msg); }

  double real(const std::string& w) const {
    if (w == "inf") return INFINITY;
    if (w == "-inf") return -INFINITY;
    double x = 0.0;
    auto [p, ec] = std::from_chars(w.data(), w.data() + w.size(), x);
    if (ec != std::errc() || p != w.data() + w.size()) fail("expected a number, got '" + w + "'");
    return x;
  }
  long long integer(const std::string& w) const {
    long long x = 0;
    auto [p, ec] = std::from_chars(w.data(), w.data() + w.size(), x);
    if (ec != std::errc() || p != w.data() + w.size()) fail("expected an integer, got '" + w + "'");
    return x;
  }
  std::string single(const std::string& v) const {
    auto w = words(v);
    if (w.size() != 1) fail("expected a single value");
    return w[0];
  }
  RVec reals(const std::string& v) const {
    RVec out;
    for (const auto& w : words(v)) out.push_back(real(w));
    return out;
  }
  std::vector<int> ints(const std::string& v) const {
    std::vector<int> out;
    for (const auto& w : words(v)) out.push_back(static_cast<int>(integer(w)));
    return out;
  }
  std::vector<RVec> rows(const std::string& v) const {
    std::vector<RVec> out;
    if (trim(v).empty()) return out;
    std::stringstream ss(v);
    for (std::string row; std::getline(ss, row, ';');) {
      RVec r = reals(row);
      if (r.empty()) fail("empty matrix row");
      out.push_back(std::move(r));
    }
    return out;
  }
  RVec matrix(const std::string& v, int n) const {
    auto rs = rows(v);
    if (rs.empty()) return {};
    if (static_cast<int>(rs.size()) != n) fail("expected " + std::to_string(n) + " rows");
    RVec flat;
    for (const auto& r : rs) {
      if (static_cast<int>(r.size()) != n) fail("expected " + std::to_string(n) + " columns");
      flat.insert(flat.end(), r.begin(), r.end());
    }
    return flat;
  }
};

const char* recipe_name(DataRecipe::Kind k) {
  switch (k) {
    case DataRecipe::random_shell: return "random_shell";
    case DataRecipe::plane_wave: return "plane_wave";
    case DataRecipe::packet: return "packet";
    case DataRecipe::null_pair: return "null_pair";
  }
  return "?";
}

std::string fmt(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);  // shortest round-trip form
  return std::string(buf, p);
}

std::string list(const RVec& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + fmt(v[i]);
  return s;
}

std::string list(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + std::to_string(v[i]);
  return s;
}

std::string rows(const std::vector<RVec>& m) {
  std::string s;
  for (std::size_t i = 0; i < m.size(); ++i) s += (i ? "; " : "") + list(m[i]);
  return s;
}

std::string matrix(const RVec& a, int n) {
  if (a.empty()) return "";
  std::vector<RVec> r;
  for (int i = 0; i < n; ++i) r.emplace_back(a.begin() + i * n, a.begin() + (i + 1) * n);
  return rows(r);
}

void check(bool ok, int line, const std::string& field, const std::string& msg) {
  if (!ok) throw ConfigError(line, field, msg);
}

void validate(const ExperimentConfig& c, const std::map<std::string, int>& lines) {
  auto at = [&](const std::string& k) {
    auto it = lines.find(k);
    return it == lines.end() ? 0 : it->second;
  };
  check(!c.experiment.empty(), at("experiment"), "experiment", "missing");
  check(c.grid.n >= 1 && c.grid.n <= 3, at("grid.n"), "grid.n", "dimension must be 1, 2 or 3");
  check(c.grid.N >= 16 && (c.grid.N & (c.grid.N - 1)) == 0, at("grid.N"), "grid.N",
        "must be a power of two and at least 16");
  check(c.grid.L > 0.0 && std::isfinite(c.grid.L), at("grid.L"), "grid.L", "must be positive");
  const std::size_t nn = static_cast<std::size_t>(c.grid.n) * c.grid.n;
  check(c.g0.size() == nn, at("metric.g0"), "metric.g0", "must be n x n");
  check(c.h.empty() || c.h.size() == nn, at("metric.h"), "metric.h", "must be n x n");
  try {
    (void)c.metric();
  } catch (const Error& e) {
    throw ConfigError(at("metric.g0"), "metric.g0", e.what());
  }
  check(c.seeds >= 1, at("seeds"), "seeds", "must be at least 1");
  check(c.T >= 0.0, at("time.T"), "time.T", "must be non-negative");
  check(c.dt > 0.0, at("time.dt"), "time.dt", "must be positive");
  double steps = c.T / c.dt;
  check(std::abs(steps - std::round(steps)) <= 1e-9 * std::max(1.0, steps), at("time.T"), "time.T",
        "must be a multiple of dt");
  check(c.save_every >= 1, at("time.save_every"), "time.save_every", "must be at least 1");
  for (double r : c.r) check(r > 0.0, at("sweep.r"), "sweep.r", "scales must be positive");
  for (const auto& x : c.x0)
    check(static_cast<int>(x.size()) == c.grid.n, at("sweep.x0"), "sweep.x0", "shift has wrong dimension");
  for (const auto& p : c.pairs) check(p.size() == 2, at("sweep.pairs"), "sweep.pairs", "rows must be p q");
  check(c.delta > 0.0 && c.delta <= 0.25, at("envelope.delta"), "envelope.delta", "must lie in (0, 1/4]");
  check(c.radius >= 1, at("resonance.radius"), "resonance.radius", "must be positive");
  const auto& d = c.data;
  auto vec_ok = [&](const RVec& v) { return v.empty() || static_cast<int>(v.size()) == c.grid.n; };
  check(vec_ok(d.center), at("data.center"), "data.center", "wrong dimension");
  check(vec_ok(d.frequency), at("data.frequency"), "data.frequency", "wrong dimension");
  check(vec_ok(d.center_v), at("data.center_v"), "data.center_v", "wrong dimension");
  check(vec_ok(d.frequency_v), at("data.frequency_v"), "data.frequency_v", "wrong dimension");
  check(d.width > 0.0, at("data.width"), "data.width", "must be positive");
  if (d.kind == DataRecipe::plane_wave)
    check(static_cast<int>(d.wavenumber.size()) == c.grid.n, at("data.wavenumber"), "data.wavenumber",
          "wrong dimension");
  if (d.kind == DataRecipe::packet || d.kind == DataRecipe::null_pair)
    check(!d.frequency.empty(), at("data.frequency"), "data.frequency", "required by the recipe");
  if (d.kind == DataRecipe::null_pair)
    check(!d.frequency_v.empty(), at("data.frequency_v"), "data.frequency_v", "required by the recipe");
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig c;
  c.h.clear();
  std::map<std::string, int> lines;
  std::string matrix_g0, matrix_h;
  int line_g0 = 0, line_h = 0;
  std::istringstream is(text);
  std::string section;
  int ln = 0;
  for (std::string raw; std::getline(is, raw);) {
    ++ln;
    std::string s = trim(raw.substr(0, raw.find('#')));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigError(ln, s, "malformed section header");
      section = trim(s.substr(1, s.size() - 2));
      static const std::set<std::string> known = {"grid", "metric", "model", "data", "time",
                                                   "sweep", "envelope", "resonance"};
      if (!known.count(section)) throw ConfigError(ln, section, "unknown section");
      continue;
    }
    auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError(ln, s, "expected key = value");
    std::string key = trim(s.substr(0, eq)), val = trim(s.substr(eq + 1));
    std::string full = section.empty() ? key : section + "." + key;
    if (lines.count(full)) throw ConfigError(ln, full, "duplicate key");
    lines[full] = ln;
    Reader r{ln, full};
    auto& d = c.data;
    static const std::map<std::string, std::function<void(ExperimentConfig&, const Reader&, const std::string&)>> setters = {
        {"experiment", [](auto& c, auto& r, auto& v) { c.experiment = r.single(v); }},
        {"seed", [](auto& c, auto& r, auto& v) { c.seed = static_cast<std::uint64_t>(r.integer(r.single(v))); }},
        {"seeds", [](auto& c, auto& r, auto& v) { c.seeds = static_cast<int>(r.integer(r.single(v))); }},
        {"output", [](auto& c, auto& r, auto& v) { c.output = r.single(v); }},
        {"tolerance", [](auto& c, auto& r, auto& v) { c.tolerance = r.real(r.single(v)); }},
        {"grid.n", [](auto& c, auto& r, auto& v) { c.grid.n = static_cast<int>(r.integer(r.single(v))); }},
        {"grid.N", [](auto& c, auto& r, auto& v) { c.grid.N = static_cast<int>(r.integer(r.single(v))); }},
        {"grid.L", [](auto& c, auto& r, auto& v) { c.grid.L = r.real(r.single(v)); }},
        {"model.sigma", [](auto& c, auto& r, auto& v) { c.sigma = r.real(r.single(v)); }},
        {"model.kind", [](auto& c, auto& r, auto& v) {
           std::string k = r.single(v);
           if (k == "linear") c.model = Model::linear;
           else if (k == "semilinear") c.model = Model::semilinear;
           else if (k == "quasilinear") c.model = Model::quasilinear;
           else r.fail("unknown model '" + k + "'");
         }},
        {"time.T", [](auto& c, auto& r, auto& v) { c.T = r.real(r.single(v)); }},
        {"time.dt", [](auto& c, auto& r, auto& v) { c.dt = r.real(r.single(v)); }},
        {"time.save_every", [](auto& c, auto& r, auto& v) { c.save_every = static_cast<int>(r.integer(r.single(v))); }},
        {"sweep.r", [](auto& c, auto& r, auto& v) { c.r = r.reals(v); }},
        {"sweep.j", [](auto& c, auto& r, auto& v) { c.j = r.ints(v); }},
        {"sweep.x0", [](auto& c, auto& r, auto& v) { c.x0 = r.rows(v); }},
        {"sweep.eps", [](auto& c, auto& r, auto& v) { c.eps = r.reals(v); }},
        {"sweep.widths", [](auto& c, auto& r, auto& v) { c.widths = r.reals(v); }},
        {"sweep.pairs", [](auto& c, auto& r, auto& v) { c.pairs = r.rows(v); }},
        {"envelope.s", [](auto& c, auto& r, auto& v) { c.s = r.real(r.single(v)); }},
        {"envelope.delta", [](auto& c, auto& r, auto& v) { c.delta = r.real(r.single(v)); }},
        {"resonance.radius", [](auto& c, auto& r, auto& v) { c.radius = static_cast<int>(r.integer(r.single(v))); }},
    };
    if (full == "metric.g0") {
      matrix_g0 = val;
      line_g0 = ln;
    } else if (full == "metric.h") {
      matrix_h = val;
      line_h = ln;
    } else if (full == "data.recipe") {
      std::string k = r.single(val);
      if (k == "random_shell") d.kind = DataRecipe::random_shell;
      else if (k == "plane_wave") d.kind = DataRecipe::plane_wave;
      else if (k == "packet") d.kind = DataRecipe::packet;
      else if (k == "null_pair") d.kind = DataRecipe::null_pair;
      else r.fail("unknown recipe '" + k + "'");
    } else if (full == "data.shell") {
      d.shell = static_cast<int>(r.integer(r.single(val)));
    } else if (full == "data.l2") {
      d.l2 = r.real(r.single(val));
    } else if (full == "data.wavenumber") {
      d.wavenumber = r.ints(val);
    } else if (full == "data.center") {
      d.center = r.reals(val);
    } else if (full == "data.frequency") {
      d.frequency = r.reals(val);
    } else if (full == "data.center_v") {
      d.center_v = r.reals(val);
    } else if (full == "data.frequency_v") {
      d.frequency_v = r.reals(val);
    } else if (full == "data.width") {
      d.width = r.real(r.single(val));
    } else if (full == "data.amplitude") {
      d.amplitude = r.real(r.single(val));
    } else {
      auto it = setters.find(full);
      if (it == setters.end()) throw ConfigError(ln, full, "unknown key");
      it->second(c, r, val);
    }
  }
  // Matrices need the dimension, which may appear later in the file.
  if (line_g0) c.g0 = Reader{line_g0, "metric.g0"}.matrix(matrix_g0, c.grid.n);
  else if (c.grid.n != 2) {
    c.g0.assign(static_cast<std::size_t>(c.grid.n) * c.grid.n, 0.0);
    for (int i = 0; i < c.grid.n; ++i) c.g0[i * c.grid.n + i] = 1.0;
  }
  if (line_h) c.h = Reader{line_h, "metric.h"}.matrix(matrix_h, c.grid.n);
  validate(c, lines);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(0, path, "cannot open config");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void validate_config(const ExperimentConfig& c) { validate(c, {}); }

std::string serialize_config(const ExperimentConfig& c) {
  std::ostringstream os;
  const auto& d = c.data;
  os << "experiment = " << c.experiment << '\n'
     << "seed = " << c.seed << '\n'
     << "seeds = " << c.seeds << '\n'
     << "output = " << c.output << '\n'
     << "tolerance = " << fmt(c.tolerance) << '\n'
     << "\n[grid]\n"
     << "n = " << c.grid.n << '\n'
     << "N = " << c.grid.N << '\n'
     << "L = " << fmt(c.grid.L) << '\n'
     << "\n[metric]\n"
     << "g0 = " << matrix(c.g0, c.grid.n) << '\n';
  if (!c.h.empty()) os << "h = " << matrix(c.h, c.grid.n) << '\n';
  os << "\n[model]\n"
     << "kind = " << model_name(Model{c.model}) << '\n'
     << "sigma = " << fmt(c.sigma) << '\n'
     << "\n[data]\n"
     << "recipe = " << recipe_name(d.kind) << '\n'
     << "shell = " << d.shell << '\n'
     << "l2 = " << fmt(d.l2) << '\n';
  if (!d.wavenumber.empty()) os << "wavenumber = " << list(d.wavenumber) << '\n';
  if (!d.center.empty()) os << "center = " << list(d.center) << '\n';
  if (!d.frequency.empty()) os << "frequency = " << list(d.frequency) << '\n';
  if (!d.center_v.empty()) os << "center_v = " << list(d.center_v) << '\n';
  if (!d.frequency_v.empty()) os << "frequency_v = " << list(d.frequency_v) << '\n';
  os << "width = " << fmt(d.width) << '\n'
     << "amplitude = " << fmt(d.amplitude) << '\n'
     << "\n[time]\n"
     << "T = " << fmt(c.T) << '\n'
     << "dt = " << fmt(c.dt) << '\n'
     << "save_every = " << c.save_every << '\n'
     << "\n[sweep]\n";
  if (!c.r.empty()) os << "r = " << list(c.r) << '\n';
  if (!c.j.empty()) os << "j = " << list(c.j) << '\n';
  if (!c.x0.empty()) os << "x0 = " << rows(c.x0) << '\n';
  if (!c.eps.empty()) os << "eps = " << list(c.eps) << '\n';
  if (!c.widths.empty()) os << "widths = " << list(c.widths) << '\n';
  if (!c.pairs.empty()) os << "pairs = " << rows(c.pairs) << '\n';
  os << "\n[envelope]\n"
     << "s = " << fmt(c.s) << '\n'
     << "delta = " << fmt(c.delta) << '\n'
     << "\n[resonance]\n"
     << "radius = " << c.radius << '\n';
  return os.str();
}

std::uint64_t config_hash(const std::string& text) {
  // FNV-1a, 64 bit.
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace mlab
