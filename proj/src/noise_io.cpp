#include "qcart/calibration.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

namespace qcart {
namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

template <typename M>
std::string fmt_list(const M& m) {
  std::string out = "[";
  for (int r = 0; r < m.rows(); ++r) {
    for (int c = 0; c < m.cols(); ++c) {
      if (r + c > 0) out += ", ";
      out += fmt(m(r, c));
    }
  }
  return out + "]";
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size()) {
    throw ConfigError("noise artifact: bad number for '" + key + "'");
  }
  return v;
}

std::vector<double> parse_list(const std::string& key, const std::string& text,
                               std::size_t expected) {
  std::string t = trim(text);
  if (t.size() < 2 || t.front() != '[' || t.back() != ']') {
    throw ConfigError("noise artifact: '" + key + "' must be a [list]");
  }
  t = t.substr(1, t.size() - 2);
  std::vector<double> out;
  std::stringstream ss(t);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(key, item));
  if (out.size() != expected) {
    throw ConfigError("noise artifact: '" + key + "' needs " +
                      std::to_string(expected) + " entries");
  }
  return out;
}

Mat2 to_mat(const std::vector<double>& v) {
  Mat2 m;
  m << v[0], v[1], v[2], v[3];
  return m;
}

std::string unquote(const std::string& v) {
  const std::string t = trim(v);
  if (t.size() >= 2 && t.front() == '"' && t.back() == '"') {
    return t.substr(1, t.size() - 2);
  }
  return t;
}

}  // namespace

std::string format_noise_artifact(const NoiseArtifact& a) {
  std::ostringstream os;
  os << "# quantum cartpole surrogate noise model\n";
  os << "format_version = " << a.format_version << "\n";
  os << "potential = \"" << to_string(a.potential.kind) << "\"\n";
  os << "k = " << fmt(a.potential.k) << "\n";
  os << "k1 = " << fmt(a.potential.k1) << "\n";
  os << "k2 = " << fmt(a.potential.k2) << "\n";
  os << "integrator = \""
     << (a.integrator == Integrator::kStrang ? "strang" : "symplectic_euler")
     << "\"\n";
  const SimParams& p = a.params;
  os << "dt = " << fmt(p.dt) << "\n";
  os << "mass = " << fmt(p.mass) << "\n";
  os << "coupling = " << fmt(p.coupling) << "\n";
  os << "sigma_system = " << fmt(p.sigma_system) << "\n";
  os << "sigma_ancilla = " << fmt(p.sigma_ancilla) << "\n";
  os << "sigma_p_init = " << fmt(p.sigma_p_init) << "\n";
  os << "x_threshold = " << fmt(p.x_threshold) << "\n";
  os << "f_max = " << fmt(p.f_max) << "\n";
  os << "seed = " << a.seed << "\n";
  os << "samples = " << a.samples << "\n";
  os << "# row-major 2x2 matrices; cross = E[w v^T]\n";
  os << "meas = " << fmt_list(a.noise.meas) << "\n";
  os << "process = " << fmt_list(a.noise.process) << "\n";
  os << "cross = " << fmt_list(a.noise.cross) << "\n";
  os << "A = " << fmt_list(a.model.A) << "\n";
  os << "B = " << fmt_list(a.model.B) << "\n";
  os << "C = " << fmt_list(a.model.C) << "\n";
  return os.str();
}

NoiseArtifact parse_noise_artifact(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("noise artifact line " + std::to_string(line_no) +
                        ": expected key = value");
    }
    kv[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
  }
  auto get = [&](const std::string& key) -> const std::string& {
    const auto it = kv.find(key);
    if (it == kv.end()) throw ConfigError("noise artifact: missing '" + key + "'");
    return it->second;
  };

  NoiseArtifact a;
  a.format_version = static_cast<int>(parse_double("format_version", get("format_version")));
  if (a.format_version != 1) {
    throw ConfigError("noise artifact: unsupported format_version");
  }
  a.potential.kind = parse_potential_kind(unquote(get("potential")));
  a.potential.k = parse_double("k", get("k"));
  a.potential.k1 = parse_double("k1", get("k1"));
  a.potential.k2 = parse_double("k2", get("k2"));
  const std::string integ = unquote(get("integrator"));
  if (integ == "strang") {
    a.integrator = Integrator::kStrang;
  } else if (integ == "symplectic_euler") {
    a.integrator = Integrator::kSymplecticEuler;
  } else {
    throw ConfigError("noise artifact: unknown integrator '" + integ + "'");
  }
  SimParams& p = a.params;
  p.dt = parse_double("dt", get("dt"));
  p.mass = parse_double("mass", get("mass"));
  p.coupling = parse_double("coupling", get("coupling"));
  p.sigma_system = parse_double("sigma_system", get("sigma_system"));
  p.sigma_ancilla = parse_double("sigma_ancilla", get("sigma_ancilla"));
  p.sigma_p_init = parse_double("sigma_p_init", get("sigma_p_init"));
  p.x_threshold = parse_double("x_threshold", get("x_threshold"));
  p.f_max = parse_double("f_max", get("f_max"));
  a.seed = std::stoull(get("seed"));
  a.samples = std::stoull(get("samples"));
  a.noise.meas = to_mat(parse_list("meas", get("meas"), 4));
  a.noise.process = to_mat(parse_list("process", get("process"), 4));
  a.noise.cross = to_mat(parse_list("cross", get("cross"), 4));
  a.model.A = to_mat(parse_list("A", get("A"), 4));
  const auto b = parse_list("B", get("B"), 2);
  a.model.B = Vec2(b[0], b[1]);
  a.model.C = to_mat(parse_list("C", get("C"), 4));
  a.noise.validate();
  return a;
}

void write_noise_artifact(const std::string& path, const NoiseArtifact& a) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << format_noise_artifact(a);
  if (!out) throw ConfigError("failed writing '" + path + "'");
}

NoiseArtifact read_noise_artifact(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_noise_artifact(ss.str());
}

}  // namespace qcart
