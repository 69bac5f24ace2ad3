#include "qcart/params.hpp"

#include "qcart/types.hpp"

#include <cmath>

namespace qcart {

std::string_view to_string(PotentialKind kind) {
  switch (kind) {
    case PotentialKind::kQuadratic:
      return "quadratic";
    case PotentialKind::kCosine:
      return "cosine";
    case PotentialKind::kQuartic:
      return "quartic";
  }
  return "unknown";
}

PotentialKind parse_potential_kind(std::string_view name) {
  if (name == "quadratic") return PotentialKind::kQuadratic;
  if (name == "cosine") return PotentialKind::kCosine;
  if (name == "quartic") return PotentialKind::kQuartic;
  throw ConfigError("unknown potential '" + std::string(name) + "'");
}

PotentialSpec PotentialSpec::quadratic(double k) {
  return {PotentialKind::kQuadratic, k, 0.0, 0.0};
}

PotentialSpec PotentialSpec::cosine(double k1, double k2) {
  PotentialSpec spec{PotentialKind::kCosine, 0.0, k1, k2};
  spec.validate();
  return spec;
}

PotentialSpec PotentialSpec::quartic(double k) {
  return {PotentialKind::kQuartic, k, 0.0, 0.0};
}

double PotentialSpec::value(double x) const {
  switch (kind) {
    case PotentialKind::kQuadratic:
      return -0.5 * k * x * x;
    case PotentialKind::kCosine:
      return k1 * (std::cos(std::numbers::pi * x / k2) - 1.0);
    case PotentialKind::kQuartic:
      return -k * x * x * x * x;
  }
  return 0.0;
}

double PotentialSpec::gradient(double x) const {
  switch (kind) {
    case PotentialKind::kQuadratic:
      return -k * x;
    case PotentialKind::kCosine: {
      const double w = std::numbers::pi / k2;
      return -k1 * w * std::sin(w * x);
    }
    case PotentialKind::kQuartic:
      return -4.0 * k * x * x * x;
  }
  return 0.0;
}

double PotentialSpec::curvature(double x) const {
  switch (kind) {
    case PotentialKind::kQuadratic:
      return -k;
    case PotentialKind::kCosine: {
      const double w = std::numbers::pi / k2;
      return -k1 * w * w * std::cos(w * x);
    }
    case PotentialKind::kQuartic:
      return -12.0 * k * x * x;
  }
  return 0.0;
}

void PotentialSpec::validate() const {
  if (!std::isfinite(k) || !std::isfinite(k1) || !std::isfinite(k2)) {
    throw ConfigError("potential constants must be finite");
  }
  if (kind == PotentialKind::kCosine && (k1 <= 0.0 || k2 <= 0.0)) {
    throw ConfigError("cosine potential needs k1 > 0 and k2 > 0");
  }
  if (kind != PotentialKind::kCosine && k < 0.0) {
    throw ConfigError("potential constant k must be non-negative");
  }
}

void SimParams::validate() const {
  auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (!positive(dt)) throw ConfigError("dt must be positive");
  if (!positive(mass)) throw ConfigError("mass must be positive");
  if (!positive(coupling)) throw ConfigError("coupling must be positive");
  if (!positive(sigma_system)) throw ConfigError("sigma_system must be positive");
  if (!positive(sigma_ancilla)) {
    throw ConfigError("sigma_ancilla must be positive");
  }
  if (!(sigma_p_init >= 0.0)) throw ConfigError("sigma_p_init must be >= 0");
  if (!positive(x_threshold)) throw ConfigError("x_threshold must be positive");
  if (!positive(f_max)) throw ConfigError("f_max must be positive");
}

}  // namespace qcart
