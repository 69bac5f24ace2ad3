#pragma once

#include <numbers>
#include <string>
#include <string_view>

namespace qcart {

enum class PotentialKind { kQuadratic, kCosine, kQuartic };

std::string_view to_string(PotentialKind kind);
PotentialKind parse_potential_kind(std::string_view name);

/// Inverted potential V(x) with V(0) = 0.
///   quadratic: -k x^2 / 2
///   cosine:    k1 (cos(pi x / k2) - 1)
///   quartic:   -k x^4
/// quadratic with k = 0 is the free particle.
struct PotentialSpec {
  PotentialKind kind = PotentialKind::kQuadratic;
  double k = std::numbers::pi;
  double k1 = 0.0;
  double k2 = 0.0;

  static PotentialSpec quadratic(double k = std::numbers::pi);
  static PotentialSpec cosine(double k1, double k2);
  static PotentialSpec quartic(double k = std::numbers::pi / 100.0);
  static PotentialSpec free() { return quadratic(0.0); }

  double value(double x) const;
  double gradient(double x) const;
  double curvature(double x) const;
  bool is_linear() const { return kind == PotentialKind::kQuadratic; }

  void validate() const;
};

/// Environment parameters; defaults are the benchmark values.
struct SimParams {
  double dt = 0.01 / std::numbers::pi;
  double mass = 1.0 / std::numbers::pi;
  double coupling = 0.05;  // lambda
  double sigma_system = 1.0;
  double sigma_ancilla = 0.7;
  // Standard deviation of the uniform initial-momentum draw.
  double sigma_p_init = 0.1;
  double x_threshold = 8.0;
  double f_max = 8.0 * std::numbers::pi;

  void validate() const;
};

}  // namespace qcart
