#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>

namespace flexact {

using Complex = std::complex<double>;

enum class Phase : std::uint8_t { A = 0, B = 1, C = 2 };

inline constexpr std::array<Phase, 3> kPhases{Phase::A, Phase::B, Phase::C};

constexpr std::size_t idx(Phase p) { return static_cast<std::size_t>(p); }

constexpr char phase_letter(Phase p) { return "ABC"[idx(p)]; }

/// Per-phase complex quantity (voltage, current or power), ordered A, B, C.
using PhaseComplex = std::array<Complex, 3>;
using PhaseReal = std::array<double, 3>;
/// 3x3 coupled phase matrix, rows/cols ordered A, B, C.
using PhaseMatrix = std::array<std::array<Complex, 3>, 3>;

/// Subset of {A, B, C}.
class PhaseSet {
 public:
  constexpr PhaseSet() = default;
  constexpr explicit PhaseSet(std::uint8_t mask) : mask_(mask & 0x7u) {}

  static constexpr PhaseSet all() { return PhaseSet(0x7u); }
  static constexpr PhaseSet single(Phase p) { return PhaseSet(static_cast<std::uint8_t>(1u << idx(p))); }

  /// Parses strings such as "ABC", "A", "AC". Throws std::invalid_argument.
  static PhaseSet parse(std::string_view text);

  constexpr bool contains(Phase p) const { return (mask_ >> idx(p)) & 1u; }
  constexpr bool contains(PhaseSet other) const { return (mask_ & other.mask_) == other.mask_; }
  constexpr bool empty() const { return mask_ == 0; }
  constexpr std::size_t size() const { return ((mask_ >> 0) & 1u) + ((mask_ >> 1) & 1u) + ((mask_ >> 2) & 1u); }
  constexpr bool is_three_phase() const { return mask_ == 0x7u; }
  constexpr std::uint8_t mask() const { return mask_; }

  std::string to_string() const;

  friend constexpr bool operator==(PhaseSet, PhaseSet) = default;

 private:
  std::uint8_t mask_ = 0;
};

/// A (bus, phase) location in the network.
struct NodePhase {
  std::size_t bus = 0;
  Phase phase = Phase::A;

  friend constexpr auto operator<=>(const NodePhase&, const NodePhase&) = default;
};

/// Nominal slack phasors 1∠0°, 1∠−120°, 1∠+120°.
inline PhaseComplex nominal_phasors() {
  constexpr double k120 = 2.0 * std::numbers::pi / 3.0;
  return {std::polar(1.0, 0.0), std::polar(1.0, -k120), std::polar(1.0, k120)};
}

// Error hierarchy. CLI exit codes map onto these (config → 1, solver → 2,
// infeasible dispatch → 3).

class FlexactError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid input data or configuration.
class InputError : public FlexactError {
 public:
  using FlexactError::FlexactError;
};

/// A numerical routine failed (power flow divergence, LP failure).
class SolverError : public FlexactError {
 public:
  using FlexactError::FlexactError;
};

/// Dispatch could not remove all hard violations.
class InfeasibleError : public FlexactError {
 public:
  using FlexactError::FlexactError;
};

}  // namespace flexact
