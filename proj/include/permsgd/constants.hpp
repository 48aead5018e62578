// Named numeric constants shared by the worst-case constructions and schedules.
#pragma once

namespace permsgd::constants {

// Curvature-ratio threshold of the piecewise-quadratic construction: the flat
// branch uses curvature L / kCurvatureRatio, and the construction requires the
// declared condition number L/mu to be at least this large.
inline constexpr double kCurvatureRatio = 2415.0;

// Step-size regime boundary multiplier for the aggregate construction: the
// small-step regime is eta <= 1 / (kRegimeBoundary * L * n).
inline constexpr double kRegimeBoundary = 161.0;

// Scale factor of the guaranteed noise floor maintained by the aggregate
// construction's second block: E[y] >= kInitFactor * nu / (mu * sqrt(n) * K).
inline constexpr double kInitFactor = 1.0 / 27000.0;

// Iterates whose norm exceeds this are treated as diverged.
inline constexpr double kDivergenceNormLimit = 1e12;

}  // namespace permsgd::constants
