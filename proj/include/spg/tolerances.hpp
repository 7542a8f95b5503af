#pragma once

// Every numerical acceptance threshold in one place.

namespace spg::tol {

inline constexpr double kAdvantageIdentity = 1e-12;   // global/stratified offset, GN reconstruction
inline constexpr double kVarianceIdentity = 1e-10;    // within/between and SAN decompositions
inline constexpr double kAffineInvariance = 1e-10;    // SAN under aR + b
inline constexpr double kGradientSplit = 1e-10;       // GN gradient = scaled SAN + offset part
inline constexpr double kPopulationGradient = 1e-10;  // population SAN = weighted stratum gradient
inline constexpr double kMomentTable = 1e-10;         // enumerated vs closed-form moments
inline constexpr double kScoreMeanZero = 1e-12;       // E[score] under the exact law
inline constexpr double kProbabilitySum = 1e-12;
inline constexpr double kLawOfTotalExpectation = 1e-12;

inline constexpr double kScoreFiniteDiffStep = 1e-5;
inline constexpr double kScoreFiniteDiffRel = 1e-6;
inline constexpr double kStratumMeanFiniteDiffRel = 1e-3;

inline constexpr double kMonteCarloSigmas = 5.0;      // standard errors
inline constexpr double kMonteCarloFloor = 1e-12;    // absolute, for components that vanish exactly

// Training-dynamics targets (direction from the method's motivation, magnitudes ours).
inline constexpr double kMinRewardMargin = 0.05;
inline constexpr double kSearchCountSplit = 1.5;

}  // namespace spg::tol
