#pragma once

#include <span>
#include <vector>

#include "selio/geometry.hpp"

namespace selio {

// A timestamped pose sample; trajectories are time-ordered lists of these.
struct TrajectorySample {
  double time = 0.0;
  Vec3 translation = Vec3::Zero();
  Rotation rotation = Rotation::identity();
};

using Trajectory = std::vector<TrajectorySample>;

// Root-mean-square absolute translation error between an estimate and a
// reference. Reference poses are interpolated at the estimate timestamps
// (geodesic rotation, linear translation); estimate samples further than
// `max_extrapolation` outside the reference time span are rejected.
// When `align` is set, the closed-form rigid alignment that minimizes the
// RMS error (rotation + translation over the matched pairs) is applied to
// the estimate before the error is computed.
struct AteOptions {
  bool align = true;
  double max_extrapolation = 0.01;  // [s]
};

double ate_rmse(const Trajectory& estimate, const Trajectory& reference,
                const AteOptions& options = {});

// Mean squared second difference of estimated speed `|v|` across a state
// sequence (one sample per sweep boundary), a measure of how smoothly the
// estimated velocity evolves. Lower is smoother; exactly zero for constant
// speed.
double velocity_smoothness(const std::vector<NavState>& states);

// Pose-only fallback: the same statistic computed on finite-difference speeds
// between consecutive trajectory samples, for estimates that carry no
// velocity (plain pose files).
double velocity_smoothness(const Trajectory& trajectory);

// Length-weighted mean turning angle between consecutive translation
// segments, in radians. Straight paths score zero; estimation jitter that
// makes the path zig-zag raises the score.
double zigzag_score(const Trajectory& trajectory);

// Interpolates the reference at `time`. Returns false when `time` lies
// further than `max_extrapolation` outside the covered span.
bool sample_trajectory(const Trajectory& reference, double time,
                       double max_extrapolation, TrajectorySample& out);

}  // namespace selio
