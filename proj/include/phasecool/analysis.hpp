#pragma once
#include <vector>

#include "phasecool/core.hpp"

namespace phasecool {

struct EnvelopePoint {
    double t;
    double value;
};

// Occupancy envelope of a sampled trajectory: the ripple rides at 2*omega, so
// the maximum over each window of length pi/omega isolates the envelope.
// Emitted timestamps are the window centers.
std::vector<EnvelopePoint> per_period_maxima(const std::vector<Sample>& samples, double omega);

struct RateFit {
    double rate = 0.0;       // decay rate of the envelope, positive = cooling
    double intercept = 0.0;  // log(value) extrapolated to t = 0
    int points = 0;          // envelope points entering the regression
};

// Least-squares line through log(value) vs t restricted to t <= t_max.
// Non-positive values are skipped; at least two usable points required.
RateFit fit_cooling_rate(const std::vector<EnvelopePoint>& envelope, double t_max);

// Time of the global occupancy minimum (first hit on ties).
double occupancy_minimum_time(const std::vector<Sample>& samples);

// Mean of values at t >= t_from; used for steady-state readouts.
double tail_mean(const std::vector<double>& t, const std::vector<double>& values, double t_from);

} // namespace phasecool
