#include "phasecool/analysis.hpp"

#include <cmath>
#include <string>

namespace phasecool {

std::vector<EnvelopePoint> per_period_maxima(const std::vector<Sample>& samples, double omega) {
    if (samples.empty()) throw ValidationError("envelope: no samples");
    if (!(omega > 0.0)) throw ValidationError("envelope: omega must be > 0");
    const double window = M_PI / omega;
    std::vector<EnvelopePoint> env;
    long long bucket = -1;
    for (const auto& s : samples) {
        const long long k = static_cast<long long>(std::floor(s.t / window));
        if (k != bucket) {
            env.push_back({(static_cast<double>(k) + 0.5) * window, s.n});
            bucket = k;
        } else if (s.n > env.back().value) {
            env.back().value = s.n;
        }
    }
    return env;
}

RateFit fit_cooling_rate(const std::vector<EnvelopePoint>& envelope, double t_max) {
    double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
    int n = 0;
    for (const auto& e : envelope) {
        if (e.t > t_max || e.value <= 0.0) continue;
        const double y = std::log(e.value);
        st += e.t;
        sy += y;
        stt += e.t * e.t;
        sty += e.t * y;
        ++n;
    }
    if (n < 2)
        throw ValidationError("rate fit: need at least 2 usable envelope points, got " +
                              std::to_string(n));
    const double det = n * stt - st * st;
    if (det == 0.0) throw ValidationError("rate fit: degenerate time grid");
    RateFit fit;
    fit.rate = -(n * sty - st * sy) / det;
    fit.intercept = (sy * stt - st * sty) / det;
    fit.points = n;
    return fit;
}

double occupancy_minimum_time(const std::vector<Sample>& samples) {
    if (samples.empty()) throw ValidationError("minimum: no samples");
    const Sample* best = &samples.front();
    for (const auto& s : samples)
        if (s.n < best->n) best = &s;
    return best->t;
}

double tail_mean(const std::vector<double>& t, const std::vector<double>& values, double t_from) {
    if (t.size() != values.size()) throw ValidationError("tail mean: length mismatch");
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] < t_from) continue;
        sum += values[i];
        ++n;
    }
    if (n == 0) throw ValidationError("tail mean: no samples at t >= t_from");
    return sum / static_cast<double>(n);
}

} // namespace phasecool
