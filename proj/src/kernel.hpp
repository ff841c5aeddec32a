#pragma once

// Shared one-step rotation/damping kernel. engine.cpp and multimode.cpp must
// produce bit-identical states for identical parameters (the single-mode
// reduction is tested with exact equality), so the arithmetic lives in one
// place: exact rotation by omega dt, then the damping factor on p.

namespace phasecool::kernel {

struct Rotation {
    double c;     // cos(omega dt)
    double sn;    // sin(omega dt)
    double damp;  // exp(-gamma dt)
};

inline void rotate_damp(double& q, double& p, const Rotation& r) {
    const double qn = q * r.c + p * r.sn;
    p = (p * r.c - q * r.sn) * r.damp;
    q = qn;
}

} // namespace phasecool::kernel
