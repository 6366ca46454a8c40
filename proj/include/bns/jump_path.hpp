#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace bns {

/// Realized jumps of H_{lambda t} on an interval (t0, T].
///
/// For IG-OU only jumps above `truncation_level` are kept; the discarded jumps
/// have mean mass `compensated_small_jump_mass` per unit time, which is added
/// back as a continuous drift of the variance (and of H) when
/// `drift_compensated` is set.
struct JumpPath {
    std::vector<double> times;
    std::vector<double> sizes;
    double truncation_level = 0.0;
    double compensated_small_jump_mass = 0.0;
    bool drift_compensated = false;

    std::size_t size() const noexcept { return times.size(); }

    double drift_rate() const noexcept { return drift_compensated ? compensated_small_jump_mass : 0.0; }

    void validate(double t0, double T) const {
        if (times.size() != sizes.size()) throw std::invalid_argument("JumpPath: times/sizes length mismatch");
        for (std::size_t i = 0; i < times.size(); ++i) {
            if (!(times[i] > t0 && times[i] <= T)) throw std::domain_error("JumpPath: jump time outside (t0, T]");
            if (i > 0 && !(times[i] > times[i - 1])) throw std::invalid_argument("JumpPath: times not increasing");
            if (!(sizes[i] > truncation_level)) throw std::invalid_argument("JumpPath: jump size below truncation");
        }
    }
};

}  // namespace bns
