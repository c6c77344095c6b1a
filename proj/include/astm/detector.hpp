#pragma once

#include <cstdint>
#include <vector>

#include "astm/errors.hpp"
#include "astm/random.hpp"

namespace astm {

/// Stochastic stand-in for the camera detection stage. Each present vehicle
/// is counted with probability `recall`; spurious detections arrive as a
/// Poisson extra with mean `false_positive_rate` per interval.
struct DetectorModel {
    double recall = 0.95;
    double false_positive_rate = 0.0;

    bool operator==(const DetectorModel&) const = default;
};

inline void validate_detector(const DetectorModel& m) {
    if (!(m.recall >= 0.0 && m.recall <= 1.0))
        throw InvariantError("detector recall must be in [0, 1]");
    if (!(m.false_positive_rate >= 0.0))
        throw InvariantError("detector false_positive_rate must be >= 0");
}

/// Observed count for one interval: Binomial(true_count, recall) thinning
/// plus Poisson(false_positive_rate) extras. Deterministic per seed.
inline std::int64_t observe(const DetectorModel& model, std::int64_t true_count,
                            std::uint64_t seed) {
    validate_detector(model);
    if (true_count < 0) throw ArgumentError("observe: true_count must be >= 0");
    RandomStream rs(scramble(seed));
    std::int64_t seen = rs.binomial(true_count, model.recall);
    if (model.false_positive_rate > 0.0) seen += rs.poisson(model.false_positive_rate);
    return seen;
}

/// Element-wise observe with per-index derived sub-seeds, so observing a
/// prefix of the series and the full series agree on shared indices.
inline std::vector<std::int64_t> observe_series(const DetectorModel& model,
                                                const std::vector<std::int64_t>& counts,
                                                std::uint64_t seed) {
    std::vector<std::int64_t> out;
    out.reserve(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i) {
        out.push_back(observe(model, counts[i], derive_seed(seed, stream::kDetector, i)));
    }
    return out;
}

} // namespace astm
