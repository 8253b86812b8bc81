#include "depo/advantage.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace depo {

double decouple_factor(double beta, int k) {
    return 1.0 - beta * (1.0 - std::exp(-beta * static_cast<double>(k)));
}

std::vector<double> normalize(const std::vector<double>& rewards,
                              const EngineConfig& config) {
    const std::size_t g = rewards.size();
    if (g < 2) throw std::invalid_argument("group statistics need at least 2 rewards");
    double mean = 0.0;
    for (double r : rewards) mean += r;
    mean /= static_cast<double>(g);
    double var = 0.0;
    for (double r : rewards) var += (r - mean) * (r - mean);
    const double std_dev = std::sqrt(var / static_cast<double>(g));
    std::vector<double> out(g, 0.0);
    if (std_dev < config.std_floor) return out;
    for (std::size_t i = 0; i < g; ++i) out[i] = (rewards[i] - mean) / std_dev;
    return out;
}

std::vector<double> clip_advantages(const std::vector<double>& raw,
                                    const std::vector<RolloutStatus>& statuses,
                                    const EngineConfig& config) {
    if (raw.size() != statuses.size())
        throw std::invalid_argument("statuses not aligned with advantages");
    double min_pos = 0.0;
    bool found = false;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (statuses[i] == RolloutStatus::correct && raw[i] > 0.0 &&
            (!found || raw[i] < min_pos)) {
            min_pos = raw[i];
            found = true;
        }
    }
    if (!found) min_pos = config.positive_floor;

    std::vector<double> out(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        out[i] = statuses[i] == RolloutStatus::correct ? std::max(raw[i], min_pos)
                                                       : std::min(raw[i], 0.0);
    }
    return out;
}

AdvantageTensor decouple(const std::vector<double>& raw,
                         const std::vector<double>& clipped,
                         const std::vector<Segmentation>& segs,
                         const std::vector<RedundancyReport>& reports,
                         const std::vector<RolloutStatus>& statuses,
                         const EngineConfig& config) {
    const std::size_t g = clipped.size();
    if (raw.size() != g || segs.size() != g || reports.size() != g || statuses.size() != g)
        throw std::invalid_argument("decouple inputs not aligned");

    AdvantageTensor tensor;
    tensor.raw = raw;
    tensor.clipped = clipped;
    tensor.f_values.resize(g, 1.0);
    tensor.per_token.resize(g);
    for (std::size_t i = 0; i < g; ++i) {
        const Segmentation& seg = segs[i];
        const std::size_t tokens =
            std::max({seg.efficient.end, seg.inefficient.end, seg.summary.end});
        const bool scaled = statuses[i] == RolloutStatus::correct && config.enable_adv_decouple;
        if (statuses[i] == RolloutStatus::correct)
            tensor.f_values[i] =
                scaled ? decouple_factor(config.beta, reports[i].k) : 1.0;
        std::vector<double>& row = tensor.per_token[i];
        row.assign(tokens, clipped[i]);
        if (scaled) {
            for (std::size_t t = seg.inefficient.begin; t < seg.inefficient.end; ++t)
                row[t] = tensor.f_values[i] * clipped[i];
        }
    }
    return tensor;
}

}  // namespace depo
