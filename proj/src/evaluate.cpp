#include "lode/evaluate.hpp"

namespace lode::eval {

double tile_accuracy(const vae::VaeModel& model, const Level& level) {
    const Level r = vae::reconstruct(model, level);
    return 1.0 - static_cast<double>(hamming_distance(r, level)) / static_cast<double>(level.area());
}

std::vector<int> convergence_curve(const vae::VaeModel& model, const Level& start, const Level& reference,
                                   int iterations) {
    std::vector<int> curve;
    Level x = start.without_spawn();
    curve.push_back(hamming_distance(x, reference));
    for (int i = 0; i < iterations; ++i) {
        x = vae::reconstruct(model, x);
        curve.push_back(hamming_distance(x, reference));
    }
    return curve;
}

}  // namespace lode::eval
