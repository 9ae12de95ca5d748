#pragma once

#include "lode/level.hpp"
#include "lode/vae.hpp"

#include <vector>

namespace lode::eval {

/// Fraction of cells where reconstruct(model, level) matches the level.
double tile_accuracy(const vae::VaeModel& model, const Level& level);

/// Hamming distance to `reference` of start, f(start), f(f(start)), ... with f = reconstruct.
/// Returns iterations + 1 points.
std::vector<int> convergence_curve(const vae::VaeModel& model, const Level& start, const Level& reference,
                                   int iterations);

}  // namespace lode::eval
