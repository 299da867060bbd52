#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "sensorsched/netmodel.hpp"

namespace sensorsched {

enum class SelectionMethod { GreedyAddMse, FramePotentialRemove, Random, Exhaustive };

std::string_view to_string(SelectionMethod method);

struct SelectionResult {
  /// Selected sensors, in pick order for greedy methods, ascending otherwise.
  std::vector<int> indices;
  /// Criterion value after each step; +inf while the greedy set is not
  /// yet invertible.
  std::vector<double> trajectory;
  SelectionMethod method = SelectionMethod::GreedyAddMse;
};

/// Forward greedy on MSE. Until the picked rows span R^n the candidate that
/// raises the rank is preferred, then the smallest pseudo-inverse trace,
/// then the largest row norm.
SelectionResult greedy_add_mse(const SensorNetwork& network, int k);

/// Worst-out removal: drop the sensor whose removal leaves the smallest frame
/// potential, never dropping below rank n. Trajectory holds the remainder's
/// frame potential after each removal.
SelectionResult fp_remove(const SensorNetwork& network, int k);

SelectionResult random_select(const SensorNetwork& network, int k,
                              std::uint64_t seed);

inline constexpr int kExhaustiveLimit = 22;

/// Smallest subset meeting the accuracy target; ties by better criterion
/// value, then lexicographic. Trajectory: best value per size enumerated.
SelectionResult exhaustive_min_sensors(const SensorNetwork& network,
                                       const AccuracySpec& accuracy);

}  // namespace sensorsched
