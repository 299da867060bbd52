#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "sensorsched/netmodel.hpp"

namespace sensorsched {

/// Network file layout:
///   {"A": [[...], ...],                 m rows of n reals
///    "s": [...], "e0": [...],           optional, length m
///    "topology": {"parent": [...],      optional, -1 = direct to master
///                 "hop_cost": [...]},   optional
///    "C": [[...], ...] | [[i, j, v], ...] | {"triplets": [[i, j, v], ...]}}
///
/// Missing s defaults to squared row norms, missing e0 to zero. Missing C is
/// derived from the topology (hop costs, else default_costs with fraction
/// commFraction) or zero without a topology.
SensorNetwork network_from_json(const nlohmann::json& doc,
                                double commFraction = 0.5);
nlohmann::json network_to_json(const SensorNetwork& network);

SensorNetwork load_network(const std::filesystem::path& path,
                           double commFraction = 0.5);
void save_network(const SensorNetwork& network,
                  const std::filesystem::path& path);

}  // namespace sensorsched
