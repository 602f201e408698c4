#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "harmoniums/harmonium.hpp"

namespace harmoniums {

struct ScenarioConfig {
    std::string scenario;
    std::uint64_t seed = 42;
    std::string output_dir = "out";
    int epochs = 0; // 0 = scenario default
};

const std::vector<std::string>& scenario_names();

/// Runs one scenario end to end, writing its CSV/JSON outputs into
/// output_dir. Throws on unknown scenario names or I/O failure.
void run_scenario(const ScenarioConfig& config);

// Dataset constructions shared with the tests.

/// Two noisy concentric circles (radii 1 and 2, isotropic noise sigma=0.15),
/// count points split evenly between the circles.
std::vector<Observation> two_circles_dataset(std::uint64_t seed, int count);

} // namespace harmoniums
