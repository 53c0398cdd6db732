#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "ategb/game.hpp"
#include "ategb/simulator.hpp"

namespace ategb {

using json = nlohmann::json;

json load_json(const std::string& path);

// Keys: s_count, payoff.mode (table|linear), payoff.table[s][d_{-s}][z],
// payoff.linear.{gamma, delta, link}, z_support.
GameSpec game_from_json(const json& j);
json game_to_json(const GameSpec& g);

// Game keys (linear mode only) plus z_probs, x_support, x_probs, w_support,
// w_probs, outcome_index.{mu, beta}, error_law.{correlation | rho},
// selection, y_range. Missing probabilities default to uniform cells.
SimParams params_from_json(const json& j);
json params_to_json(const SimParams& p);

}  // namespace ategb
