#pragma once

#include <bit>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace ategb {

// Treatment profile as a bitmask: bit s is player s's action (player 1 is bit 0).
using Profile = std::uint32_t;

inline constexpr int max_players = 16;

inline int entrants(Profile d) { return std::popcount(d); }

inline Profile profile_count(int s_count) { return Profile{1} << s_count; }

// a <= b coordinatewise.
inline bool dominated_by(Profile a, Profile b) { return (a & ~b) == 0; }

inline bool is_reduction(Profile candidate, Profile d) { return candidate != d && dominated_by(candidate, d); }
inline bool is_extension(Profile candidate, Profile d) { return candidate != d && dominated_by(d, candidate); }

inline bool bit(Profile d, int s) { return (d >> s) & 1u; }

// d_{-s} packed into S-1 bits, preserving the order of the remaining players.
inline std::uint32_t opponents(Profile d, int s) {
  const std::uint32_t low = d & ((1u << s) - 1u);
  const std::uint32_t high = (d >> (s + 1)) << s;
  return low | high;
}

// Inverse of opponents(): rebuild a profile from d_{-s} and d_s.
inline Profile with_player(std::uint32_t opp, int s, bool ds) {
  const std::uint32_t low = opp & ((1u << s) - 1u);
  const std::uint32_t high = (opp >> s) << (s + 1);
  return low | high | (ds ? (1u << s) : 0u);
}

// "d1d2...dS", e.g. "10" means player 1 in, player 2 out.
std::string profile_string(Profile d, int s_count);
Profile parse_profile(std::string_view text, int s_count);

std::vector<Profile> profiles_with_count(int s_count, int j);

}  // namespace ategb
