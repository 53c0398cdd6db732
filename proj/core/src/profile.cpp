#include "ategb/profile.hpp"

#include <stdexcept>

namespace ategb {

std::string profile_string(Profile d, int s_count) {
  std::string out(static_cast<std::size_t>(s_count), '0');
  for (int s = 0; s < s_count; ++s)
    if (bit(d, s)) out[static_cast<std::size_t>(s)] = '1';
  return out;
}

Profile parse_profile(std::string_view text, int s_count) {
  if (static_cast<int>(text.size()) != s_count)
    throw std::invalid_argument("profile '" + std::string(text) + "' does not have " +
                                std::to_string(s_count) + " digits");
  Profile d = 0;
  for (int s = 0; s < s_count; ++s) {
    const char c = text[static_cast<std::size_t>(s)];
    if (c == '1')
      d |= 1u << s;
    else if (c != '0')
      throw std::invalid_argument("profile digits must be 0 or 1: " + std::string(text));
  }
  return d;
}

std::vector<Profile> profiles_with_count(int s_count, int j) {
  std::vector<Profile> out;
  for (Profile d = 0; d < profile_count(s_count); ++d)
    if (entrants(d) == j) out.push_back(d);
  return out;
}

}  // namespace ategb
