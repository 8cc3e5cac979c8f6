#ifndef SEGFILTER_PROFILE_HPP
#define SEGFILTER_PROFILE_HPP

#include <limits>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "segfilter/error.hpp"
#include "segfilter/text.hpp"

namespace segfilter {

/// A user's personalization record: keywords that count for (+1) and
/// against (-1) a segment, and the display threshold.
///
/// Immutable once built. Tracks are disjoint sets of single normalized
/// tokens.
class ProfileBag {
public:
  using Track = std::set<std::string, std::less<>>;

  ProfileBag() = default;

  /// Normalizes every keyword and validates the invariants.
  static ProfileBag create(const std::vector<std::string>& like, const std::vector<std::string>& unlike,
                           int threshold = 0) {
    ProfileBag bag;
    bag.threshold_ = threshold;
    for (const auto& k : like) bag.like_.insert(normalize_keyword(k));
    for (const auto& k : unlike) {
      std::string token = normalize_keyword(k);
      if (bag.like_.count(token) > 0)
        throw ProfileError(ProfileError::Kind::overlapping_tracks,
                           "keyword '" + token + "' appears in both like and unlike tracks", token);
      bag.unlike_.insert(std::move(token));
    }
    return bag;
  }

  const Track& like() const noexcept { return like_; }
  const Track& unlike() const noexcept { return unlike_; }
  int threshold() const noexcept { return threshold_; }

  /// +1 for a liked token, -1 for an unliked one, 0 otherwise.
  int polarity(std::string_view token) const {
    if (like_.find(token) != like_.end()) return 1;
    if (unlike_.find(token) != unlike_.end()) return -1;
    return 0;
  }

  bool operator==(const ProfileBag&) const = default;

private:
  static std::string normalize_keyword(std::string_view raw) {
    auto tokens = tokenize(raw);
    if (tokens.empty())
      throw ProfileError(ProfileError::Kind::empty_keyword,
                         "keyword '" + std::string(raw) + "' has no alphanumeric characters", std::string(raw));
    if (tokens.size() > 1)
      throw ProfileError(ProfileError::Kind::multi_token_keyword,
                         "keyword '" + std::string(raw) + "' splits into " + std::to_string(tokens.size()) +
                             " tokens; only single-token keywords are supported",
                         std::string(raw));
    return std::move(tokens.front());
  }

  Track like_;
  Track unlike_;
  int threshold_ = 0;
};

namespace detail {

inline std::vector<std::string> read_track(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end())
    throw ProfileError(ProfileError::Kind::malformed, std::string("profile is missing the \"") + key + "\" array");
  if (!it->is_array())
    throw ProfileError(ProfileError::Kind::malformed, std::string("\"") + key + "\" must be an array of strings");
  std::vector<std::string> out;
  for (const auto& v : *it) {
    if (!v.is_string())
      throw ProfileError(ProfileError::Kind::malformed, std::string("\"") + key + "\" must contain only strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

} // namespace detail

inline ProfileBag load_profile(std::string_view input) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(input);
  } catch (const nlohmann::json::parse_error& e) {
    throw ProfileError(ProfileError::Kind::malformed, std::string("profile is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ProfileError(ProfileError::Kind::malformed, "profile must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (key != "like" && key != "unlike" && key != "threshold")
      throw ProfileError(ProfileError::Kind::malformed, "unknown profile key \"" + key + "\"");
  }
  int threshold = 0;
  if (auto it = j.find("threshold"); it != j.end()) {
    if (!it->is_number_integer())
      throw ProfileError(ProfileError::Kind::malformed, "\"threshold\" must be an integer");
    const auto wide = it->get<long long>();
    if (wide < std::numeric_limits<int>::min() || wide > std::numeric_limits<int>::max())
      throw ProfileError(ProfileError::Kind::malformed, "\"threshold\" is out of range");
    threshold = static_cast<int>(wide);
  }
  return ProfileBag::create(detail::read_track(j, "like"), detail::read_track(j, "unlike"), threshold);
}

/// Canonical form: keys like, unlike, threshold; sorted tracks; two-space
/// indentation; trailing newline.
inline std::string save_profile(const ProfileBag& bag) {
  nlohmann::ordered_json j;
  j["like"] = nlohmann::ordered_json::array();
  for (const auto& k : bag.like()) j["like"].push_back(k);
  j["unlike"] = nlohmann::ordered_json::array();
  for (const auto& k : bag.unlike()) j["unlike"].push_back(k);
  j["threshold"] = bag.threshold();
  return j.dump(2) + "\n";
}

} // namespace segfilter

#endif
