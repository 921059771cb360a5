#include "smrec/profile.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

namespace smrec::prof {

namespace {
constexpr const char* kEventNames[kNumEventTypes] = {"comment", "like", "share", "dwell",
                                                     "consume"};
}

const char* event_type_name(EventType t) { return kEventNames[static_cast<size_t>(t)]; }

EventType event_type_from_name(const std::string& name) {
  for (size_t i = 0; i < kNumEventTypes; ++i)
    if (name == kEventNames[i]) return static_cast<EventType>(i);
  throw std::invalid_argument("unknown event type: " + name);
}

void UserInterestProfile::update(const EngagementEvent& event,
                                 const tok::TokenIdList& item_tokens, double half_life_s) {
  if (event.timestamp < last_update_) throw StaleEvent(event.timestamp, last_update_);
  auto& map = weights_[static_cast<size_t>(event.event_type)];
  const double dt = static_cast<double>(event.timestamp - last_update_);
  if (dt > 0.0 && !map.empty()) {
    const double factor = std::exp2(-dt / half_life_s);
    for (auto& [id, w] : map) w *= factor;
  }
  // distinct tokens count once
  tok::TokenIdList distinct = item_tokens;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  for (uint32_t id : distinct) map[id] += 1.0;
  last_update_ = event.timestamp;
}

tok::TokenIdList UserInterestProfile::snapshot_topk(EventType t, size_t k) const {
  const auto& map = weights_[static_cast<size_t>(t)];
  std::vector<std::pair<uint32_t, double>> entries(map.begin(), map.end());
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  tok::TokenIdList out;
  out.reserve(std::min(k, entries.size()));
  for (size_t i = 0; i < entries.size() && i < k; ++i) out.push_back(entries[i].first);
  return out;
}

void write_event_log(const std::string& path, const std::vector<EngagementEvent>& events) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for write: " + path);
  for (const auto& e : events) {
    nlohmann::json j{{"user_id", e.user_id},
                     {"item_id", e.item_id},
                     {"event_type", event_type_name(e.event_type)},
                     {"ts", e.timestamp}};
    out << j.dump() << '\n';
  }
}

std::vector<EngagementEvent> read_event_log(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::vector<EngagementEvent> events;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line);
    EngagementEvent e;
    e.user_id = j.at("user_id").get<uint64_t>();
    e.item_id = j.at("item_id").get<uint64_t>();
    e.event_type = event_type_from_name(j.at("event_type").get<std::string>());
    e.timestamp = j.at("ts").get<int64_t>();
    events.push_back(e);
  }
  return events;
}

}  // namespace smrec::prof
