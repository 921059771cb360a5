#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "smrec/tokenize.hpp"

namespace smrec::prof {

enum class EventType : uint8_t { kComment = 0, kLike, kShare, kDwell, kConsume };
inline constexpr size_t kNumEventTypes = 5;

const char* event_type_name(EventType t);
EventType event_type_from_name(const std::string& name);

struct EngagementEvent {
  uint64_t user_id = 0;
  uint64_t item_id = 0;
  EventType event_type = EventType::kComment;
  int64_t timestamp = 0;  // seconds, non-negative
};

struct StaleEvent : std::runtime_error {
  StaleEvent(int64_t event_ts, int64_t last_update)
      : std::runtime_error("event at " + std::to_string(event_ts) +
                           " precedes last_update " + std::to_string(last_update)) {}
};

inline constexpr double kDefaultHalfLifeSeconds = 7.0 * 24 * 3600;
inline constexpr size_t kDefaultTopK = 32;

// Per-user time-decayed token statistics, one weight map per engagement type.
// Snapshots yield the aggregated token-id-list features.
class UserInterestProfile {
 public:
  explicit UserInterestProfile(uint64_t user_id = 0) : user_id_(user_id) {}

  uint64_t user_id() const { return user_id_; }
  int64_t last_update() const { return last_update_; }
  const std::unordered_map<uint32_t, double>& weights(EventType t) const {
    return weights_[static_cast<size_t>(t)];
  }

  // Decays the event type's existing weights by 2^(-dt/half_life) from
  // last_update, then adds +1 for each distinct token in item_tokens.
  void update(const EngagementEvent& event, const tok::TokenIdList& item_tokens,
              double half_life_s = kDefaultHalfLifeSeconds);

  // Top-K token ids by weight, descending; ties broken by ascending id.
  tok::TokenIdList snapshot_topk(EventType t, size_t k = kDefaultTopK) const;

 private:
  uint64_t user_id_;
  std::array<std::unordered_map<uint32_t, double>, kNumEventTypes> weights_;
  int64_t last_update_ = 0;
};

// Line-delimited JSON event log: {"user_id","item_id","event_type","ts"}.
void write_event_log(const std::string& path, const std::vector<EngagementEvent>& events);
std::vector<EngagementEvent> read_event_log(const std::string& path);

}  // namespace smrec::prof
