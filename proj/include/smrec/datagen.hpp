#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "smrec/content.hpp"
#include "smrec/profile.hpp"

namespace smrec::datagen {

struct WorldConfig {
  uint32_t n_topics = 32;
  uint32_t n_attributes = 4;  // contexts per topic
  uint32_t n_users = 2000;
  uint32_t n_items = 10000;
  uint32_t n_impressions = 240000;
  uint32_t visual_coarseness = 4;  // fine topics per visual group
  uint32_t visual_dim = 16;
  double caption_signal_strength = 1.5;  // beta
  double noise_sigma = 0.5;
  uint64_t seed = 42;

  uint32_t n_groups() const { return n_topics / visual_coarseness; }
  void validate() const;
};

struct UnknownItem : std::runtime_error {
  explicit UnknownItem(uint64_t id)
      : std::runtime_error("unknown item: " + std::to_string(id)) {}
};

struct Item {
  uint64_t item_id = 0;
  uint32_t topic = 0;      // fine topic; caption-exclusive signal
  uint32_t attribute = 0;  // contextual attribute
  std::vector<double> visual;  // encodes only the coarse group, plus noise
  double value_score = 1.0;
};

struct User {
  uint64_t user_id = 0;
  std::vector<double> topic_pref;  // affinity per fine topic
};

struct Impression {
  uint64_t user_id = 0;
  uint64_t item_id = 0;
  int64_t timestamp = 0;
  std::array<uint8_t, prof::kNumEventTypes> labels{};
};

struct World {
  WorldConfig config;
  std::vector<Item> items;
  std::vector<User> users;

  content::MediaItem media_item(size_t item_idx) const;
  std::string caption_text(size_t item_idx) const;
  std::string caption_text_by_id(uint64_t item_id) const;
  const char* topic_name(uint32_t topic) const;
};

World gen_world(const WorldConfig& config);

struct Interactions {
  std::vector<Impression> impressions;
  std::vector<prof::EngagementEvent> events;  // one per positive label
};

Interactions gen_interactions(const World& world);

void write_impressions(const std::string& path, const std::vector<Impression>& impressions);
std::vector<Impression> read_impressions(const std::string& path);

void write_world_manifest(const std::string& path, const WorldConfig& config);
WorldConfig read_world_manifest(const std::string& path);

}  // namespace smrec::datagen
