#include "smrec/datagen.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "smrec/rng.hpp"

namespace smrec::datagen {

namespace {

// Fixed caption templates: "a <subject> <verb> <object> in a <attribute>".
// Subject/verb/object words are unique to their topic so captions are the
// only carrier of fine-topic signal; attribute words are shared context.
struct TopicWords {
  const char* name;
  const char* subject;
  const char* verb;
  const char* object;
};

constexpr TopicWords kTopics[] = {
    {"dog_play", "man", "playing", "with his dog"},
    {"cat_nap", "kitten", "napping", "on a cushion"},
    {"surfing", "surfer", "riding", "a tall wave"},
    {"cooking", "chef", "grilling", "fresh salmon"},
    {"painting", "artist", "sketching", "bright murals"},
    {"soccer", "goalie", "blocking", "penalty kicks"},
    {"gardening", "florist", "pruning", "rose bushes"},
    {"music", "violinist", "rehearsing", "classical sonatas"},
    {"hiking", "climber", "ascending", "rocky ridges"},
    {"fishing", "angler", "casting", "silver lures"},
    {"baking", "baker", "kneading", "sourdough loaves"},
    {"dancing", "ballerina", "twirling", "graceful pirouettes"},
    {"photography", "photographer", "framing", "candid portraits"},
    {"cycling", "cyclist", "pedaling", "steep switchbacks"},
    {"reading", "librarian", "shelving", "antique novels"},
    {"skiing", "skier", "carving", "powdery slopes"},
    {"yoga", "instructor", "stretching", "balanced poses"},
    {"chess", "grandmaster", "studying", "endgame puzzles"},
    {"pottery", "potter", "shaping", "ceramic vases"},
    {"astronomy", "stargazer", "tracking", "distant comets"},
    {"swimming", "swimmer", "gliding", "backstroke laps"},
    {"robotics", "engineer", "wiring", "humanoid robots"},
    {"birding", "birder", "spotting", "crimson finches"},
    {"skating", "skater", "landing", "kickflip tricks"},
    {"brewing", "barista", "steaming", "espresso shots"},
    {"knitting", "knitter", "looping", "woolen scarves"},
    {"drumming", "drummer", "pounding", "thunderous rhythms"},
    {"magic", "magician", "shuffling", "marked cards"},
    {"farming", "farmer", "herding", "spotted goats"},
    {"bouldering", "boulderer", "gripping", "chalky holds"},
    {"sailing", "sailor", "trimming", "billowing sails"},
    {"running", "sprinter", "chasing", "personal records"},
};
constexpr size_t kMaxTopics = sizeof(kTopics) / sizeof(kTopics[0]);

constexpr const char* kAttributes[] = {"park",   "kitchen", "stadium", "studio",
                                       "harbor", "meadow",  "plaza",   "loft"};
constexpr size_t kMaxAttributes = sizeof(kAttributes) / sizeof(kAttributes[0]);

// Task-head logit offsets; calibrated so default-config positive rates land
// in [0.02, 0.25] per task.
constexpr std::array<double, prof::kNumEventTypes> kTaskBias = {-3.5, -2.2, -3.0, -1.8, -2.0};

constexpr double kPreferredAffinity = 2.0;
constexpr double kBackgroundAffinity = -1.0;
// spread of the within-group fine-topic popularity planted into preferences
constexpr double kTopicPopularityScale = 1.5;
constexpr uint32_t kPreferredTopicsPerUser = 4;
constexpr int64_t kImpressionSpacingSeconds = 60;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

void WorldConfig::validate() const {
  if (n_topics == 0 || n_users == 0 || n_items == 0 || n_impressions == 0)
    throw std::invalid_argument("world config: counts must be positive");
  if (n_topics > kMaxTopics)
    throw std::invalid_argument("world config: at most " + std::to_string(kMaxTopics) +
                                " topics are defined");
  if (n_attributes == 0 || n_attributes > kMaxAttributes)
    throw std::invalid_argument("world config: n_attributes out of range");
  if (visual_coarseness == 0 || n_topics % visual_coarseness != 0)
    throw std::invalid_argument("world config: n_topics must be divisible by visual_coarseness");
  if (n_groups() > visual_dim)
    throw std::invalid_argument("world config: visual_dim too small for the group one-hot");
  if (caption_signal_strength < 0.0)
    throw std::invalid_argument("world config: caption_signal_strength must be >= 0");
}

content::MediaItem World::media_item(size_t item_idx) const {
  const Item& item = items.at(item_idx);
  content::MediaItem m;
  m.item_id = item.item_id;
  m.visual_embedding = item.visual;
  m.has_media = true;
  m.value_score = item.value_score;
  m.ground_truth_ref = static_cast<int64_t>(item_idx);
  m.media_ref = "synthetic://" + std::to_string(item.item_id);
  return m;
}

const char* World::topic_name(uint32_t topic) const { return kTopics[topic].name; }

std::string World::caption_text(size_t item_idx) const {
  if (item_idx >= items.size()) throw UnknownItem(item_idx);
  const Item& item = items[item_idx];
  const TopicWords& t = kTopics[item.topic];
  std::string out = "a ";
  out += t.subject;
  out += ' ';
  out += t.verb;
  out += ' ';
  out += t.object;
  out += " in a ";
  out += kAttributes[item.attribute];
  return out;
}

std::string World::caption_text_by_id(uint64_t item_id) const {
  // item ids are assigned densely at generation time
  if (item_id >= items.size() || items[item_id].item_id != item_id) throw UnknownItem(item_id);
  return caption_text(static_cast<size_t>(item_id));
}

World gen_world(const WorldConfig& config) {
  config.validate();
  World world;
  world.config = config;
  Rng rng(config.seed);

  world.items.reserve(config.n_items);
  for (uint32_t i = 0; i < config.n_items; ++i) {
    Item item;
    item.item_id = i;
    item.topic = static_cast<uint32_t>(rng.uniform_int(config.n_topics));
    item.attribute = static_cast<uint32_t>(rng.uniform_int(config.n_attributes));
    item.value_score = rng.uniform();
    item.visual.assign(config.visual_dim, 0.0);
    item.visual[item.topic / config.visual_coarseness] = 1.0;
    for (double& v : item.visual) v += config.noise_sigma * rng.normal();
    world.items.push_back(std::move(item));
  }

  // Fine-topic popularity, centered within each coarse group so the visual
  // one-hot carries none of it: captions are the only feature that can see it.
  const uint32_t g = config.visual_coarseness;
  std::vector<double> popularity(config.n_topics, 0.0);
  if (g > 1) {
    std::vector<uint32_t> slots(g);
    for (uint32_t group = 0; group * g < config.n_topics; ++group) {
      for (uint32_t j = 0; j < g; ++j) slots[j] = j;
      rng.shuffle(slots);
      for (uint32_t j = 0; j < g; ++j)
        popularity[group * g + j] =
            kTopicPopularityScale * (static_cast<double>(slots[j]) - (g - 1) / 2.0) / (g / 2.0);
    }
  }

  world.users.reserve(config.n_users);
  for (uint32_t u = 0; u < config.n_users; ++u) {
    User user;
    user.user_id = u;
    user.topic_pref.assign(config.n_topics, kBackgroundAffinity);
    for (uint32_t p = 0; p < std::min(kPreferredTopicsPerUser, config.n_topics); ++p) {
      // rejection-free would bias later draws; repeats just re-set the slot
      uint32_t t = static_cast<uint32_t>(rng.uniform_int(config.n_topics));
      user.topic_pref[t] = kPreferredAffinity;
    }
    for (uint32_t t = 0; t < config.n_topics; ++t) user.topic_pref[t] += popularity[t];
    world.users.push_back(std::move(user));
  }
  return world;
}

Interactions gen_interactions(const World& world) {
  const WorldConfig& cfg = world.config;
  Rng rng(cfg.seed ^ 0x1a2b3c4d5e6f7788ull);
  Interactions out;
  out.impressions.reserve(cfg.n_impressions);

  for (uint32_t i = 0; i < cfg.n_impressions; ++i) {
    Impression imp;
    imp.user_id = rng.uniform_int(cfg.n_users);
    imp.item_id = rng.uniform_int(cfg.n_items);
    imp.timestamp = static_cast<int64_t>(i) * kImpressionSpacingSeconds;

    const User& user = world.users[imp.user_id];
    const Item& item = world.items[imp.item_id];
    const double affinity = user.topic_pref[item.topic];
    for (size_t k = 0; k < prof::kNumEventTypes; ++k) {
      const double z = cfg.caption_signal_strength * affinity + kTaskBias[k] +
                       cfg.noise_sigma * rng.normal();
      imp.labels[k] = rng.uniform() < sigmoid(z) ? 1 : 0;
      if (imp.labels[k]) {
        prof::EngagementEvent e;
        e.user_id = imp.user_id;
        e.item_id = imp.item_id;
        e.event_type = static_cast<prof::EventType>(k);
        e.timestamp = imp.timestamp;
        out.events.push_back(e);
      }
    }
    out.impressions.push_back(imp);
  }
  return out;
}

void write_impressions(const std::string& path, const std::vector<Impression>& impressions) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for write: " + path);
  for (const auto& imp : impressions) {
    nlohmann::json j{{"user_id", imp.user_id},
                     {"item_id", imp.item_id},
                     {"ts", imp.timestamp},
                     {"labels", imp.labels}};
    out << j.dump() << '\n';
  }
}

std::vector<Impression> read_impressions(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::vector<Impression> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line);
    Impression imp;
    imp.user_id = j.at("user_id").get<uint64_t>();
    imp.item_id = j.at("item_id").get<uint64_t>();
    imp.timestamp = j.at("ts").get<int64_t>();
    auto labels = j.at("labels").get<std::vector<uint8_t>>();
    if (labels.size() != prof::kNumEventTypes)
      throw std::runtime_error("impression record needs 5 labels");
    for (size_t k = 0; k < prof::kNumEventTypes; ++k) imp.labels[k] = labels[k];
    out.push_back(imp);
  }
  return out;
}

void write_world_manifest(const std::string& path, const WorldConfig& config) {
  nlohmann::json j{{"n_topics", config.n_topics},
                   {"n_attributes", config.n_attributes},
                   {"n_users", config.n_users},
                   {"n_items", config.n_items},
                   {"n_impressions", config.n_impressions},
                   {"visual_coarseness", config.visual_coarseness},
                   {"visual_dim", config.visual_dim},
                   {"caption_signal_strength", config.caption_signal_strength},
                   {"noise_sigma", config.noise_sigma},
                   {"seed", config.seed}};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for write: " + path);
  out << j.dump(2) << '\n';
}

WorldConfig read_world_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  nlohmann::json j = nlohmann::json::parse(in);
  WorldConfig c;
  c.n_topics = j.at("n_topics").get<uint32_t>();
  c.n_attributes = j.at("n_attributes").get<uint32_t>();
  c.n_users = j.at("n_users").get<uint32_t>();
  c.n_items = j.at("n_items").get<uint32_t>();
  c.n_impressions = j.at("n_impressions").get<uint32_t>();
  c.visual_coarseness = j.at("visual_coarseness").get<uint32_t>();
  c.visual_dim = j.at("visual_dim").get<uint32_t>();
  c.caption_signal_strength = j.at("caption_signal_strength").get<double>();
  c.noise_sigma = j.at("noise_sigma").get<double>();
  c.seed = j.at("seed").get<uint64_t>();
  c.validate();
  return c;
}

}  // namespace smrec::datagen
