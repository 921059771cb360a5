#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace smrec::content {

struct MediaItem {
  uint64_t item_id = 0;
  std::vector<double> visual_embedding;
  bool has_media = true;
  double value_score = 1.0;   // in [0,1], priority proxy for the invocation gate
  int64_t ground_truth_ref = -1;  // index into the synthetic world; -1 for real items
  std::string media_ref;          // opaque handle sent to remote captioners
};

struct Caption {
  uint64_t item_id = 0;
  std::string text;
  std::string captioner_id;
  int64_t created_at = 0;  // seconds
};

struct InvocationPolicy {
  bool require_media = true;
  double min_value_score = 0.0;
};

// Pure function of (item.has_media, item.value_score, policy).
inline bool should_invoke(const MediaItem& item, const InvocationPolicy& policy) {
  if (policy.require_media && !item.has_media) return false;
  return item.value_score >= policy.min_value_score;
}

struct CaptionUnavailable : std::runtime_error {
  explicit CaptionUnavailable(const std::string& what) : std::runtime_error(what) {}
};
struct MalformedResponse : std::runtime_error {
  explicit MalformedResponse(const std::string& what) : std::runtime_error(what) {}
};
struct InvocationSkipped : std::runtime_error {
  explicit InvocationSkipped(uint64_t item_id)
      : std::runtime_error("caption requested for gated-out item " + std::to_string(item_id)) {}
};

class Captioner {
 public:
  virtual ~Captioner() = default;
  virtual Caption caption(const MediaItem& item) const = 0;
  virtual std::string id() const = 0;
};

// Deterministic backend: text is produced by a caller-supplied pure function
// of the item's ground-truth handle (wired to the synthetic world generator).
class SyntheticCaptioner final : public Captioner {
 public:
  using TextFn = std::function<std::string(int64_t ground_truth_ref)>;

  explicit SyntheticCaptioner(TextFn text_fn, int64_t clock = 0)
      : text_fn_(std::move(text_fn)), clock_(clock) {}

  Caption caption(const MediaItem& item) const override;
  std::string id() const override { return "synthetic"; }

 private:
  TextFn text_fn_;
  int64_t clock_;
};

struct RemoteEndpointConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string path = "/caption";
  int timeout_ms = 200;
  int retries = 2;
};

// HTTP client for a real captioning service. Request/response are single JSON
// objects: {"item_id": <int>, "media_ref": <string>} -> {"item_id", "caption"}.
class RemoteCaptioner final : public Captioner {
 public:
  explicit RemoteCaptioner(RemoteEndpointConfig cfg) : cfg_(std::move(cfg)) {}

  Caption caption(const MediaItem& item) const override;
  std::string id() const override { return "remote:" + cfg_.host + ":" + std::to_string(cfg_.port); }

 private:
  RemoteEndpointConfig cfg_;
};

// Gate-respecting entry point; throws InvocationSkipped instead of silently
// captioning an item the policy excludes.
Caption caption_item(const Captioner& captioner, const MediaItem& item,
                     const InvocationPolicy& policy);

}  // namespace smrec::content
