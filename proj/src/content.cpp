#include "smrec/content.hpp"

#include <json.hpp>
#include <httplib.h>

namespace smrec::content {

Caption SyntheticCaptioner::caption(const MediaItem& item) const {
  Caption c;
  c.item_id = item.item_id;
  c.text = text_fn_(item.ground_truth_ref);
  c.captioner_id = id();
  c.created_at = clock_;
  return c;
}

Caption RemoteCaptioner::caption(const MediaItem& item) const {
  httplib::Client client(cfg_.host, cfg_.port);
  client.set_connection_timeout(0, cfg_.timeout_ms * 1000);
  client.set_read_timeout(0, cfg_.timeout_ms * 1000);
  client.set_write_timeout(0, cfg_.timeout_ms * 1000);

  nlohmann::json req{{"item_id", item.item_id}, {"media_ref", item.media_ref}};
  const std::string body = req.dump();

  for (int attempt = 0; attempt <= cfg_.retries; ++attempt) {
    auto res = client.Post(cfg_.path, body, "application/json");
    if (!res) continue;  // transport failure or timeout; retry
    if (res->status != 200)
      throw MalformedResponse("captioner returned status " + std::to_string(res->status));
    nlohmann::json reply = nlohmann::json::parse(res->body, nullptr, /*allow_exceptions=*/false);
    if (reply.is_discarded() || !reply.is_object() || !reply.contains("item_id") ||
        !reply.contains("caption") || !reply["caption"].is_string())
      throw MalformedResponse("captioner reply missing item_id/caption");
    Caption c;
    c.item_id = reply["item_id"].get<uint64_t>();
    c.text = reply["caption"].get<std::string>();
    c.captioner_id = id();
    c.created_at = 0;
    return c;
  }
  throw CaptionUnavailable("captioner unreachable after " + std::to_string(cfg_.retries + 1) +
                           " attempts");
}

Caption caption_item(const Captioner& captioner, const MediaItem& item,
                     const InvocationPolicy& policy) {
  if (!should_invoke(item, policy)) throw InvocationSkipped(item.item_id);
  return captioner.caption(item);
}

}  // namespace smrec::content
