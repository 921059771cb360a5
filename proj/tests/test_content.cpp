#include <doctest.h>

#include <atomic>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "smrec/content.hpp"
#include "smrec/datagen.hpp"

using namespace smrec;
using content::InvocationPolicy;
using content::MediaItem;

TEST_CASE("should_invoke gate truth table") {
  InvocationPolicy policy{.require_media = true, .min_value_score = 0.5};
  MediaItem item;
  item.has_media = true;
  item.value_score = 0.9;
  CHECK(content::should_invoke(item, policy));

  item.has_media = false;
  CHECK_FALSE(content::should_invoke(item, policy));

  item.has_media = true;
  item.value_score = 0.5;  // boundary is inclusive
  CHECK(content::should_invoke(item, policy));

  item.value_score = 0.49;
  CHECK_FALSE(content::should_invoke(item, policy));

  InvocationPolicy lax{.require_media = false, .min_value_score = 0.0};
  item.has_media = false;
  item.value_score = 0.0;
  CHECK(content::should_invoke(item, lax));
}

TEST_CASE("caption_item refuses gated-out items") {
  content::SyntheticCaptioner captioner([](int64_t) { return std::string("x"); });
  MediaItem item;
  item.has_media = false;
  CHECK_THROWS_AS(content::caption_item(captioner, item, InvocationPolicy{}),
                  content::InvocationSkipped);
}

TEST_CASE("synthetic captioner emits the fixed template text deterministically") {
  datagen::WorldConfig cfg;
  cfg.n_items = 50;
  cfg.n_users = 10;
  cfg.n_impressions = 10;
  auto world = datagen::gen_world(cfg);
  // pin item 0 to the documented topic/attribute for the golden check
  world.items[0].topic = 0;      // dog_play
  world.items[0].attribute = 0;  // park

  content::SyntheticCaptioner captioner(
      [&world](int64_t ref) { return world.caption_text(static_cast<size_t>(ref)); });
  auto c1 = captioner.caption(world.media_item(0));
  CHECK(c1.text == "a man playing with his dog in a park");
  auto c2 = captioner.caption(world.media_item(0));
  CHECK(c1.text == c2.text);
  CHECK(c1.captioner_id == "synthetic");
}

TEST_CASE("remote captioner round trip, schema check and retry exhaustion") {
  const int port = 18473;
  httplib::Server server;
  std::atomic<int> mode{0};  // 0 = ok, 1 = missing caption key, 2 = non-json
  server.Post("/caption", [&mode](const httplib::Request& req, httplib::Response& res) {
    auto body = nlohmann::json::parse(req.body);
    if (mode == 0) {
      res.set_content(
          nlohmann::json{{"item_id", body.at("item_id")}, {"caption", "a dog"}}.dump(),
          "application/json");
    } else if (mode == 1) {
      res.set_content(nlohmann::json{{"item_id", body.at("item_id")}}.dump(),
                      "application/json");
    } else {
      res.set_content("not json", "text/plain");
    }
  });
  std::thread server_thread([&server, port] { server.listen("127.0.0.1", port); });
  server.wait_until_ready();

  content::RemoteEndpointConfig cfg;
  cfg.port = port;
  content::RemoteCaptioner captioner(cfg);
  MediaItem item;
  item.item_id = 7;
  item.media_ref = "img://7";

  auto c = captioner.caption(item);
  CHECK(c.item_id == 7);
  CHECK(c.text == "a dog");

  mode = 1;
  CHECK_THROWS_AS(captioner.caption(item), content::MalformedResponse);
  mode = 2;
  CHECK_THROWS_AS(captioner.caption(item), content::MalformedResponse);

  server.stop();
  server_thread.join();

  // unreachable endpoint: bounded retries then caption_unavailable
  content::RemoteEndpointConfig dead;
  dead.port = port;  // server is down now
  dead.timeout_ms = 50;
  dead.retries = 2;
  content::RemoteCaptioner dead_captioner(dead);
  CHECK_THROWS_AS(dead_captioner.caption(item), content::CaptionUnavailable);
}
