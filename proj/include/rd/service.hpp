#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>

#include "rd/canonical.hpp"
#include "rd/games.hpp"
#include "rd/genesis.hpp"
#include "rd/ledger.hpp"
#include "rd/rhythm.hpp"

namespace rd::service {

using Clock = std::function<Micros()>;

inline Micros system_clock_us() {
  return std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::system_clock::now().time_since_epoch())
      .count();
}

struct Options {
  int p_fetch_percent = 50;
  std::int64_t lead_in_ms = 2000;                     // first grid starts this far after session start
  std::optional<std::filesystem::path> chain_file;    // rewritten after every append
  Clock clock = system_clock_us;
};

struct LiveSession {
  std::string id;
  DungeonSession dungeon;
  Micros client_offset_us = 0;  // server time = client time + offset
  std::vector<Json> log;
};

/// Transport-independent gateway: every HTTP route is a thin wrapper over
/// one of these calls. Sessions are serialized by a single mutex.
class Gateway {
 public:
  explicit Gateway(Chain chain, Options opts = {})
      : opts_(std::move(opts)), chain_(std::move(chain)), state_(replay(chain_)) {}

  Micros now() const { return opts_.clock(); }

  /// Body: {"name", optional "seed", optional "offset_samples_us": [..]}.
  /// The offset is the median of the samples (normally 5 ping round trips).
  Json start_session(const Json& body) {
    std::lock_guard lock(mu_);
    if (!body.is_object() || !body.contains("name") || !body["name"].is_string())
      throw Error(ErrorCode::BadName, "name required");
    const std::string name = body["name"].get<std::string>();
    if (!is_valid_name(name)) throw Error(ErrorCode::BadName, "name must be 1..24 printable ASCII characters");
    const std::uint64_t n = next_session_++;
    std::uint64_t seed = derive_seed(0x5e55, n);
    if (auto it = body.find("seed"); it != body.end()) {
      if (!it->is_number_integer() || (!it->is_number_unsigned() && it->get<std::int64_t>() < 0)) throw Error(ErrorCode::Malformed, "seed must be a non-negative integer");
      seed = it->get<std::uint64_t>();
    }
    Micros offset = 0;
    if (auto it = body.find("offset_samples_us"); it != body.end()) offset = median_offset(*it);

    LiveSession live;
    live.id = "s" + std::to_string(n) + "-" + to_hex(sha256(std::to_string(n) + ":" + std::to_string(seed))).substr(0, 8);
    live.client_offset_us = offset;
    const std::int64_t origin_ms = now() / 1000 + opts_.lead_in_ms;
    live.dungeon = start_dungeon(name, seed, opts_.p_fetch_percent, origin_ms);
    Json start_ev{{"type", "start"}, {"name", name}, {"seed", seed}, {"origin_ms", origin_ms},
                  {"p_fetch_percent", opts_.p_fetch_percent}, {"chain_height", chain_.size()}};
    live.log.push_back(std::move(start_ev));
    advance_exploring(live);
    auto [it, _] = sessions_.emplace(live.id, std::move(live));
    return view(it->second);
  }

  /// Body: {"inputs": [{at_us, button}...] in client time, "stance": tag|null}.
  /// While Exploring this enters the next room and inputs are ignored.
  Json submit_window(const std::string& id, const Json& body) {
    std::lock_guard lock(mu_);
    LiveSession& live = find(id);
    if (live.dungeon.terminal()) throw Error(ErrorCode::SessionOver, std::string(to_string(live.dungeon.phase)));
    std::vector<InputEvent> inputs;
    if (auto it = body.find("inputs"); it != body.end()) inputs = trace_from_json(*it);
    for (auto& e : inputs) e.at_us += live.client_offset_us;
    std::optional<Weakness> stance;
    if (auto it = body.find("stance"); it != body.end() && !it->is_null()) {
      if (!it->is_string()) throw Error(ErrorCode::Malformed, "stance must be a string");
      stance = weakness_from_string(it->get<std::string>());
      if (!stance) throw Error(ErrorCode::Malformed, "unknown stance");
    }
    if (live.dungeon.phase == Phase::InBattle) {
      const Micros deadline = live.dungeon.grid.window_deadline(live.dungeon.window_index);
      for (const auto& e : inputs)
        if (e.at_us > deadline) throw Error(ErrorCode::WindowClosed, "input after window deadline");
    }

    auto step = step_dungeon(live.dungeon, state_, inputs, stance);
    live.dungeon = std::move(step.session);
    Json result = step.events.back();
    for (auto& ev : step.events) {
      if (ev["type"] == "spawn") ev["chain_height"] = chain_.size();
      live.log.push_back(std::move(ev));
    }
    Json out = view(live);
    out["result"] = std::move(result);
    return out;
  }

  Json allocate(const std::string& id, const Json& body) {
    std::lock_guard lock(mu_);
    LiveSession& live = find(id);
    auto a = body.is_object() && body.contains("attribute") && body["attribute"].is_string()
                 ? attribute_from_string(body["attribute"].get<std::string>())
                 : std::nullopt;
    if (!a) throw Error(ErrorCode::Malformed, "attribute must be strength|armor|luck|vitality");
    live.dungeon = allocate_session_point(std::move(live.dungeon), *a);
    live.log.push_back(Json{{"type", "allocate"}, {"attribute", std::string(to_string(*a))}});
    return view(live);
  }

  Json retire_session(const std::string& id) {
    std::lock_guard lock(mu_);
    LiveSession& live = find(id);
    live.dungeon = retire(std::move(live.dungeon));
    live.log.push_back(Json{{"type", "retire"}});
    return view(live);
  }

  /// Appends the UploadCharacter transaction to the served chain.
  Json upload(const std::string& id) {
    std::lock_guard lock(mu_);
    LiveSession& live = find(id);
    auto intent = finish_and_upload(live.dungeon);
    const std::string submitter = live.dungeon.character.name;
    const auto last = chain_.last_nonce(submitter);
    const std::uint64_t nonce = last ? *last + 1 : 0;
    Transaction tx = sign(std::move(intent.call), submitter, nonce);
    const std::uint64_t ts = std::max<std::uint64_t>(static_cast<std::uint64_t>(std::max<Micros>(0, now() / 1000)),
                                                     chain_.empty() ? 0 : chain_.tip().timestamp);
    Chain next = append_block(chain_, {tx}, ts);
    const std::size_t before = state_.characters.size();
    state_ = apply_transaction(std::move(state_), tx, next.tip().height);
    chain_ = std::move(next);
    persist();
    live.dungeon = std::move(intent.session);
    Json receipt{{"block_height", chain_.tip().height}, {"block_digest", to_hex(chain_.tip().digest)},
                 {"nonce", nonce}, {"submitter", submitter}};
    if (state_.characters.size() > before) {
      receipt["accepted"] = true;
      receipt["character_id"] = state_.characters.back().id;
    } else {
      receipt["accepted"] = false;
      receipt["rejection"] = state_.rejected.back().reason;
    }
    live.log.push_back(Json{{"type", "upload"}, {"receipt", receipt}});
    return receipt;
  }

  Json session(const std::string& id) {
    std::lock_guard lock(mu_);
    return view(find(id));
  }

  std::vector<Json> event_log(const std::string& id) {
    std::lock_guard lock(mu_);
    return find(id).log;
  }

  /// Schedule message for the streaming channel.
  Json schedule(const std::string& id) {
    std::lock_guard lock(mu_);
    const LiveSession& live = find(id);
    Json j = window_schedule(live.dungeon);
    j["phase"] = std::string(to_string(live.dungeon.phase));
    j["room_index"] = live.dungeon.room_index;
    j["client_offset_us"] = live.client_offset_us;
    return j;
  }

  // --- credential-free ledger browsing -----------------------------------

  Json blocks(std::uint64_t from, std::uint64_t limit = 100) const {
    std::lock_guard lock(mu_);
    Json arr = Json::array();
    for (std::uint64_t h = from; h < chain_.size() && h < from + limit; ++h) arr.push_back(to_json(chain_.blocks()[h]));
    return Json{{"chain_id", chain_.chain_id()}, {"height", chain_.size()}, {"blocks", std::move(arr)}};
  }

  Json characters() const {
    std::lock_guard lock(mu_);
    Json arr = Json::array();
    for (const auto& r : state_.characters) arr.push_back(to_json(r));
    return arr;
  }

  Json character(CharacterId id) const {
    std::lock_guard lock(mu_);
    if (id >= state_.characters.size()) throw Error(ErrorCode::Malformed, "no character " + std::to_string(id));
    return to_json(state_.characters[id]);
  }

  Json state_digest() const {
    std::lock_guard lock(mu_);
    return Json{{"chain_id", chain_.chain_id()}, {"height", chain_.size()}, {"state_digest", rd::state_digest(state_)}};
  }

  Chain chain() const {
    std::lock_guard lock(mu_);
    return chain_;
  }

 private:
  static Micros median_offset(const Json& samples) {
    if (!samples.is_array() || samples.empty()) throw Error(ErrorCode::Malformed, "offset_samples_us must be a non-empty array");
    std::vector<Micros> v;
    for (const auto& s : samples) {
      if (!s.is_number_integer()) throw Error(ErrorCode::Malformed, "offset samples must be integers");
      v.push_back(s.get<Micros>());
    }
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
  }

  LiveSession& find(const std::string& id) {
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw Error(ErrorCode::UnknownSession, id);
    return it->second;
  }

  // The first room is entered at start so the view carries a schedule.
  // Later rooms are entered by a window submission while Exploring, which
  // leaves room to spend skill points first.
  void advance_exploring(LiveSession& live) {
    if (live.dungeon.phase != Phase::Exploring) return;
    auto step = step_dungeon(live.dungeon, state_, {});
    live.dungeon = std::move(step.session);
    for (auto& ev : step.events) {
      ev["chain_height"] = chain_.size();
      live.log.push_back(std::move(ev));
    }
  }

  Json view(const LiveSession& live) const {
    const DungeonSession& d = live.dungeon;
    Json j{{"session_id", live.id},
           {"phase", std::string(to_string(d.phase))},
           {"room_index", d.room_index},
           {"character", to_json(d.character)},
           {"max_health", d.character.max_health()},
           {"tally", to_json(d.tally)},
           {"weakness_if_uploaded", std::string(to_string(weakness_from_tally(d.tally)))},
           {"uploaded", d.uploaded},
           {"client_offset_us", live.client_offset_us}};
    if (d.battle) {
      j["player"] = to_json(d.battle->player);
      j["enemy"] = to_json(d.battle->enemy);
      j["schedule"] = window_schedule(d);
    } else {
      j["player"] = nullptr;
      j["enemy"] = nullptr;
      j["schedule"] = nullptr;
    }
    j["enemy_fetched_id"] = d.enemy_fetched ? Json(*d.enemy_fetched) : Json(nullptr);
    return j;
  }

  void persist() {
    if (opts_.chain_file) write_file(*opts_.chain_file, encode_chain_file(chain_));
  }

  Options opts_;
  mutable std::mutex mu_;
  Chain chain_;
  GenesisState state_;
  std::map<std::string, LiveSession> sessions_;
  std::uint64_t next_session_ = 0;
};

inline int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownSession: return 404;
    case ErrorCode::SessionActive:
    case ErrorCode::SessionOver:
    case ErrorCode::WindowClosed:
    case ErrorCode::NoPoints:
    case ErrorCode::AttributeCap:
    case ErrorCode::BattleOver: return 409;
    default: return 400;
  }
}

namespace detail {

template <class F>
void respond(httplib::Response& res, F&& f) {
  try {
    Json body = f();
    res.set_content(canonical_encode(body), "application/json");
  } catch (const Error& e) {
    res.status = http_status(e.code());
    res.set_content(canonical_encode(Json{{"error", std::string(to_string(e.code()))}, {"detail", e.detail()}}),
                    "application/json");
  } catch (const Json::exception& e) {
    res.status = 400;
    res.set_content(canonical_encode(Json{{"error", "Malformed"}, {"detail", e.what()}}), "application/json");
  }
}

inline Json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return Json::object();
  try {
    return Json::parse(req.body);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::Malformed, e.what());
  }
}

}  // namespace detail

/// Routes:
///   GET  /time                         server clock for the offset handshake
///   POST /sessions                     start a session
///   GET  /sessions/{id}                session view
///   POST /sessions/{id}/window         submit one window of inputs
///   POST /sessions/{id}/allocate       spend a skill point
///   POST /sessions/{id}/retire         end the run voluntarily
///   POST /sessions/{id}/upload         put the character on chain
///   GET  /sessions/{id}/log            JSON lines event log
///   GET  /sessions/{id}/stream         server-sent schedule announcements
///   GET  /chain/blocks?from=N          ledger browsing, no credentials
///   GET  /chain/characters[/{id}]
///   GET  /chain/state-digest
inline void mount(httplib::Server& server, Gateway& gw) {
  using httplib::Request;
  using httplib::Response;
  server.Get("/time", [&gw](const Request&, Response& res) {
    detail::respond(res, [&] { return Json{{"server_us", gw.now()}}; });
  });
  server.Post("/sessions", [&gw](const Request& req, Response& res) {
    detail::respond(res, [&] { return gw.start_session(detail::parse_body(req)); });
  });
  server.Get(R"(/sessions/([^/]+))", [&gw](const Request& req, Response& res) {
    detail::respond(res, [&] { return gw.session(req.matches[1]); });
  });
  server.Post(R"(/sessions/([^/]+)/window)", [&gw](const Request& req, Response& res) {
    detail::respond(res, [&] { return gw.submit_window(req.matches[1], detail::parse_body(req)); });
  });
  server.Post(R"(/sessions/([^/]+)/allocate)", [&gw](const Request& req, Response& res) {
    detail::respond(res, [&] { return gw.allocate(req.matches[1], detail::parse_body(req)); });
  });
  server.Post(R"(/sessions/([^/]+)/retire)", [&gw](const Request& req, Response& res) {
    detail::respond(res, [&] { return gw.retire_session(req.matches[1]); });
  });
  server.Post(R"(/sessions/([^/]+)/upload)", [&gw](const Request& req, Response& res) {
    detail::respond(res, [&] { return gw.upload(req.matches[1]); });
  });
  server.Get(R"(/sessions/([^/]+)/log)", [&gw](const Request& req, Response& res) {
    try {
      std::string body;
      for (const auto& ev : gw.event_log(req.matches[1])) body += canonical_encode(ev) + "\n";
      res.set_content(body, "application/x-ndjson");
    } catch (const Error& e) {
      res.status = http_status(e.code());
      res.set_content(canonical_encode(Json{{"error", std::string(to_string(e.code()))}, {"detail", e.detail()}}),
                      "application/json");
    }
  });
  server.Get(R"(/sessions/([^/]+)/stream)", [&gw](const Request& req, Response& res) {
    const std::string id = req.matches[1];
    try {
      gw.schedule(id);
    } catch (const Error& e) {
      res.status = http_status(e.code());
      return;
    }
    auto last = std::make_shared<std::string>();
    res.set_chunked_content_provider("text/event-stream", [&gw, id, last](std::size_t, httplib::DataSink& sink) {
      Json sched;
      try {
        sched = gw.schedule(id);
      } catch (const Error&) {
        sink.done();
        return false;
      }
      const std::string msg = canonical_encode(sched);
      if (msg != *last) {
        *last = msg;
        const std::string frame = "data: " + msg + "\n\n";
        if (!sink.write(frame.data(), frame.size())) return false;
      }
      const std::string phase = sched["phase"].get<std::string>();
      if (phase == "Dead" || phase == "Retired") {
        sink.done();
        return true;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(50));
      return true;
    });
  });
  server.Get("/chain/blocks", [&gw](const Request& req, Response& res) {
    detail::respond(res, [&] {
      std::uint64_t from = 0;
      if (req.has_param("from")) {
        const std::string v = req.get_param_value("from");
        try {
          std::size_t used = 0;
          from = std::stoull(v, &used);
          if (used != v.size()) throw std::invalid_argument(v);
        } catch (const std::exception&) {
          throw Error(ErrorCode::Malformed, "from must be a non-negative integer");
        }
      }
      return gw.blocks(from);
    });
  });
  server.Get("/chain/characters", [&gw](const Request&, Response& res) {
    detail::respond(res, [&] { return gw.characters(); });
  });
  server.Get(R"(/chain/characters/(\d+))", [&gw](const Request& req, Response& res) {
    detail::respond(res, [&] { return gw.character(std::stoull(req.matches[1])); });
  });
  server.Get("/chain/state-digest", [&gw](const Request&, Response& res) {
    detail::respond(res, [&] { return gw.state_digest(); });
  });
}

}  // namespace rd::service
