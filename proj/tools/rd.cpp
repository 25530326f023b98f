// rd: command line front end for the simulator, ledger tools, offline play
// and the live-play server.

#include <csignal>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "rd/rd.hpp"
#include "rd/service.hpp"

namespace {

namespace fs = std::filesystem;

int sim_run(const fs::path& scenario_path, const fs::path& out_dir) {
  const rd::Scenario sc = rd::scenario_from_toml(rd::read_file(scenario_path));
  const rd::ScenarioResult result = rd::run_scenario(sc);
  rd::write_scenario_outputs(out_dir, result);
  for (const auto& chain : result.chains)
    std::cout << rd::chain_file_name(chain.chain_id()) << " blocks=" << chain.size()
              << " txs=" << chain.transaction_count() << " state=" << rd::state_digest(rd::replay(chain)) << "\n";
  std::cout << "metrics written to " << (out_dir / "metrics.json").string() << "\n";
  return 0;
}

int ledger_verify(const fs::path& file) {
  const bool ok = rd::verify_chain_bytes(rd::read_file(file));
  std::cout << (ok ? "valid" : "invalid") << "\n";
  return ok ? 0 : 1;
}

int ledger_replay(const fs::path& file) {
  const rd::Chain chain = rd::load_chain(file);
  std::cout << rd::state_digest(rd::replay(chain)) << "\n";
  return 0;
}

// Plays one session against a recorded trace: every window receives the
// trace events that fall inside its span. The run retires once the trace
// has nothing left for the coming window.
int play(const fs::path& trace_file, std::uint64_t seed, const std::string& name,
         const std::optional<fs::path>& chain_file, int p_fetch) {
  const auto trace = rd::trace_from_json(rd::Json::parse(rd::read_file(trace_file)));
  rd::GenesisState state = chain_file ? rd::replay(rd::load_chain(*chain_file)) : rd::GenesisState::for_chains({0});
  rd::DungeonSession s = rd::start_dungeon(name, seed, p_fetch);
  const rd::Micros last_input = trace.empty() ? -1 : trace.back().at_us;
  auto emit = [](const std::vector<rd::Json>& events) {
    for (const auto& ev : events) std::cout << rd::canonical_encode(ev) << "\n";
  };
  while (!s.terminal()) {
    if (s.phase == rd::Phase::Exploring) {
      if (s.clock_ms * 1000 > last_input) {
        s = rd::retire(std::move(s));
        break;
      }
      auto r = rd::step_dungeon(std::move(s), state, {});
      emit(r.events);
      s = std::move(r.session);
      continue;
    }
    const rd::Micros lo = s.grid.judged_beat_time(s.window_index, 0) - s.grid.outer_window();
    const rd::Micros hi = s.grid.window_deadline(s.window_index);
    if (lo > last_input) {
      s = rd::retire(std::move(s));
      break;
    }
    auto first = std::lower_bound(trace.begin(), trace.end(), lo, [](const auto& e, rd::Micros t) { return e.at_us < t; });
    auto last = std::upper_bound(trace.begin(), trace.end(), hi, [](rd::Micros t, const auto& e) { return t < e.at_us; });
    std::vector<rd::InputEvent> window(first, last);
    const rd::Weakness w = s.battle->enemy.character.weakness;
    auto r = rd::step_dungeon(std::move(s), state, window, w == rd::Weakness::None ? std::nullopt : std::optional(w));
    emit(r.events);
    s = std::move(r.session);
  }
  rd::Json summary{{"type", "summary"},
                   {"phase", std::string(rd::to_string(s.phase))},
                   {"room_index", s.room_index},
                   {"character", rd::to_json(rd::finished_character(s))},
                   {"tally", rd::to_json(s.tally)}};
  std::cout << rd::canonical_encode(summary) << "\n";
  return 0;
}

httplib::Server* g_server = nullptr;

int serve(const std::string& host, int port, const fs::path& chain_file, int p_fetch) {
  rd::Chain chain = fs::exists(chain_file) ? rd::load_chain(chain_file) : rd::Chain(rd::chain_id_from_path(chain_file));
  rd::service::Options opts;
  opts.chain_file = chain_file;
  opts.p_fetch_percent = p_fetch;
  rd::service::Gateway gateway(std::move(chain), opts);
  httplib::Server server;
  rd::service::mount(server, gateway);
  g_server = &server;
  std::signal(SIGINT, [](int) {
    if (g_server) g_server->stop();
  });
  std::cerr << "serving " << chain_file.string() << " on http://" << host << ":" << port << "\n";
  if (!server.listen(host, port)) {
    std::cerr << "cannot listen on " << host << ":" << port << "\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rhythm Dungeon ledger, simulator and live-play server"};
  app.require_subcommand(1);

  auto* sim = app.add_subcommand("sim", "Scenario simulation");
  sim->require_subcommand(1);
  auto* sim_run_cmd = sim->add_subcommand("run", "Run a scenario file");
  std::string scenario_path;
  std::string out_dir = "out";
  sim_run_cmd->add_option("scenario", scenario_path, "Scenario TOML file")->required()->check(CLI::ExistingFile);
  sim_run_cmd->add_option("--out", out_dir, "Output directory");

  auto* ledger = app.add_subcommand("ledger", "Chain file tools");
  ledger->require_subcommand(1);
  std::string ledger_file;
  auto* verify_cmd = ledger->add_subcommand("verify", "Check a chain file; exit 1 if invalid");
  verify_cmd->add_option("file", ledger_file)->required()->check(CLI::ExistingFile);
  auto* replay_cmd = ledger->add_subcommand("replay", "Replay a chain file and print its state digest");
  replay_cmd->add_option("file", ledger_file)->required()->check(CLI::ExistingFile);

  auto* play_cmd = app.add_subcommand("play", "Play one deterministic session from an input trace");
  std::string trace_file;
  std::uint64_t seed = 0;
  std::string name = "hero";
  std::string play_chain;
  int p_fetch = 50;
  play_cmd->add_option("--trace", trace_file, "Input trace JSON")->required()->check(CLI::ExistingFile);
  play_cmd->add_option("--seed", seed, "Session seed");
  play_cmd->add_option("--name", name, "Character name");
  play_cmd->add_option("--chain", play_chain, "Chain file to fetch enemies from")->check(CLI::ExistingFile);
  play_cmd->add_option("--p-fetch", p_fetch, "Percent chance to fetch an enemy from the contract")
      ->check(CLI::Range(0, 100));

  auto* serve_cmd = app.add_subcommand("serve", "Run the live-play HTTP server");
  int port = 8080;
  std::string host = "127.0.0.1";
  std::string serve_chain;
  serve_cmd->add_option("--port", port)->required();
  serve_cmd->add_option("--chain", serve_chain, "Chain file (created if missing)")->required();
  serve_cmd->add_option("--host", host);
  serve_cmd->add_option("--p-fetch", p_fetch)->check(CLI::Range(0, 100));

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sim_run_cmd) return sim_run(scenario_path, out_dir);
    if (*verify_cmd) return ledger_verify(ledger_file);
    if (*replay_cmd) return ledger_replay(ledger_file);
    if (*play_cmd)
      return play(trace_file, seed, name, play_chain.empty() ? std::nullopt : std::optional<fs::path>(play_chain), p_fetch);
    if (*serve_cmd) return serve(host, port, serve_chain, p_fetch);
  } catch (const rd::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
