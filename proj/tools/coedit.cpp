#include <cmath>
#include <csignal>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "coedit/harness.hpp"
#include "coedit/metrics.hpp"
#include "coedit/scenariogen.hpp"
#include "coedit/server.hpp"

using namespace coedit;
using nlohmann::json;

namespace {

Server *g_server = nullptr;

void on_signal(int) {
  if (g_server) {
    g_server->stop();
  }
}

double max_error(const WireframeModel &a, const WireframeModel &b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.positions.size(); ++i) {
    worst = std::max(worst, distance(a.positions[i], b.positions[i]));
  }
  return worst;
}

std::string hex(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << v;
  return os.str();
}

void write_json(const json &j, const std::string &path) {
  if (path.empty() || path == "-") {
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::ofstream out(path);
  if (!out) {
    throw LoadError("cannot write " + path);
  }
  out << j.dump(2) << '\n';
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Two-user collaborative wireframe editing server and simulation tools"};
  app.require_subcommand(1);

  std::string strategy = "averaging";
  std::string model_path;
  std::string target_path;
  std::string log_path;
  std::string out_path;
  std::string scenario_path;
  std::string address = "127.0.0.1";
  std::string static_dir;
  unsigned short port = 8080;
  std::uint64_t seed = 1;
  std::size_t messages = 10000;
  int faces = 3;
  int ops = 3;
  std::vector<std::string> logs;

  auto *serve = app.add_subcommand("serve", "Run a live session over WebSocket");
  serve->add_option("--port", port, "Listen port");
  serve->add_option("--address", address, "Listen address");
  serve->add_option("--strategy", strategy, "olr|alr|additive|averaging|intersection|second_user");
  serve->add_option("--model", model_path, "Initial model JSON")->required();
  serve->add_option("--target", target_path, "Target model JSON (defaults to the model)");
  serve->add_option("--log", log_path, "Event log output (JSON lines)");
  serve->add_option("--static", static_dir, "Directory served to plain HTTP requests");

  auto *simulate = app.add_subcommand("simulate", "Run a scripted scenario on the virtual clock");
  simulate->add_option("--scenario", scenario_path, "Scenario JSON")->required();
  simulate->add_option("--out", out_path, "Event log output (JSON lines)")->required();

  auto *replay_cmd = app.add_subcommand("replay", "Re-run a log and compare every event");
  replay_cmd->add_option("--log", log_path, "Event log")->required();

  auto *fuzz_cmd = app.add_subcommand("fuzz", "Random protocol messages with invariant checks");
  fuzz_cmd->add_option("--seed", seed);
  fuzz_cmd->add_option("--messages", messages);
  fuzz_cmd->add_option("--strategy", strategy);

  auto *oracle_cmd = app.add_subcommand("oracle", "Compare the engine with the brute-force oracle");
  oracle_cmd->add_option("--scenario", scenario_path, "Scenario JSON")->required();

  auto *gen = app.add_subcommand("gen", "Generate a cube and a transformed target");
  gen->add_option("--seed", seed);
  gen->add_option("--faces", faces, "Faces to transform (>= 2)");
  gen->add_option("--ops", ops, "Operations per face (>= 2)");
  gen->add_option("--out", out_path, "Base model output")->required();
  gen->add_option("--target", target_path, "Target model output")->required();

  auto *metrics = app.add_subcommand("metrics", "Collaboration metrics over one log per model");
  metrics->add_option("--log", logs, "Event log (repeat per model)")->required();
  metrics->add_option("--out", out_path, "Report output (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*serve) {
      const WireframeModel model = load_model(model_path);
      const WireframeModel target = target_path.empty() ? model : load_model(target_path);
      Session session(model, target, StrategyConfig{parse_strategy(strategy)}, 0);
      Server server(std::move(session), {address, port, log_path, static_dir});
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cerr << "listening on ws://" << address << ':' << server.port() << " (" << strategy
                << ")\n";
      server.run();
      g_server = nullptr;
    } else if (*simulate) {
      const RunResult r = run(load_scenario(scenario_path));
      save_log(r.log, out_path);
      write_json({{"events", r.log.size()},
                  {"ticks", r.tick_count},
                  {"denies", r.deny_count},
                  {"state_hash", hex(r.state_hash)}},
                 "-");
    } else if (*replay_cmd) {
      const std::vector<SessionEvent> log = load_log(log_path);
      const ReplayResult r = replay(log);
      write_json({{"events", log.size()},
                  {"ticks", r.tick_count},
                  {"state_hash", hex(r.state_hash)},
                  {"outputs_match", r.outputs_match}},
                 "-");
      return r.outputs_match ? 0 : 1;
    } else if (*fuzz_cmd) {
      const FuzzReport r = fuzz(seed, messages, parse_strategy(strategy));
      write_json({{"messages", r.messages},
                  {"ticks", r.ticks},
                  {"denies", r.denies},
                  {"protocol_errors", r.protocol_errors},
                  {"violations", r.violations}},
                 "-");
      return r.violations.empty() ? 0 : 1;
    } else if (*oracle_cmd) {
      const Scenario s = load_scenario(scenario_path);
      const double err = max_error(run_quiet(s).final_model, oracle_resolve(s));
      write_json({{"max_error_m", err}, {"agree", err < 1e-6}}, "-");
      return err < 1e-6 ? 0 : 1;
    } else if (*gen) {
      TargetSpec spec;
      spec.seed = seed;
      spec.faces_transformed = faces;
      spec.ops_per_face = ops;
      const WireframeModel base = gen_cube();
      const WireframeModel target = gen_target(base, spec);
      save_model(base, out_path);
      save_model(target, target_path);
    } else if (*metrics) {
      std::vector<std::vector<SessionEvent>> loaded;
      for (const std::string &p : logs) {
        loaded.push_back(load_log(p));
      }
      write_json(to_json(compute_metrics(loaded)), out_path);
    }
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
