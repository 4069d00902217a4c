// fieldnet: simulate, serve, plan, calibrate, inject, report.
// Exit codes: 0 success, 1 validation, 2 runtime.

#include <atomic>
#include <chrono>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <httplib.h>

#include "fieldnet/analysis.hpp"
#include "fieldnet/cloud_api.hpp"
#include "fieldnet/deployment.hpp"
#include "fieldnet/live.hpp"
#include "fieldnet/report.hpp"
#include "fieldnet/scenario_io.hpp"

namespace fs = std::filesystem;
using namespace fieldnet;

namespace {

constexpr int kOk = 0;
constexpr int kValidation = 1;
constexpr int kRuntime = 2;

httplib::Server* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

Seconds parse_duration(const std::string& s) {
  YAML::Node n(s);
  return scenario_yaml::duration(n, "duration");
}

analysis::Series read_series(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw NotFoundError("cannot read " + p.string());
  analysis::Series out;
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    const auto tok = split_tokens(line);
    if (tok.empty() || tok[0].front() == '#') continue;
    if (tok.size() != 2) throw ValidationError(p.string() + ":" + std::to_string(no) + ": expected 't value'");
    try {
      out.push_back({parse_number<std::int64_t>(tok[0], "t"), parse_number<double>(tok[1], "value")});
    } catch (const ValidationError& e) {
      throw ValidationError(p.string() + ":" + std::to_string(no) + ": " + e.what());
    }
  }
  return out;
}

void write_text(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  out << text;
}

struct SimulateArgs {
  std::string scenario, store, report, until;
  std::optional<std::uint64_t> seed;
};

int simulate(const SimulateArgs& a) {
  Scenario sc = a.scenario.empty() ? default_scenario() : load_scenario(a.scenario);
  if (a.seed) sc.seed = *a.seed;
  if (!a.until.empty()) {
    // A shortened run drops whatever was scheduled past its end.
    sc.duration = parse_duration(a.until);
    const Seconds end = sc.duration;
    std::erase_if(sc.faults, [end](const FaultEvent& f) { return f.at > end; });
    std::erase_if(sc.commands, [end](const CommandEvent& c) { return c.at > end; });
    std::erase_if(sc.restarts, [end](Seconds r) { return r > end; });
  }
  DeploymentOptions opt;
  if (!a.store.empty()) opt.store_dir = fs::path(a.store);
  Deployment dep(sc, opt);
  dep.run();
  const auto json = report::build(dep.run_data());
  const std::string text = json.dump(2) + "\n";
  if (a.report.empty()) std::cout << text;
  else write_text(a.report, text);
  if (!json["closure_ok"].get<bool>()) {
    std::cerr << "fieldnet: accounting closure violated\n";
    return kRuntime;
  }
  return kOk;
}

struct ServeArgs {
  std::string store, scenario, assets, host = "127.0.0.1";
  int port = 8080;
};

int serve(const ServeArgs& a) {
  fs::create_directories(a.store);
  auto store = cloud::CloudStore::open(a.store);
  std::unique_ptr<LiveRun> live;
  if (!a.scenario.empty()) live = std::make_unique<LiveRun>(load_scenario(a.scenario), store);

  const auto started = std::chrono::steady_clock::now();
  api::Hooks hooks;
  if (live) {
    hooks.now = [&live] { return live->now(); };
    hooks.inject = [&live](const FaultEvent& f) { live->inject(f); };
  } else {
    hooks.now = [started] {
      return static_cast<std::int64_t>(
          std::chrono::duration_cast<std::chrono::seconds>(std::chrono::steady_clock::now() - started).count());
    };
  }

  httplib::Server srv;
  // httplib's default adds SO_REUSEPORT, which would let a second server
  // silently share the port (and split requests between stores).
  srv.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
  });
  api::mount(srv, store, hooks);
  if (!a.assets.empty() && !srv.set_mount_point("/", a.assets))
    throw ValidationError("assets directory " + a.assets + " does not exist");
  if (!srv.bind_to_port(a.host, a.port)) throw Error("cannot bind " + a.host + ":" + std::to_string(a.port));

  g_server = &srv;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cerr << "fieldnet: serving " << a.store << " on " << a.host << ':' << a.port << "\n";
  if (live) live->start();
  srv.listen_after_bind();
  if (live) live->stop();
  g_server = nullptr;
  return kOk;
}

struct PlanArgs {
  double capacity = 7800, active = 130, sleep = 45, awake_s = 5, sleep_s = 300, derating = 0.7;
};

int plan(const PlanArgs& a) {
  const auto p = analysis::plan(a.capacity, node::PowerProfile{a.active, a.sleep, 0, 0, 0},
                                node::DutyCycle{a.sleep_s, a.awake_s}, a.derating);
  std::cout << "avg_current_mA " << format_double(p.avg_mA) << "\n"
            << "lifetime_h " << format_double(p.hours) << "\n";
  return kOk;
}

int calibrate(const std::string& cheap, const std::string& ref, std::optional<std::int64_t> tolerance) {
  const auto c = read_series(cheap);
  const auto r = read_series(ref);
  const auto fit = tolerance ? analysis::fit_calibration(c, r, *tolerance) : analysis::fit_calibration(c, r);
  std::cout << "slope " << format_double(fit.slope) << "\n"
            << "intercept " << format_double(fit.intercept) << "\n"
            << "r_squared " << format_double(fit.r_squared) << "\n"
            << "n_points " << fit.n_points << "\n";
  return kOk;
}

struct InjectArgs {
  std::string at, node_id, fault, channel, url = "http://127.0.0.1:8080";
  std::optional<double> rate;
};

int inject(const InjectArgs& a) {
  const auto kind = node::parse_fault_kind(a.fault);
  std::string body = format_double(parse_duration(a.at)) + ' ' + a.node_id + ' ' + node::to_string(kind);
  if (!a.channel.empty() || a.rate) body += ' ' + (a.channel.empty() ? std::string("-") : a.channel);
  if (a.rate) body += ' ' + format_double(*a.rate);
  httplib::Client cli(a.url);
  auto res = cli.Post("/sim/faults", body + "\n", "text/plain");
  if (!res) throw Error("cannot reach " + a.url);
  if (res->status == 202) return kOk;
  std::cerr << "fieldnet: " << res->body;
  return res->status == 400 || res->status == 404 ? kValidation : kRuntime;
}

int report_cmd(const std::string& store, const std::string& out) {
  const std::string text = report::render(report::load(store));
  if (out.empty()) std::cout << text;
  else write_text(out, text);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fieldnet: catchment sensor network simulator and cloud store"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "run a scenario to completion and write a run report");
  s->add_option("--scenario", sim.scenario, "scenario file (default: built-in deployment)");
  s->add_option("--seed", sim.seed, "override the scenario seed");
  s->add_option("--until", sim.until, "override the duration, e.g. 7d");
  s->add_option("--store", sim.store, "directory for the cloud store and queue logs");
  s->add_option("--report", sim.report, "write the report here instead of stdout");

  ServeArgs srv;
  auto* v = app.add_subcommand("serve", "serve the cloud API over a store directory");
  v->add_option("--store", srv.store, "store directory (created if missing)")->required();
  v->add_option("--port", srv.port, "TCP port")->check(CLI::Range(1, 65535));
  v->add_option("--host", srv.host, "bind address");
  v->add_option("--scenario", srv.scenario, "feed the store from a live simulation of this scenario");
  v->add_option("--assets", srv.assets, "static console assets to serve at /");

  PlanArgs pl;
  auto* p = app.add_subcommand("plan", "duty-cycle current and planned battery lifetime");
  p->add_option("--capacity", pl.capacity, "battery capacity, mAh");
  p->add_option("--active-ma", pl.active, "awake current, mA");
  p->add_option("--sleep-ma", pl.sleep, "sleep current, mA");
  p->add_option("--awake-s", pl.awake_s, "awake time per cycle, s");
  p->add_option("--sleep-s", pl.sleep_s, "sleep time per cycle, s");
  p->add_option("--derating", pl.derating, "capacity derating factor");

  std::string cheap, ref;
  std::optional<std::int64_t> tolerance;
  auto* c = app.add_subcommand("calibrate", "fit reference ~ slope * cheap + intercept");
  c->add_option("--cheap", cheap, "cheap sensor series, 't value' lines")->required();
  c->add_option("--ref", ref, "reference sensor series, 't value' lines")->required();
  c->add_option("--tolerance", tolerance, "time-join tolerance, s (default: half the cheap sampling period)");

  InjectArgs inj;
  auto* i = app.add_subcommand("inject", "inject a fault into a live simulation");
  i->add_option("--at", inj.at, "simulated time, e.g. 2h")->required();
  i->add_option("--node", inj.node_id, "node id")->required();
  i->add_option("--fault", inj.fault, "fault kind")->required();
  i->add_option("--channel", inj.channel, "channel, for corrosion");
  i->add_option("--rate", inj.rate, "drift or false-positive rate");
  i->add_option("--url", inj.url, "API base URL");

  std::string rstore, rout;
  auto* r = app.add_subcommand("report", "recompute the run report from a store directory");
  r->add_option("--store", rstore, "store directory")->required();
  r->add_option("--out", rout, "write the report here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  try {
    if (*s) return simulate(sim);
    if (*v) return serve(srv);
    if (*p) return plan(pl);
    if (*c) return calibrate(cheap, ref, tolerance);
    if (*i) return inject(inj);
    if (*r) return report_cmd(rstore, rout);
  } catch (const ValidationError& e) {
    std::cerr << "fieldnet: " << e.what() << "\n";
    return kValidation;
  } catch (const NotFoundError& e) {
    std::cerr << "fieldnet: " << e.what() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "fieldnet: " << e.what() << "\n";
    return kRuntime;
  }
  return kOk;
}
