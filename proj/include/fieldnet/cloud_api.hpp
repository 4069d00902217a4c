#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <httplib.h>

#include "fieldnet/cloudcore.hpp"
#include "fieldnet/scenario.hpp"

namespace fieldnet::api {

// Plain-text request/response API over the cloud store. Every payload is
// line-delimited records of space-separated fields; field order per route:
//
//   POST  /ingest                 body: packet lines        -> "node_id seq" per acked key
//   POST  /nodes                  body: descriptor line     -> 201, stored descriptor
//   GET   /nodes                                            -> descriptor lines
//   GET   /nodes/{id}                                       -> descriptor line
//   PATCH /nodes/{id}             body: "position lat lon" | "groups a,b" | "notes text" | "period s"
//   GET   /nodes/{id}/health                                -> health line
//   POST  /nodes/{id}/command     body: "power_cycle" | "set_period s"  -> 202
//   POST  /groups/{name}/rate     body: "period_s s"        -> "group period_s issued_t n members..."
//   GET   /groups/{name}/commands                           -> "issued_t period_s node_id staged|delivered t|-"
//   GET   /health/silent                                    -> health lines
//   GET   /series?node&channel&from&to                      -> "t value"
//   GET   /export/semantic?node&seq                         -> "subject predicate object"
//   GET   /quarantine                                       -> count
//   POST  /sim/faults             body: "at node_id kind [channel|- [rate]]" (live mode)
//
// Health line: node_id last_heard|- battery_mv period_s silent|reporting.
// Errors come back as "error: <message>" with 400 (validation), 404 (not
// found), 409 (no live simulation) or 500.

struct Hooks {
  std::function<std::int64_t()> now;
  std::function<void(const FaultEvent&)> inject;  // empty outside live mode
};

inline std::string health_line(const cloud::NodeHealth& h) {
  return h.node_id + ' ' + (h.last_heard ? std::to_string(*h.last_heard) : "-") + ' ' + std::to_string(h.battery_mv) +
         ' ' + std::to_string(h.period_s) + ' ' + (h.silent ? "silent" : "reporting") + '\n';
}

inline std::vector<std::string> body_lines(const std::string& body) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < body.size()) {
    std::size_t j = body.find('\n', i);
    if (j == std::string::npos) j = body.size();
    std::string line = body.substr(i, j - i);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") != std::string::npos) out.push_back(std::move(line));
    i = j + 1;
  }
  return out;
}

inline cloud::NodePatch parse_patch(const std::string& body) {
  cloud::NodePatch p;
  for (const auto& line : body_lines(body)) {
    const auto tok = split_tokens(line);
    const auto key = tok.at(0);
    if (key == "position") {
      if (tok.size() != 3) throw ValidationError("position takes lat lon");
      p.position = env::GeoPoint{parse_number<double>(tok[1], "lat"), parse_number<double>(tok[2], "lon")};
    } else if (key == "groups") {
      if (tok.size() != 2) throw ValidationError("groups takes one comma-separated list");
      p.groups = cloud::parse_groups(tok[1]);
    } else if (key == "notes") {
      const auto start = line.find("notes") + 5;
      auto text = line.substr(std::min(line.size(), start + 1));
      p.notes = text;
    } else if (key == "period") {
      if (tok.size() != 2) throw ValidationError("period takes seconds");
      p.nominal_period_s = parse_number<std::int64_t>(tok[1], "period");
    } else {
      throw ValidationError("unknown patch field '" + std::string(key) + "'");
    }
  }
  return p;
}

inline Command parse_command(const std::string& body) {
  const auto lines = body_lines(body);
  if (lines.size() != 1) throw ValidationError("command body must be one line");
  const auto tok = split_tokens(lines[0]);
  if (tok[0] == "power_cycle" && tok.size() == 1) return {Command::Kind::power_cycle, 0};
  if (tok[0] == "set_period" && tok.size() == 2)
    return {Command::Kind::set_period, parse_number<std::int64_t>(tok[1], "period")};
  throw ValidationError("unknown command '" + lines[0] + "'");
}

inline FaultEvent parse_fault(const std::string& body) {
  const auto lines = body_lines(body);
  if (lines.size() != 1) throw ValidationError("fault body must be one line");
  const auto tok = split_tokens(lines[0]);
  if (tok.size() < 3 || tok.size() > 5) throw ValidationError("fault takes: at node_id kind [channel [rate]]");
  FaultEvent f;
  f.at = parse_number<double>(tok[0], "at");
  f.node = std::string(tok[1]);
  f.fault.kind = node::parse_fault_kind(tok[2]);
  if (tok.size() > 3 && tok[3] != "-") f.fault.channel = std::string(tok[3]);
  if (tok.size() > 4) f.fault.rate = parse_number<double>(tok[4], "rate");
  return f;
}

inline std::string query_param(const httplib::Request& req, const char* name) {
  if (!req.has_param(name)) throw ValidationError(std::string("missing query parameter '") + name + "'");
  return req.get_param_value(name);
}

// Wraps a handler with the error-to-status mapping.
template <typename F>
httplib::Server::Handler guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const NotFoundError& e) {
      res.status = 404;
      res.set_content(std::string("error: ") + e.what() + "\n", "text/plain");
    } catch (const ValidationError& e) {
      res.status = 400;
      res.set_content(std::string("error: ") + e.what() + "\n", "text/plain");
    } catch (const std::exception& e) {
      res.status = 500;
      res.set_content(std::string("error: ") + e.what() + "\n", "text/plain");
    }
  };
}

inline void mount(httplib::Server& srv, std::shared_ptr<cloud::CloudStore> store, Hooks hooks) {
  if (!hooks.now) hooks.now = [] { return std::int64_t{0}; };
  const auto text = [](httplib::Response& res, const std::string& body, int status = 200) {
    res.status = status;
    res.set_content(body, "text/plain");
  };

  srv.Post("/ingest", guarded([=](const httplib::Request& req, httplib::Response& res) {
             std::vector<Packet> batch;
             for (const auto& line : body_lines(req.body)) batch.push_back(decode_packet(line));
             std::string out;
             for (const auto& k : store->ingest_batch(batch, hooks.now()))
               out += k.node_id + ' ' + std::to_string(k.seq) + '\n';
             text(res, out);
           }));

  srv.Post("/nodes", guarded([=](const httplib::Request& req, httplib::Response& res) {
             const auto lines = body_lines(req.body);
             if (lines.size() != 1) throw ValidationError("registration body must be one descriptor line");
             const auto d = cloud::decode_descriptor(lines[0]);
             store->register_node(d, hooks.now());
             text(res, cloud::encode_descriptor(*store->node(d.node_id)) + "\n", 201);
           }));

  srv.Get("/nodes", guarded([=](const httplib::Request&, httplib::Response& res) {
            std::string out;
            for (const auto& d : store->nodes()) out += cloud::encode_descriptor(d) + '\n';
            text(res, out);
          }));

  srv.Get(R"(/nodes/([^/]+))", guarded([=](const httplib::Request& req, httplib::Response& res) {
            const auto d = store->node(req.matches[1]);
            if (!d) throw NotFoundError("no node '" + std::string(req.matches[1]) + "'");
            text(res, cloud::encode_descriptor(*d) + "\n");
          }));

  srv.Patch(R"(/nodes/([^/]+))", guarded([=](const httplib::Request& req, httplib::Response& res) {
              const std::string id = req.matches[1];
              store->update_node(id, parse_patch(req.body), hooks.now());
              text(res, cloud::encode_descriptor(*store->node(id)) + "\n");
            }));

  srv.Get(R"(/nodes/([^/]+)/health)", guarded([=](const httplib::Request& req, httplib::Response& res) {
            text(res, health_line(store->node_health(req.matches[1], hooks.now())));
          }));

  srv.Post(R"(/nodes/([^/]+)/command)", guarded([=](const httplib::Request& req, httplib::Response& res) {
             store->command_node(req.matches[1], parse_command(req.body), hooks.now());
             text(res, "staged\n", 202);
           }));

  srv.Post(R"(/groups/([^/]+)/rate)", guarded([=](const httplib::Request& req, httplib::Response& res) {
             const auto lines = body_lines(req.body);
             if (lines.size() != 1) throw ValidationError("rate body must be 'period_s <seconds>'");
             const auto tok = split_tokens(lines[0]);
             if (tok.size() != 2 || tok[0] != "period_s") throw ValidationError("rate body must be 'period_s <seconds>'");
             const auto g = store->set_group_rate(req.matches[1], parse_number<std::int64_t>(tok[1], "period_s"),
                                                  hooks.now());
             std::string out = g.group + ' ' + std::to_string(g.period_s) + ' ' + std::to_string(g.issued_t) + ' ' +
                               std::to_string(g.fanout.size());
             for (const auto& m : g.fanout) out += ' ' + m;
             text(res, out + "\n");
           }));

  srv.Get(R"(/groups/([^/]+)/commands)", guarded([=](const httplib::Request& req, httplib::Response& res) {
            std::string out;
            for (const auto& g : store->group_commands(req.matches[1])) {
              for (const auto& m : g.fanout) {
                std::string status = "staged", at = "-";
                for (const auto& c : store->command_status(m)) {
                  if (c.issued_t == g.issued_t && c.command.kind == Command::Kind::set_period &&
                      c.command.period_s == g.period_s && c.status == cloud::CommandStatus::delivered) {
                    status = "delivered";
                    at = std::to_string(*c.delivered_t);
                  }
                }
                out += std::to_string(g.issued_t) + ' ' + std::to_string(g.period_s) + ' ' + m + ' ' + status + ' ' +
                       at + '\n';
              }
            }
            text(res, out);
          }));

  srv.Get("/health/silent", guarded([=](const httplib::Request&, httplib::Response& res) {
            std::string out;
            for (const auto& h : store->silent_nodes(hooks.now())) out += health_line(h);
            text(res, out);
          }));

  srv.Get("/series", guarded([=](const httplib::Request& req, httplib::Response& res) {
            const auto pts = store->query_series(
                query_param(req, "node"), query_param(req, "channel"),
                parse_number<std::int64_t>(query_param(req, "from"), "from"),
                parse_number<std::int64_t>(query_param(req, "to"), "to"));
            std::string out;
            for (const auto& [t, v] : pts) out += std::to_string(t) + ' ' + format_double(v) + '\n';
            text(res, out);
          }));

  srv.Get("/export/semantic", guarded([=](const httplib::Request& req, httplib::Response& res) {
            const PacketKey k{query_param(req, "node"), parse_number<std::uint64_t>(query_param(req, "seq"), "seq")};
            text(res, cloud::serialize_triples(store->export_semantic(k)));
          }));

  srv.Get("/quarantine", guarded([=](const httplib::Request&, httplib::Response& res) {
            text(res, std::to_string(store->quarantine_count()) + "\n");
          }));

  srv.Post("/sim/faults", guarded([=](const httplib::Request& req, httplib::Response& res) {
             if (!hooks.inject) {
               text(res, "error: no live simulation attached\n", 409);
               return;
             }
             hooks.inject(parse_fault(req.body));
             text(res, "accepted\n", 202);
           }));
}

}  // namespace fieldnet::api
