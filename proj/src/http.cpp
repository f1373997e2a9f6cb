#include "glucoguard/http.hpp"

#include "glucoguard/detector.hpp"

#include <httplib.h>

#include <chrono>
#include <iostream>

namespace glucoguard::http {

using gateway::ApiError;
using gateway::json;

namespace {

void send(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

identity::Credentials credentials(const httplib::Request& req) {
    if (!req.has_header("X-User-Id") || !req.has_header("X-User-Key"))
        throw ApiError(401, "MissingCredentials", "X-User-Id and X-User-Key are required");
    try {
        return {gateway::parse_id(req.get_header_value("X-User-Id"), "X-User-Id"),
                gateway::parse_key(req.get_header_value("X-User-Key"), "X-User-Key")};
    } catch (const ApiError& e) {
        throw ApiError(401, "MalformedCredentials", e.what());
    }
}

json body_of(const httplib::Request& req) {
    try {
        return json::parse(req.body);
    } catch (const json::parse_error&) {
        throw ApiError(400, "BadJson", "request body is not valid JSON");
    }
}

std::uint32_t query_u32(const httplib::Request& req, const char* name, std::uint32_t fallback) {
    if (!req.has_param(name)) return fallback;
    const auto v = req.get_param_value(name);
    try {
        std::size_t used = 0;
        const auto n = std::stoull(v, &used);
        if (used != v.size() || n > UINT32_MAX) throw std::out_of_range(name);
        return static_cast<std::uint32_t>(n);
    } catch (const std::logic_error&) {
        throw ApiError(400, "BadQuery", std::string(name) + " must be an unsigned 32-bit integer");
    }
}

using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

Handler guarded(Handler h) {
    return [h = std::move(h)](const httplib::Request& req, httplib::Response& res) {
        try {
            h(req, res);
        } catch (const ApiError& e) {
            send(res, e.status(), e.body());
        } catch (const std::exception& e) {
            send(res, 500, ApiError(500, "Internal", e.what()).body());
        }
    };
}

}  // namespace

SimTime wall_clock() {
    using namespace std::chrono;
    return duration_cast<seconds>(system_clock::now().time_since_epoch()).count();
}

void install_routes(httplib::Server& server, gateway::System& system, Clock clock) {
    server.Get("/health", [](const httplib::Request&, httplib::Response& res) { send(res, 200, {{"ok", true}}); });

    server.Post("/register", guarded([&system](const httplib::Request& req, httplib::Response& res) {
                    const auto creds = system.register_user(gateway::parse_registration(body_of(req)));
                    send(res, 201,
                         {{"user_id", to_hex(creds.user_id.span())}, {"public_key", to_hex(creds.public_key.span())}});
                }));

    server.Post("/ingest", guarded([&system, clock](const httplib::Request& req, httplib::Response& res) {
                    const auto who = credentials(req);
                    const auto batch = gateway::parse_ingest_body(body_of(req));
                    send(res, 202, gateway::to_json(system.ingest(who, batch, clock())));
                }));

    server.Get("/patients/:id/history", guarded([&system](const httplib::Request& req, httplib::Response& res) {
                   const auto who = credentials(req);
                   const auto patient = gateway::parse_id(req.path_params.at("id"), "patient id");
                   std::optional<ledger::TxKind> kind;
                   if (req.has_param("kind") && !req.get_param_value("kind").empty()) {
                       kind = ledger::tx_kind_from_string(req.get_param_value("kind"));
                       if (!kind) throw ApiError(400, "BadQuery", "unknown kind");
                   }
                   const ledger::TimeRange range{query_u32(req, "from", 0), query_u32(req, "to", UINT32_MAX)};
                   json out = json::array();
                   for (const auto& tx : system.history(who, patient, kind, range))
                       out.push_back({{"kind", ledger::to_string(tx.kind)},
                                      {"created_at", tx.created_at},
                                      {"payload", gateway::payload_json(tx)}});
                   send(res, 200, out);
               }));

    server.Get("/patients/:id/pump", guarded([&system](const httplib::Request& req, httplib::Response& res) {
                   const auto who = credentials(req);
                   const auto p = system.pump(who, gateway::parse_id(req.path_params.at("id"), "patient id"));
                   json out{{"reservoir_ml", p.reservoir_ml}, {"doses_remaining", p.doses_remaining}, {"phase", p.phase}};
                   out["recheck_due"] = p.recheck_due ? json(*p.recheck_due) : json(nullptr);
                   send(res, 200, out);
               }));

    server.Post("/patients/:id/refill", guarded([&system, clock](const httplib::Request& req, httplib::Response& res) {
                    const auto who = credentials(req);
                    const auto patient = gateway::parse_id(req.path_params.at("id"), "patient id");
                    const auto body = body_of(req);
                    if (!body.is_object() || !body.contains("volume_ml") || !body["volume_ml"].is_number())
                        throw ApiError(400, "MissingField", "volume_ml is required");
                    const double ml = body["volume_ml"].get<double>();
                    if (!(ml > 0)) throw ApiError(400, "BadVolume", "volume_ml must be positive");
                    system.refill(who, patient, dosing::ml_to_ul(ml), clock());
                    const auto p = system.pump(who, patient);
                    send(res, 200, {{"reservoir_ml", p.reservoir_ml}, {"doses_remaining", p.doses_remaining}, {"phase", p.phase}});
                }));

    server.Post("/patients/:id/grants", guarded([&system, clock](const httplib::Request& req, httplib::Response& res) {
                    const auto who = credentials(req);
                    const auto patient = gateway::parse_id(req.path_params.at("id"), "patient id");
                    const auto body = body_of(req);
                    if (!body.is_object() || !body.contains("grantee_id") || !body["grantee_id"].is_string())
                        throw ApiError(400, "MissingField", "grantee_id is required");
                    const auto grantee = gateway::parse_id(body["grantee_id"].get<std::string>(), "grantee_id");
                    send(res, 202, {{"pending", system.submit_grant(who, patient, grantee, clock())}});
                }));

    server.Post("/approvals", guarded([&system, clock](const httplib::Request& req, httplib::Response& res) {
                    const auto who = credentials(req);
                    const auto body = body_of(req);
                    if (!body.is_object() || !body.contains("patient_id") || !body["patient_id"].is_string())
                        throw ApiError(400, "MissingField", "patient_id is required");
                    const auto patient = gateway::parse_id(body["patient_id"].get<std::string>(), "patient_id");
                    const auto r = system.approve(who, patient, clock());
                    json out{{"approvals", r.approvals}, {"required", r.required}, {"appended", r.block_index.has_value()}};
                    if (r.block_index) out["block_index"] = *r.block_index;
                    send(res, r.block_index ? 201 : 202, out);
                }));

    server.Get("/chain/verify", guarded([&system](const httplib::Request& req, httplib::Response& res) {
                   const auto err = system.verify(credentials(req));
                   if (!err) return send(res, 200, {{"ok", true}});
                   const json detail{{"block_index", err->block_index}, {"reason", ledger::to_string(err->reason)}};
                   send(res, 200,
                        {{"ok", false}, {"block_index", err->block_index}, {"reason", detail["reason"]}, {"error", detail}});
               }));

    server.Get(R"(/chain/blocks/(\d+))", guarded([&system](const httplib::Request& req, httplib::Response& res) {
                   const auto who = credentials(req);
                   std::uint64_t index = 0;
                   try {
                       index = std::stoull(req.matches[1].str());
                   } catch (const std::out_of_range&) {
                       throw ApiError(404, "UnknownBlock", "no block at this index");
                   }
                   send(res, 200, system.block_json(who, index));
               }));
}

int serve(const config::ServerConfig& cfg) {
    std::optional<detector::RandomForest> model;
    if (cfg.model_path) model = detector::load_model(*cfg.model_path);
    gateway::System system(cfg.system_config(), std::move(model));
    system.load_state();

    httplib::Server server;
    install_routes(server, system);
    std::cerr << "listening on " << cfg.host << ':' << cfg.port << '\n';
    if (!server.listen(cfg.host, cfg.port)) {
        std::cerr << "cannot listen on " << cfg.host << ':' << cfg.port << '\n';
        return 3;
    }
    return 0;
}

}  // namespace glucoguard::http
