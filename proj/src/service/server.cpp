#include "dielink/service/server.hpp"

#include <algorithm>
#include <charconv>
#include <optional>

// Eigen before httplib: <resolv.h> defines a `_res` macro that breaks Eigen's headers.
#include "dielink/analytics/analytics.hpp"
#include "dielink/imaging/image_io.hpp"

#include "httplib.h"
#include "json.hpp"

namespace dielink::service {

using nlohmann::json;

namespace {

constexpr std::size_t kDefaultPageSize = 50;
constexpr std::size_t kMaxPageSize = 200;

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view code, const std::string& message,
                std::optional<std::string_view> rule = std::nullopt) {
    json body{{"code", code}, {"message", message}, {"rule", nullptr}};
    if (rule) body["rule"] = *rule;
    send_json(res, status, body);
}

json transform_json(const std::optional<registration::SimilarityTransform>& t) {
    if (!t) return nullptr;
    return {{"a", t->a()},         {"b", t->b()},         {"tx", t->tx()},
            {"ty", t->ty()},       {"rotation", t->rotation()}, {"scale", t->scale()}};
}

json record_json(const store::DatasetRecord& r) {
    return {{"id", r.id},
            {"name", r.name},
            {"kind", store::kind_name(r.kind)},
            {"state", store::state_name(r.state)},
            {"computing", r.state == store::DatasetState::Computing},
            {"coins", r.coin_names.size()},
            {"coin_names", r.coin_names},
            {"created_at", r.created_at},
            {"error", r.error}};
}

json summary_json(const store::DatasetSummary& s) {
    json counts = json::object();
    for (const auto& [note, n] : s.category_counts) counts[std::string(store::note_key(note))] = n;
    return {{"coins", s.coins}, {"potential_links", s.potential_links}, {"category_counts", counts}};
}

json pair_json(const store::PairRecord& p) {
    return {{"rank", p.rank},
            {"name1", p.score.name1},
            {"name2", p.score.name2},
            {"distance", p.score.distance},
            {"alignable", p.score.alignable},
            {"note", store::note_key(p.note)},
            {"note_label", store::note_label(p.note)},
            {"comment", p.comment},
            {"has_comment", !p.comment.empty()},
            {"transform", transform_json(p.score.transform)}};
}

std::optional<std::size_t> parse_size(const std::string& text) {
    std::size_t v = 0;
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || ec != std::errc() || end != text.data() + text.size()) return std::nullopt;
    return v;
}

std::string_view content_type(std::span<const std::uint8_t> bytes) {
    switch (imaging::sniff_format(bytes)) {
        case imaging::ImageFormat::Png: return "image/png";
        case imaging::ImageFormat::Jpeg: return "image/jpeg";
        case imaging::ImageFormat::Tiff: return "image/tiff";
        default: return "application/octet-stream";
    }
}

}  // namespace

Server::Server(ServiceConfig config) : config_(std::move(config)) {
    validate(config_);
    prepare_data_dir(config_);
    store_ = std::make_unique<store::Datastore>(config_.data_dir / "dielink.sqlite3");
    scoring::ScoringParams params;
    params.run_seed = config_.seed;
    jobs_ = std::make_unique<JobRunner>(*store_, params, config_.workers);
    http_ = std::make_unique<httplib::Server>();
    // httplib's default SO_REUSEPORT would let a second instance share an occupied port.
    http_->set_socket_options([](socket_t sock) {
        int yes = 1;
        setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
    });
    // Room for the archive plus multipart framing; larger bodies get a bare 413.
    http_->set_payload_max_length(config_.upload_limits.max_total_bytes + (16u << 20));
    routes();
}

Server::~Server() {
    stop();
    jobs_->stop();
}

int Server::bind() {
    const int port = config_.port == 0 ? http_->bind_to_any_port(config_.bind)
                                       : (http_->bind_to_port(config_.bind, config_.port) ? config_.port : -1);
    if (port < 0)
        throw BindError("cannot bind " + config_.bind + ":" + std::to_string(config_.port));
    port_ = port;
    return port_;
}

void Server::run() { http_->listen_after_bind(); }

void Server::stop() {
    if (http_) http_->stop();
}

void Server::routes() {
    auto& srv = *http_;
    store::Datastore& db = *store_;
    JobRunner& jobs = *jobs_;
    const std::string bearer = "Bearer " + config_.token;
    const ServiceConfig& cfg = config_;

    srv.set_pre_routing_handler([bearer](const httplib::Request& req, httplib::Response& res) {
        if (req.path == "/api/health" || req.path.rfind("/api/", 0) != 0) return httplib::Server::HandlerResponse::Unhandled;
        if (req.get_header_value("Authorization") != bearer) {
            res.set_header("WWW-Authenticate", "Bearer");
            send_error(res, 401, "UNAUTHORIZED", "missing or invalid bearer token");
            return httplib::Server::HandlerResponse::Handled;
        }
        return httplib::Server::HandlerResponse::Unhandled;
    });

    srv.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        try {
            std::rethrow_exception(ep);
        } catch (const store::UnknownDataset& e) {
            send_error(res, 404, "UNKNOWN_DATASET", e.what());
        } catch (const store::UnknownPair& e) {
            send_error(res, 404, "UNKNOWN_PAIR", e.what());
        } catch (const store::DatasetNotComputed& e) {
            send_error(res, 409, "DATASET_NOT_COMPUTED", e.what());
        } catch (const store::InvalidState& e) {
            send_error(res, 409, "INVALID_STATE", e.what());
        } catch (const std::exception& e) {
            send_error(res, 500, "INTERNAL", e.what());
        } catch (...) {
            send_error(res, 500, "INTERNAL", "unknown error");
        }
    });

    auto ticket = [&jobs](const store::DatasetRecord& r) {
        const std::size_t total = scoring::DistanceMatrix::pair_count(r.coin_names.size());
        JobProgress p{r.state == store::DatasetState::Computed ? total : 0, total};
        if (auto live = jobs.progress(r.id)) p = *live;
        if (r.state == store::DatasetState::Computed) p.done = total;
        return json{{"dataset_id", r.id},
                    {"state", store::state_name(r.state)},
                    {"progress", {{"done", p.done}, {"total", p.total}}}};
    };

    // Loads a dataset and answers 409 unless it is computed.
    auto computed = [&db](const std::string& id, httplib::Response& res) -> std::optional<store::DatasetRecord> {
        auto r = db.get(id);
        if (r.state == store::DatasetState::Computing) {
            send_error(res, 409, "DATASET_COMPUTING", "dataset " + r.name + " is still computing");
            return std::nullopt;
        }
        if (r.state == store::DatasetState::Failed) {
            send_error(res, 409, "DATASET_FAILED", "dataset " + r.name + " failed: " + r.error);
            return std::nullopt;
        }
        return r;
    };

    srv.Get("/api/health", [](const httplib::Request&, httplib::Response& res) {
        send_json(res, 200, {{"status", "ok"}});
    });

    srv.Post("/api/datasets", [&db, &jobs, &cfg, ticket](const httplib::Request& req, httplib::Response& res) {
        if (!req.is_multipart_form_data() || !req.has_file("name") || !req.has_file("file")) {
            send_error(res, 400, "BAD_REQUEST", "expected multipart fields 'name' and 'file'");
            return;
        }
        const std::string name = req.get_file_value("name").content;
        if (name.empty()) {
            send_error(res, 400, "BAD_REQUEST", "dataset name is empty");
            return;
        }
        auto kind = store::DatasetKind::SingleType;
        if (req.has_file("kind")) {
            const auto k = store::parse_kind(req.get_file_value("kind").content);
            if (!k) {
                send_error(res, 400, "BAD_REQUEST", "kind must be single_type or treasure");
                return;
            }
            kind = *k;
        }
        const std::string& archive = req.get_file_value("file").content;
        std::vector<store::UploadEntry> entries;
        try {
            entries = store::validate_upload(
                {reinterpret_cast<const std::uint8_t*>(archive.data()), archive.size()}, cfg.upload_limits);
        } catch (const store::UploadRejected& e) {
            send_error(res, 400, store::rule_code(e.rule()), e.what(), store::rule_code(e.rule()));
            return;
        }
        if (entries.size() < 2) {
            send_error(res, 400, "DATASET_TOO_SMALL", "a dataset needs at least 2 images");
            return;
        }
        store::DatasetRecord r;
        try {
            r = db.create_dataset(name, kind, entries);
        } catch (const store::DuplicateName& e) {
            send_error(res, 409, "DUPLICATE_NAME", e.what());
            return;
        } catch (const store::DuplicateFileNames& e) {
            send_error(res, 400, "DUPLICATE_FILE_NAMES", e.what());
            return;
        }
        jobs.submit(r.id);
        send_json(res, 202, {{"ticket", ticket(r)}, {"dataset", record_json(r)}});
    });

    srv.Get("/api/datasets", [&db](const httplib::Request&, httplib::Response& res) {
        json single = json::array();
        json treasures = json::array();
        for (const auto& r : db.list())
            (r.kind == store::DatasetKind::SingleType ? single : treasures).push_back(record_json(r));
        send_json(res, 200, {{"single_type", single}, {"treasures", treasures}});
    });

    srv.Get(R"(/api/datasets/([^/]+))", [&db, ticket](const httplib::Request& req, httplib::Response& res) {
        const auto r = db.get(req.matches[1]);
        json body{{"dataset", record_json(r)}, {"ticket", ticket(r)}, {"summary", nullptr}};
        if (r.state == store::DatasetState::Computed) body["summary"] = summary_json(db.summarize(r.id));
        send_json(res, 200, body);
    });

    srv.Get(R"(/api/datasets/([^/]+)/pairs)", [&db, computed](const httplib::Request& req, httplib::Response& res) {
        const auto r = computed(req.matches[1], res);
        if (!r) return;
        std::size_t offset = 0;
        std::size_t limit = kDefaultPageSize;
        if (req.has_param("offset")) {
            const auto v = parse_size(req.get_param_value("offset"));
            if (!v) return send_error(res, 400, "BAD_REQUEST", "offset must be a non-negative integer");
            offset = *v;
        }
        if (req.has_param("limit")) {
            const auto v = parse_size(req.get_param_value("limit"));
            if (!v || *v == 0 || *v > kMaxPageSize)
                return send_error(res, 400, "BAD_REQUEST", "limit must be between 1 and 200");
            limit = *v;
        }
        const std::string query = req.has_param("query") ? req.get_param_value("query") : "";
        const auto pairs = db.search_pairs(r->id, query);
        json page = json::array();
        for (std::size_t k = offset; k < pairs.size() && k < offset + limit; ++k) page.push_back(pair_json(pairs[k]));
        send_json(res, 200,
                  {{"total", pairs.size()}, {"offset", offset}, {"limit", limit}, {"query", query}, {"pairs", page}});
    });

    srv.Put(R"(/api/datasets/([^/]+)/pairs/([^/]+)/([^/]+))",
            [&db, computed](const httplib::Request& req, httplib::Response& res) {
                const auto r = computed(req.matches[1], res);
                if (!r) return;
                json body;
                try {
                    body = json::parse(req.body);
                } catch (const json::parse_error&) {
                    return send_error(res, 400, "BAD_REQUEST", "body is not JSON");
                }
                if (!body.is_object() || !body.contains("note") || !body["note"].is_string())
                    return send_error(res, 400, "BAD_REQUEST", "body needs a string 'note'");
                const auto note = store::parse_note(body["note"].get<std::string>());
                if (!note) return send_error(res, 400, "UNKNOWN_NOTE", "unknown note " + body["note"].dump());
                std::optional<std::string> comment;
                if (body.contains("comment") && !body["comment"].is_null()) {
                    if (!body["comment"].is_string())
                        return send_error(res, 400, "BAD_REQUEST", "comment must be a string");
                    comment = body["comment"].get<std::string>();
                }
                const auto ev = db.set_evaluation(r->id, req.matches[2], req.matches[3], *note, comment);
                send_json(res, 200,
                          {{"evaluation",
                            {{"name1", ev.name1},
                             {"name2", ev.name2},
                             {"note", store::note_key(ev.note)},
                             {"note_label", store::note_label(ev.note)},
                             {"comment", ev.comment}}},
                           {"summary", summary_json(db.summarize(r->id))}});
            });

    srv.Get(R"(/api/datasets/([^/]+)/curve)", [&db, computed](const httplib::Request& req, httplib::Response& res) {
        const auto r = computed(req.matches[1], res);
        if (!r) return;
        const auto curve = analytics::build_curve(analytics::rank_pairs(db.matrix(r->id)));
        json points = json::array();
        for (const auto& p : curve.points) points.push_back({{"rank", p.rank}, {"distance", p.distance}});
        send_json(res, 200, {{"points", points}, {"knee_rank", curve.knee_rank ? json(*curve.knee_rank) : json()}});
    });

    srv.Get(R"(/api/datasets/([^/]+)/embedding)",
            [&db, computed](const httplib::Request& req, httplib::Response& res) {
                const auto r = computed(req.matches[1], res);
                if (!r) return;
                json points = json::array();
                for (const auto& p : analytics::embed_2d(db.matrix(r->id)))
                    points.push_back({{"coin_name", p.coin_name}, {"x", p.x}, {"y", p.y}});
                send_json(res, 200, {{"points", points}});
            });

    srv.Get(R"(/api/datasets/([^/]+)/clusters)",
            [&db, computed](const httplib::Request& req, httplib::Response& res) {
                const auto r = computed(req.matches[1], res);
                if (!r) return;
                double threshold = -1.0;
                const std::string text = req.has_param("threshold") ? req.get_param_value("threshold") : "";
                const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), threshold);
                if (text.empty() || ec != std::errc() || end != text.data() + text.size() || !(threshold >= 0.0) ||
                    threshold > 1.0)
                    return send_error(res, 400, "BAD_REQUEST", "threshold must be a number in [0,1]");
                json labels = json::array();
                for (const auto& l : analytics::cluster(db.matrix(r->id), threshold))
                    labels.push_back(
                        {{"coin_name", l.coin_name}, {"cluster_id", l.cluster_id}, {"provisional", l.provisional}});
                send_json(res, 200, {{"threshold", threshold}, {"provisional", true}, {"labels", labels}});
            });

    srv.Get(R"(/api/datasets/([^/]+)/export)", [&db, computed](const httplib::Request& req, httplib::Response& res) {
        const auto r = computed(req.matches[1], res);
        if (!r) return;
        const auto file = db.export_csv(r->id);
        res.status = 200;
        res.set_header("Content-Disposition", "attachment; filename=\"" + file.filename + "\"");
        res.set_content(file.content, "text/csv; charset=utf-8");
    });

    srv.Get(R"(/api/datasets/([^/]+)/images/([^/]+))", [&db](const httplib::Request& req, httplib::Response& res) {
        const auto bytes = db.image(req.matches[1], req.matches[2]);
        if (!bytes) return send_error(res, 404, "UNKNOWN_IMAGE", "no image " + std::string(req.matches[2]));
        res.status = 200;
        res.set_content(reinterpret_cast<const char*>(bytes->data()), bytes->size(), std::string(content_type(*bytes)));
    });
}

}  // namespace dielink::service
