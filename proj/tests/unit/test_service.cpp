#include "doctest.h"

#include <chrono>
#include <filesystem>
#include <map>
#include <thread>

#include "dielink/analytics/analytics.hpp"
#include "dielink/imaging/image_io.hpp"
#include "dielink/service/config.hpp"
#include "dielink/service/server.hpp"
#include "dielink/store/zip_archive.hpp"
#include "synthetic.hpp"

#include "httplib.h"
#include "json.hpp"

using namespace dielink;
using namespace dielink::service;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("dielink-svc-" + std::to_string(testing::Rng(std::random_device{}()).next()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

/// A server on a free port, serving on a background thread.
struct LiveServer {
    TempDir dir;
    std::unique_ptr<Server> server;
    std::thread thread;
    std::unique_ptr<httplib::Client> client;

    explicit LiveServer(store::UploadLimits limits = {}) {
        ServiceConfig c;
        c.port = 0;
        c.token = "s3cret";
        c.data_dir = dir.path / "data";
        c.workers = 2;
        c.upload_limits = limits;
        server = std::make_unique<Server>(c);
        const int port = server->bind();
        thread = std::thread([this] { server->run(); });
        client = std::make_unique<httplib::Client>("127.0.0.1", port);
        client->set_bearer_token_auth("s3cret");
        client->set_read_timeout(60, 0);
        for (int i = 0; i < 100 && !client->Get("/api/health"); ++i)
            std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    ~LiveServer() {
        server->stop();
        thread.join();
    }

    json get(const std::string& path, int expect = 200) {
        auto res = client->Get(path);
        REQUIRE(res);
        CHECK_MESSAGE(res->status == expect, path, " -> ", res->body);
        return res->body.empty() ? json() : json::parse(res->body, nullptr, false);
    }

    json wait_computed(const std::string& id) {
        for (int i = 0; i < 600; ++i) {
            const auto body = get("/api/datasets/" + id);
            if (body["dataset"]["state"] != "computing") return body;
            std::this_thread::sleep_for(std::chrono::milliseconds(100));
        }
        FAIL("dataset never finished computing");
        return {};
    }
};

std::string zip_string(const std::vector<std::pair<std::string, std::vector<std::uint8_t>>>& members) {
    store::ZipWriter w;
    for (const auto& [name, bytes] : members) w.add(name, bytes);
    const auto z = w.finish();
    return std::string(z.begin(), z.end());
}

/// n small synthetic coins, die-linked in groups of four.
std::string coin_zip(int n) {
    testing::Rng rng(123);
    std::vector<std::pair<std::string, std::vector<std::uint8_t>>> members;
    imaging::GrayImage die(1, 1);
    for (int i = 0; i < n; ++i) {
        if (i % 4 == 0) die = testing::make_die(rng.next(), 160, 120);
        char name[32];
        std::snprintf(name, sizeof name, "%05d-R.png", 32300 + i);
        members.emplace_back(name, imaging::encode_png(imaging::quantize_8bit(testing::make_coin(die, rng))));
    }
    return zip_string(members);
}

httplib::Result upload(httplib::Client& c, const std::string& name, const std::string& zip,
                       const std::string& kind = "") {
    httplib::MultipartFormDataItems items{{"name", name, "", ""}, {"file", zip, "coins.zip", "application/zip"}};
    if (!kind.empty()) items.push_back({"kind", kind, "", ""});
    return c.Post("/api/datasets", items);
}

}  // namespace

TEST_CASE("config: file, environment and validation") {
    TempDir dir;
    const auto c = parse_config(R"({"bind":"0.0.0.0","port":9000,"data_dir":"d","token":"t","workers":3,
                                    "seed":5,"max_upload_bytes":1000,"max_files":7})",
                                dir.path);
    CHECK(c.bind == "0.0.0.0");
    CHECK(c.port == 9000);
    CHECK(c.data_dir == dir.path / "d");
    CHECK(c.workers == 3);
    CHECK(c.seed == 5);
    CHECK(c.upload_limits.max_total_bytes == 1000);
    CHECK(c.upload_limits.max_files == 7);
    CHECK_THROWS_AS(parse_config("{\"colour\": 1}"), ConfigError);
    CHECK_THROWS_AS(parse_config("{\"port\": \"x\"}"), ConfigError);
    CHECK_THROWS_AS(parse_config("not json"), ConfigError);
    CHECK_THROWS_AS(load_config(dir.path / "missing.json"), ConfigError);

    std::map<std::string, std::string> env{{"DIELINK_PORT", "8123"},
                                           {"DIELINK_TOKEN", "env-token"},
                                           {"DIELINK_BIND", "127.0.0.2"},
                                           {"DIELINK_DATA_DIR", "/tmp/x"},
                                           {"DIELINK_WORKERS", "2"}};
    auto over = c;
    apply_env(over, [&](const char* k) { return env.count(k) ? env[k].c_str() : nullptr; });
    CHECK(over.port == 8123);
    CHECK(over.token == "env-token");
    CHECK(over.bind == "127.0.0.2");
    CHECK(over.data_dir == "/tmp/x");
    CHECK(over.workers == 2);
    env["DIELINK_PORT"] = "80x";
    CHECK_THROWS_AS(apply_env(over, [&](const char* k) { return env.count(k) ? env[k].c_str() : nullptr; }),
                    ConfigError);

    ServiceConfig bad;
    CHECK_THROWS_AS(validate(bad), ConfigError);
    bad.token = "t";
    CHECK_NOTHROW(validate(bad));
    bad.port = 70000;
    CHECK_THROWS_AS(validate(bad), ConfigError);
}

TEST_CASE("config: data directory creation") {
    TempDir dir;
    ServiceConfig c;
    c.data_dir = dir.path / "fresh";
    prepare_data_dir(c);
    CHECK(fs::is_directory(c.data_dir));
    prepare_data_dir(c);
    c.data_dir = dir.path / "no" / "such" / "parent";
    CHECK_THROWS_AS(prepare_data_dir(c), ConfigError);
}

TEST_CASE("api: health, auth and empty lists") {
    LiveServer s;
    httplib::Client anon("127.0.0.1", s.server->port());
    auto health = anon.Get("/api/health");
    REQUIRE(health);
    CHECK(health->status == 200);
    auto denied = anon.Get("/api/datasets");
    REQUIRE(denied);
    CHECK(denied->status == 401);
    CHECK(json::parse(denied->body)["code"] == "UNAUTHORIZED");
    anon.set_bearer_token_auth("wrong");
    CHECK(anon.Get("/api/datasets")->status == 401);

    const auto lists = s.get("/api/datasets");
    CHECK(lists["single_type"].empty());
    CHECK(lists["treasures"].empty());
    s.get("/api/datasets/nope", 404);
    s.get("/api/datasets/nope/pairs", 404);
}

TEST_CASE("api: upload rule violations") {
    store::UploadLimits limits;
    limits.max_total_bytes = 2000;
    LiveServer s(limits);
    auto code_of = [&](const std::string& zip) {
        auto res = upload(*s.client, "bad", zip);
        REQUIRE(res);
        CHECK(res->status == 400);
        const auto body = json::parse(res->body);
        CHECK(body["code"] == body["rule"]);
        CHECK(body["message"].is_string());
        return body["rule"].get<std::string>();
    };
    const auto png = imaging::encode_png(testing::uniform_noise(4, 1));
    std::vector<std::pair<std::string, std::vector<std::uint8_t>>> many;
    for (int i = 0; i < 501; ++i) many.emplace_back("c" + std::to_string(i) + ".png", png);
    CHECK(code_of(zip_string(many)) == "TOO_MANY_FILES");
    CHECK(code_of(zip_string({{"a.png", png}, {"notes.txt", {'h', 'i'}}})) == "NON_IMAGE_ENTRY");
    CHECK(code_of(zip_string({{"a.png", std::vector<std::uint8_t>(3000, 0)}})) == "ARCHIVE_TOO_LARGE");
    CHECK(code_of("garbage") == "CORRUPT_ARCHIVE");

    auto one = upload(*s.client, "one", zip_string({{"a.png", png}}));
    CHECK(one->status == 400);
    CHECK(json::parse(one->body)["code"] == "DATASET_TOO_SMALL");
    auto dup = upload(*s.client, "dup", zip_string({{"x/a.png", png}, {"y/a.png", png}}));
    CHECK(dup->status == 400);
    CHECK(json::parse(dup->body)["code"] == "DUPLICATE_FILE_NAMES");
    auto missing = s.client->Post("/api/datasets", httplib::MultipartFormDataItems{{"name", "x", "", ""}});
    CHECK(missing->status == 400);
    auto kind = upload(*s.client, "k", zip_string({{"a.png", png}, {"b.png", png}}), "galaxy");
    CHECK(kind->status == 400);
    CHECK(s.get("/api/datasets")["single_type"].empty());
}

TEST_CASE("api: results are withheld until computed") {
    LiveServer s;
    const auto png = imaging::encode_png(testing::uniform_noise(4, 1));
    // Created straight in the store, never queued: it stays computing.
    const auto r = s.server->datastore().create_dataset("pending", store::DatasetKind::SingleType,
                                                        {{"a.png", png}, {"b.png", png}, {"c.png", png}});
    const std::string base = "/api/datasets/" + r.id;
    for (const char* suffix : {"/pairs", "/curve", "/embedding", "/clusters?threshold=0.5", "/export"}) {
        const auto body = s.get(base + suffix, 409);
        CHECK(body["code"] == "DATASET_COMPUTING");
    }
    auto put = s.client->Put(base + "/pairs/a.png/b.png", R"({"note":"Linked"})", "application/json");
    CHECK(put->status == 409);
    const auto info = s.get(base);
    CHECK(info["dataset"]["computing"] == true);
    CHECK(info["ticket"]["state"] == "computing");
    CHECK(info["ticket"]["progress"]["total"] == 3);
    CHECK(info["summary"].is_null());
    const auto lists = s.get("/api/datasets");
    REQUIRE(lists["single_type"].size() == 1);
    CHECK(lists["single_type"][0]["computing"] == true);
    CHECK(s.get(base + "/images/a.png").is_discarded());

    s.server->datastore().fail_dataset(r.id, "boom");
    CHECK(s.get(base + "/pairs", 409)["code"] == "DATASET_FAILED");
}

TEST_CASE("api: 17-coin dataset end to end") {
    LiveServer s;
    auto res = upload(*s.client, "R_1205", coin_zip(17));
    REQUIRE(res);
    REQUIRE(res->status == 202);
    const auto accepted = json::parse(res->body);
    const std::string id = accepted["ticket"]["dataset_id"];
    CHECK(accepted["ticket"]["progress"]["total"] == 136);

    auto again = upload(*s.client, "R_1205", coin_zip(3));
    CHECK(again->status == 409);
    CHECK(json::parse(again->body)["code"] == "DUPLICATE_NAME");

    const auto done = s.wait_computed(id);
    REQUIRE(done["dataset"]["state"] == "computed");
    CHECK(done["ticket"]["progress"]["done"] == 136);
    CHECK(done["summary"]["coins"] == 17);
    CHECK(done["summary"]["potential_links"] == 136);
    CHECK(done["summary"]["category_counts"]["NotEvaluated"] == 136);

    const std::string base = "/api/datasets/" + id;
    std::vector<json> all;
    std::vector<std::size_t> sizes;
    for (int offset = 0; offset < 136; offset += 50) {
        const auto page = s.get(base + "/pairs?offset=" + std::to_string(offset));
        CHECK(page["total"] == 136);
        sizes.push_back(page["pairs"].size());
        for (const auto& p : page["pairs"]) all.push_back(p);
    }
    CHECK(sizes == std::vector<std::size_t>{50, 50, 36});
    const auto full = s.server->datastore().ranked_pairs(id);
    REQUIRE(all.size() == full.size());
    for (std::size_t k = 0; k < all.size(); ++k) {
        CHECK(all[k]["rank"] == k + 1);
        CHECK(all[k]["name1"] == full[k].score.name1);
        CHECK(all[k]["name2"] == full[k].score.name2);
        CHECK(all[k]["distance"] == full[k].score.distance);
        CHECK(all[k]["note"] == "NotEvaluated");
        CHECK(all[k]["has_comment"] == false);
        CHECK(all[k]["transform"].is_null() != full[k].score.alignable);
    }
    double lowest = 1.0;
    for (const auto& p : full) lowest = std::min(lowest, p.score.distance);
    CHECK(all.front()["distance"] == lowest);
    CHECK(all.front()["alignable"] == true);
    CHECK(all.front()["transform"]["scale"].get<double>() > 0.8);

    s.get(base + "/pairs?limit=201", 400);
    s.get(base + "/pairs?limit=0", 400);
    s.get(base + "/pairs?offset=-1", 400);
    CHECK(s.get(base + "/pairs?limit=200")["pairs"].size() == 136);
    CHECK(s.get(base + "/pairs?offset=500")["pairs"].empty());
    const auto search = s.get(base + "/pairs?query=32307");
    CHECK(search["total"] == 16);
    for (const auto& p : search["pairs"])
        CHECK((p["name1"] == "32307-R.png" || p["name2"] == "32307-R.png"));
    CHECK(s.get(base + "/pairs?query=zzz")["total"] == 0);

    // Evaluations: label or key, reversed names, idempotent, comments kept.
    auto put = s.client->Put(base + "/pairs/32301-R.png/32300-R.png",
                             json{{"note", "Probably linked"}, {"comment", std::string(500, 'c')}}.dump(),
                             "application/json");
    REQUIRE(put->status == 200);
    auto body = json::parse(put->body);
    CHECK(body["evaluation"]["name1"] == "32300-R.png");
    CHECK(body["evaluation"]["note"] == "ProbablyLinked");
    CHECK(body["summary"]["category_counts"]["ProbablyLinked"] == 1);
    CHECK(body["summary"]["category_counts"]["NotEvaluated"] == 135);
    put = s.client->Put(base + "/pairs/32300-R.png/32301-R.png", R"({"note":"ProbablyLinked"})", "application/json");
    const auto repeat = json::parse(put->body);
    CHECK(repeat["summary"] == body["summary"]);
    CHECK(repeat["evaluation"]["comment"] == std::string(500, 'c'));
    CHECK(s.client->Put(base + "/pairs/32300-R.png/32301-R.png", R"({"note":"Sure"})", "application/json")->status ==
          400);
    CHECK(s.client->Put(base + "/pairs/32300-R.png/nope.png", R"({"note":"Linked"})", "application/json")->status ==
          404);
    CHECK(s.client->Put(base + "/pairs/32300-R.png/32301-R.png", "{", "application/json")->status == 400);
    const auto annotated = s.get(base + "/pairs?query=32301&limit=200");
    bool found = false;
    for (const auto& p : annotated["pairs"])
        if (p["name1"] == "32300-R.png" && p["name2"] == "32301-R.png") {
            found = true;
            CHECK(p["has_comment"] == true);
            CHECK(p["note_label"] == "Probably linked");
        }
    CHECK(found);

    const auto curve = s.get(base + "/curve");
    CHECK(curve["points"].size() == 136);
    const auto expected_curve = analytics::build_curve(analytics::rank_pairs(s.server->datastore().matrix(id)));
    CHECK(curve["knee_rank"] == *expected_curve.knee_rank);
    const auto emb = s.get(base + "/embedding");
    CHECK(emb["points"].size() == 17);
    const auto clusters = s.get(base + "/clusters?threshold=0.5");
    CHECK(clusters["provisional"] == true);
    CHECK(clusters["labels"].size() == 17);
    for (const auto& l : clusters["labels"]) CHECK(l["provisional"] == true);
    s.get(base + "/clusters", 400);
    s.get(base + "/clusters?threshold=abc", 400);
    s.get(base + "/clusters?threshold=2", 400);

    auto csv = s.client->Get(base + "/export");
    REQUIRE(csv);
    CHECK(csv->status == 200);
    CHECK(csv->get_header_value("Content-Disposition") == "attachment; filename=\"notations_R_1205.csv\"");
    CHECK(csv->body == s.server->datastore().export_csv(id).content);

    auto img = s.client->Get(base + "/images/32305-R.png");
    REQUIRE(img);
    CHECK(img->status == 200);
    CHECK(img->get_header_value("Content-Type") == "image/png");
    CHECK(imaging::load_image(std::vector<std::uint8_t>(img->body.begin(), img->body.end())).width() == 160);
    s.get(base + "/images/none.png", 404);

    const auto lists = s.get("/api/datasets");
    REQUIRE(lists["single_type"].size() == 1);
    CHECK(lists["single_type"][0]["name"] == "R_1205");
    CHECK(lists["single_type"][0]["computing"] == false);
}

TEST_CASE("api: treasures and alphabetical lists") {
    LiveServer s;
    const auto zip = coin_zip(3);
    for (const auto& [name, kind] : std::vector<std::pair<std::string, std::string>>{
             {"zeta", "single_type"}, {"alpha", "single_type"}, {"hoard", "treasure"}})
        REQUIRE(upload(*s.client, name, zip, kind)->status == 202);
    s.server->jobs().wait_idle();
    const auto lists = s.get("/api/datasets");
    REQUIRE(lists["single_type"].size() == 2);
    CHECK(lists["single_type"][0]["name"] == "alpha");
    CHECK(lists["single_type"][1]["name"] == "zeta");
    REQUIRE(lists["treasures"].size() == 1);
    CHECK(lists["treasures"][0]["state"] == "computed");
}

TEST_CASE("server: an occupied port is a bind error") {
    LiveServer first;
    TempDir dir;
    ServiceConfig c;
    c.token = "x";
    c.port = first.server->port();
    c.data_dir = dir.path / "d";
    Server second(c);
    CHECK_THROWS_AS(second.bind(), BindError);
}
