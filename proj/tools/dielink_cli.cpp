#include <algorithm>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <pthread.h>

#include "CLI11.hpp"

#include "dielink/analytics/analytics.hpp"
#include "dielink/imaging/image_io.hpp"
#include "dielink/imaging/normalize.hpp"
#include "dielink/scoring/score_dataset.hpp"
#include "dielink/service/server.hpp"
#include "dielink/store/csv.hpp"

namespace fs = std::filesystem;
using namespace dielink;

namespace {

// Exit codes
constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kTooFewImages = 2;
constexpr int kDecodeFailure = 3;
constexpr int kBadCsv = 4;

struct UsageError {
    int code;
    std::string message;
};

std::string read_text(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw UsageError{kFailure, "cannot read " + p.string()};
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
    if (!out) throw UsageError{kFailure, "cannot write " + p.string()};
}

/// To the file when given, else stdout.
void emit(const std::string& out_path, const std::string& text) {
    if (out_path.empty())
        std::cout << text;
    else
        write_text(out_path, text);
}

std::vector<store::CsvRow> read_csv(const std::string& path) {
    try {
        return store::parse_csv(read_text(path));
    } catch (const store::CsvError& e) {
        throw UsageError{kBadCsv, path + ":" + std::to_string(e.line()) + ": " + e.what()};
    }
}

scoring::DistanceMatrix read_matrix(const std::string& path) {
    const auto rows = read_csv(path);
    try {
        return store::matrix_from_rows(rows);
    } catch (const store::CsvError& e) {
        throw UsageError{kBadCsv, path + ":" + std::to_string(e.line()) + ": " + e.what()};
    }
}

std::string fixed6(double v) { return store::format_distance(v); }

int cmd_score(const std::string& dir, const std::string& out, std::uint64_t seed, int jobs) {
    const fs::path root = fs::path(dir).lexically_normal();
    if (!fs::is_directory(root)) throw UsageError{kFailure, "not a directory: " + dir};

    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(root))
        if (entry.is_regular_file() && imaging::has_image_extension(entry.path().filename().string()))
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());

    std::vector<imaging::NormalizedImage> images;
    std::vector<std::string> failed;
    for (const auto& f : files) {
        try {
            images.push_back(imaging::normalize_image(imaging::load_image_file(f), f.filename().string()));
        } catch (const DecodeError& e) {
            failed.push_back(f.filename().string() + ": " + e.what());
        }
    }
    if (!failed.empty()) {
        std::string msg = "cannot decode " + std::to_string(failed.size()) + " file(s):";
        for (const auto& f : failed) msg += "\n  " + f;
        throw UsageError{kDecodeFailure, msg};
    }
    if (images.size() < 2)
        throw UsageError{kTooFewImages, "need at least 2 images in " + dir + ", found " + std::to_string(images.size())};

    scoring::ScoringParams params;
    params.run_seed = seed;
    scoring::ScoreOptions options;
    options.threads = jobs;
    const auto matrix = scoring::score_dataset(images, params, options);

    std::string dirname = (root.has_filename() ? root : root.parent_path()).filename().string();
    if (dirname.empty() || dirname == ".") dirname = fs::absolute(root).lexically_normal().filename().string();
    fs::path target = store::export_filename(dirname);
    if (!out.empty()) target = fs::is_directory(out) ? fs::path(out) / target : fs::path(out);
    write_text(target, store::write_csv(store::rows_from_matrix(matrix)));

    const auto [lo, hi] = std::minmax_element(matrix.scores.begin(), matrix.scores.end(),
                                              [](const auto& a, const auto& b) { return a.distance < b.distance; });
    std::cout << "pairs: " << matrix.scores.size() << "\n"
              << "min distance: " << fixed6(lo->distance) << "\n"
              << "max distance: " << fixed6(hi->distance) << "\n"
              << "wrote " << target.string() << "\n";
    return kOk;
}

int cmd_curve(const std::string& csv, const std::string& out) {
    std::vector<scoring::PairScore> scores;
    for (const auto& r : read_csv(csv)) {
        scoring::PairScore s;
        s.name1 = std::min(r.name1, r.name2);
        s.name2 = std::max(r.name1, r.name2);
        s.distance = r.distance;
        scores.push_back(std::move(s));
    }
    const auto curve = analytics::build_curve(analytics::rank_pairs(std::move(scores)));
    std::string text = "rank,distance\n";
    for (const auto& p : curve.points) text += std::to_string(p.rank) + "," + fixed6(p.distance) + "\n";
    emit(out, text);
    (out.empty() ? std::cerr : std::cout) << "knee rank: "
                                          << (curve.knee_rank ? std::to_string(*curve.knee_rank) : "none") << "\n";
    return kOk;
}

int cmd_embed(const std::string& csv, const std::string& out) {
    const auto m = read_matrix(csv);
    if (m.coin_names.size() < 2)
        throw UsageError{kTooFewImages, "embedding needs at least 2 coins, found " + std::to_string(m.coin_names.size())};
    std::string text = "name,x,y\n";
    for (const auto& p : analytics::embed_2d(m))
        text += store::quote_field(p.coin_name) + "," + fixed6(p.x) + "," + fixed6(p.y) + "\n";
    emit(out, text);
    return kOk;
}

int cmd_cluster(const std::string& csv, double threshold, const std::string& out) {
    const auto m = read_matrix(csv);
    std::string text = "name,cluster_id\n";
    for (const auto& l : analytics::cluster(m, threshold))
        text += store::quote_field(l.coin_name) + "," + std::to_string(l.cluster_id) + "\n";
    emit(out, text);
    return kOk;
}

int cmd_serve(const std::string& config_path) {
    service::ServiceConfig config;
    try {
        config = service::load_config(config_path);
        service::apply_env(config);
    } catch (const service::ConfigError& e) {
        throw UsageError{kFailure, e.what()};
    }

    // Handle SIGINT/SIGTERM on a dedicated thread so stop() runs outside a signal handler.
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    std::unique_ptr<service::Server> server;
    try {
        server = std::make_unique<service::Server>(config);
        server->bind();
    } catch (const Error& e) {
        throw UsageError{kFailure, e.what()};
    }
    std::cout << "dielink listening on " << config.bind << ":" << server->port() << std::endl;

    std::thread waiter([&] {
        int sig = 0;
        sigwait(&signals, &sig);
        server->stop();
    });
    server->run();
    // run() also returns if the listener fails; wake the waiter either way.
    pthread_kill(waiter.native_handle(), SIGTERM);
    waiter.join();
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dielink: die-link scoring for coin photographs"};
    app.require_subcommand(1);

    std::string dir, csv, out, config;
    std::uint64_t seed = 0;
    int jobs = 0;
    double threshold = 0.0;

    auto* score = app.add_subcommand("score", "Score every image pair of a directory and write the notations CSV");
    score->add_option("image-dir", dir, "Directory of PNG, JPEG or TIFF photographs")->required();
    score->add_option("--out", out, "Output CSV path, or a directory for notations_<dirname>.csv");
    score->add_option("--seed", seed, "Run seed for registration sampling")->capture_default_str();
    score->add_option("--jobs", jobs, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);

    auto* curve = app.add_subcommand("curve", "Ranked distance curve (rank,distance) and its knee");
    curve->add_option("csv", csv, "Notations CSV")->required();
    curve->add_option("--out", out, "Points file (default: stdout)");

    auto* embed = app.add_subcommand("embed", "2D classical MDS coordinates (name,x,y)");
    embed->add_option("csv", csv, "Notations CSV")->required();
    embed->add_option("--out", out, "Coordinates file (default: stdout)");

    auto* clus = app.add_subcommand("cluster", "Provisional single-linkage clusters (name,cluster_id)");
    clus->add_option("csv", csv, "Notations CSV")->required();
    clus->add_option("--threshold", threshold, "Link distance cut in [0,1]")->required()->check(CLI::Range(0.0, 1.0));
    clus->add_option("--out", out, "Output file (default: stdout)");

    auto* serve = app.add_subcommand("serve", "Run the HTTP service");
    serve->add_option("--config", config, "JSON config file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*score) return cmd_score(dir, out, seed, jobs);
        if (*curve) return cmd_curve(csv, out);
        if (*embed) return cmd_embed(csv, out);
        if (*clus) return cmd_cluster(csv, threshold, out);
        if (*serve) return cmd_serve(config);
    } catch (const UsageError& e) {
        std::cerr << "dielink: " << e.message << "\n";
        return e.code;
    } catch (const std::exception& e) {
        std::cerr << "dielink: " << e.what() << "\n";
        return kFailure;
    }
    return kFailure;
}
