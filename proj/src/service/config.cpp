#include "dielink/service/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace dielink::service {

namespace {

template <typename T>
T parse_int(std::string_view text, const char* what) {
    T v{};
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || ec != std::errc() || end != text.data() + text.size())
        throw ConfigError(std::string(what) + ": not an integer: '" + std::string(text) + "'");
    return v;
}

}  // namespace

ServiceConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    ServiceConfig c;
    try {
        for (const auto& [key, value] : j.items()) {
            if (key == "bind") c.bind = value.get<std::string>();
            else if (key == "port") c.port = value.get<int>();
            else if (key == "data_dir") c.data_dir = value.get<std::string>();
            else if (key == "token") c.token = value.get<std::string>();
            else if (key == "workers") c.workers = value.get<int>();
            else if (key == "seed") c.seed = value.get<std::uint64_t>();
            else if (key == "max_upload_bytes") c.upload_limits.max_total_bytes = value.get<std::uint64_t>();
            else if (key == "max_files") c.upload_limits.max_files = value.get<std::size_t>();
            else throw ConfigError("unknown config key: " + key);
        }
    } catch (const nlohmann::json::type_error& e) {
        throw ConfigError(std::string("config value has the wrong type: ") + e.what());
    }
    if (c.data_dir.is_relative() && !base_dir.empty()) c.data_dir = base_dir / c.data_dir;
    return c;
}

ServiceConfig load_config(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot read config " + file.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), file.parent_path());
}

void apply_env(ServiceConfig& c, const EnvLookup& lookup) {
    if (const char* v = lookup("DIELINK_BIND")) c.bind = v;
    if (const char* v = lookup("DIELINK_PORT")) c.port = parse_int<int>(v, "DIELINK_PORT");
    if (const char* v = lookup("DIELINK_DATA_DIR")) c.data_dir = v;
    if (const char* v = lookup("DIELINK_TOKEN")) c.token = v;
    if (const char* v = lookup("DIELINK_WORKERS")) c.workers = parse_int<int>(v, "DIELINK_WORKERS");
}

void apply_env(ServiceConfig& c) {
    apply_env(c, [](const char* name) { return std::getenv(name); });
}

void validate(const ServiceConfig& c) {
    if (c.token.empty()) throw ConfigError("an auth token is required (token or DIELINK_TOKEN)");
    if (c.port < 0 || c.port > 65535) throw ConfigError("port out of range: " + std::to_string(c.port));
    if (c.workers < 0) throw ConfigError("workers must be >= 0");
    if (c.bind.empty()) throw ConfigError("bind address is empty");
    if (c.upload_limits.max_files == 0) throw ConfigError("max_files must be positive");
}

void prepare_data_dir(const ServiceConfig& c) {
    namespace fs = std::filesystem;
    std::error_code ec;
    if (fs::is_directory(c.data_dir, ec)) return;
    if (fs::exists(c.data_dir, ec)) throw ConfigError("data_dir is not a directory: " + c.data_dir.string());
    fs::path dir = fs::absolute(c.data_dir, ec).lexically_normal();
    if (!dir.has_filename()) dir = dir.parent_path();
    const fs::path parent = dir.parent_path();
    if (!fs::is_directory(parent, ec))
        throw ConfigError("data_dir parent does not exist: " + parent.string());
    if (!fs::create_directory(c.data_dir, ec) || ec)
        throw ConfigError("cannot create data_dir " + c.data_dir.string() + ": " + ec.message());
}

}  // namespace dielink::service
