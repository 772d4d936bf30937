#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>

#include "dielink/errors.hpp"
#include "dielink/store/upload.hpp"

namespace dielink::service {

class ConfigError : public Error {
public:
    using Error::Error;
};

struct ServiceConfig {
    std::string bind = "127.0.0.1";
    int port = 8080;  ///< 0 picks a free port
    std::filesystem::path data_dir = "dielink-data";
    std::string token;
    int workers = 0;  ///< threads per scoring job; 0 = all cores
    std::uint64_t seed = 0;
    store::UploadLimits upload_limits;
};

/// JSON object with any of: bind, port, data_dir, token, workers, seed,
/// max_upload_bytes, max_files. Unknown keys are rejected. A relative
/// data_dir is resolved against `base_dir`.
ServiceConfig parse_config(std::string_view json, const std::filesystem::path& base_dir = {});
ServiceConfig load_config(const std::filesystem::path& file);

using EnvLookup = std::function<const char*(const char*)>;

/// DIELINK_BIND, DIELINK_PORT, DIELINK_DATA_DIR, DIELINK_TOKEN, DIELINK_WORKERS override the file.
void apply_env(ServiceConfig& config, const EnvLookup& lookup);
void apply_env(ServiceConfig& config);

/// Throws ConfigError on an empty token, a bad port, or a worker count < 0.
void validate(const ServiceConfig& config);

/// Creates data_dir when its parent exists; throws ConfigError otherwise.
void prepare_data_dir(const ServiceConfig& config);

}  // namespace dielink::service
