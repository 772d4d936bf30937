#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dielink/errors.hpp"

namespace dielink::store {

enum class UploadRule { ArchiveTooLarge, TooManyFiles, NonImageEntry, CorruptArchive };

/// Machine-readable id, e.g. "TOO_MANY_FILES".
std::string_view rule_code(UploadRule rule) noexcept;

class UploadRejected : public Error {
public:
    UploadRejected(UploadRule rule, std::string message, std::string entry = {})
        : Error(std::move(message)), rule_(rule), entry_(std::move(entry)) {}
    UploadRule rule() const noexcept { return rule_; }
    /// Offending member for NonImageEntry / CorruptArchive, else empty.
    const std::string& entry() const noexcept { return entry_; }

private:
    UploadRule rule_;
    std::string entry_;
};

struct UploadLimits {
    /// Sum of uncompressed member sizes.
    std::uint64_t max_total_bytes = 500ULL * 1000 * 1000;
    std::size_t max_files = 500;
};

struct UploadEntry {
    std::string name;  ///< base name, directories stripped
    std::vector<std::uint8_t> bytes;
};

/// Accept a zip only if every file member is a decodable image and the
/// archive is within `limits`. Directory members and macOS resource forks
/// (__MACOSX/) are ignored. Throws UploadRejected.
std::vector<UploadEntry> validate_upload(std::span<const std::uint8_t> archive, const UploadLimits& limits = {});

}  // namespace dielink::store
