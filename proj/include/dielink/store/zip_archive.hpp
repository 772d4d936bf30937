#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dielink/errors.hpp"

namespace dielink::store {

class CorruptArchive : public Error {
public:
    using Error::Error;
};

/// Central-directory view of one zip member.
struct ZipEntryInfo {
    std::string name;
    std::uint64_t compressed_size = 0;
    std::uint64_t uncompressed_size = 0;
    std::uint16_t method = 0;  ///< 0 stored, 8 deflate
    std::uint32_t crc32 = 0;
    std::uint64_t local_header_offset = 0;
    bool is_directory = false;
};

/// Read-only zip reader over an in-memory archive (stored and deflate members,
/// no zip64, no encryption). Throws CorruptArchive.
class ZipReader {
public:
    explicit ZipReader(std::span<const std::uint8_t> archive);

    const std::vector<ZipEntryInfo>& entries() const noexcept { return entries_; }

    /// Inflate one member; the result is checked against the declared size and CRC.
    std::vector<std::uint8_t> extract(const ZipEntryInfo& entry) const;

private:
    std::span<const std::uint8_t> data_;
    std::vector<ZipEntryInfo> entries_;
};

/// Minimal zip writer; `deflate` selects method 8 over 0.
class ZipWriter {
public:
    void add(const std::string& name, std::span<const std::uint8_t> content, bool deflate = true);
    std::vector<std::uint8_t> finish() const;

private:
    struct Member {
        std::string name;
        std::vector<std::uint8_t> payload;
        std::uint64_t uncompressed_size;
        std::uint32_t crc32;
        std::uint16_t method;
    };
    std::vector<Member> members_;
};

}  // namespace dielink::store
