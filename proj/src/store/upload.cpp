#include "dielink/store/upload.hpp"

#include <optional>

#include "dielink/imaging/image_io.hpp"
#include "dielink/store/zip_archive.hpp"

namespace dielink::store {

std::string_view rule_code(UploadRule rule) noexcept {
    switch (rule) {
        case UploadRule::ArchiveTooLarge: return "ARCHIVE_TOO_LARGE";
        case UploadRule::TooManyFiles: return "TOO_MANY_FILES";
        case UploadRule::NonImageEntry: return "NON_IMAGE_ENTRY";
        case UploadRule::CorruptArchive: return "CORRUPT_ARCHIVE";
    }
    return "UNKNOWN";
}

namespace {

bool ignored(const ZipEntryInfo& e) {
    return e.is_directory || e.name.rfind("__MACOSX/", 0) == 0;
}

std::string base_name(const std::string& path) {
    const auto slash = path.find_last_of("/\\");
    return slash == std::string::npos ? path : path.substr(slash + 1);
}

}  // namespace

std::vector<UploadEntry> validate_upload(std::span<const std::uint8_t> archive, const UploadLimits& limits) {
    std::optional<ZipReader> reader;
    try {
        reader.emplace(archive);
    } catch (const CorruptArchive& e) {
        throw UploadRejected(UploadRule::CorruptArchive, e.what());
    }

    std::vector<const ZipEntryInfo*> files;
    std::uint64_t total = 0;
    for (const auto& e : reader->entries()) {
        if (ignored(e)) continue;
        files.push_back(&e);
        total += e.uncompressed_size;
    }
    if (files.size() > limits.max_files)
        throw UploadRejected(UploadRule::TooManyFiles, "archive holds " + std::to_string(files.size()) +
                                                           " files, the limit is " + std::to_string(limits.max_files));
    if (total > limits.max_total_bytes)
        throw UploadRejected(UploadRule::ArchiveTooLarge, "archive expands to " + std::to_string(total) +
                                                              " bytes, the limit is " +
                                                              std::to_string(limits.max_total_bytes));

    std::vector<UploadEntry> out;
    out.reserve(files.size());
    for (const ZipEntryInfo* e : files) {
        std::vector<std::uint8_t> bytes;
        try {
            bytes = reader->extract(*e);
        } catch (const CorruptArchive& err) {
            throw UploadRejected(UploadRule::CorruptArchive, err.what(), e->name);
        }
        try {
            (void)imaging::load_image(bytes);
        } catch (const DecodeError&) {
            throw UploadRejected(UploadRule::NonImageEntry, "not an image: " + e->name, e->name);
        }
        out.push_back({base_name(e->name), std::move(bytes)});
    }
    return out;
}

}  // namespace dielink::store
