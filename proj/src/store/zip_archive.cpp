#include "dielink/store/zip_archive.hpp"

#include <zlib.h>

#include <limits>

namespace dielink::store {

namespace {

constexpr std::uint32_t kLocalHeaderSig = 0x04034b50;
constexpr std::uint32_t kCentralSig = 0x02014b50;
constexpr std::uint32_t kEndSig = 0x06054b50;
constexpr std::size_t kEndRecordSize = 22;
constexpr std::size_t kCentralHeaderSize = 46;
constexpr std::size_t kLocalHeaderSize = 30;

std::uint16_t rd16(std::span<const std::uint8_t> d, std::size_t at) {
    if (at + 2 > d.size()) throw CorruptArchive("zip: truncated record");
    return static_cast<std::uint16_t>(d[at] | (d[at + 1] << 8));
}

std::uint32_t rd32(std::span<const std::uint8_t> d, std::size_t at) {
    if (at + 4 > d.size()) throw CorruptArchive("zip: truncated record");
    return static_cast<std::uint32_t>(d[at]) | (static_cast<std::uint32_t>(d[at + 1]) << 8) |
           (static_cast<std::uint32_t>(d[at + 2]) << 16) | (static_cast<std::uint32_t>(d[at + 3]) << 24);
}

void wr16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void wr32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t crc_of(std::span<const std::uint8_t> bytes) {
    uLong crc = crc32(0L, Z_NULL, 0);
    std::size_t pos = 0;
    while (pos < bytes.size()) {
        const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - pos, 1u << 30));
        crc = crc32(crc, bytes.data() + pos, chunk);
        pos += chunk;
    }
    return static_cast<std::uint32_t>(crc);
}

}  // namespace

ZipReader::ZipReader(std::span<const std::uint8_t> archive) : data_(archive) {
    if (data_.size() < kEndRecordSize) throw CorruptArchive("zip: too short for an end-of-directory record");
    // The end record sits in the last 22 + 65535 bytes (trailing comment).
    std::size_t eocd = std::numeric_limits<std::size_t>::max();
    const std::size_t lowest = data_.size() > kEndRecordSize + 0xFFFF ? data_.size() - kEndRecordSize - 0xFFFF : 0;
    for (std::size_t pos = data_.size() - kEndRecordSize + 1; pos-- > lowest;) {
        if (rd32(data_, pos) == kEndSig) {
            eocd = pos;
            break;
        }
    }
    if (eocd == std::numeric_limits<std::size_t>::max()) throw CorruptArchive("zip: end-of-directory record not found");

    const std::uint16_t count = rd16(data_, eocd + 10);
    const std::uint32_t dir_size = rd32(data_, eocd + 12);
    const std::uint32_t dir_offset = rd32(data_, eocd + 16);
    if (count == 0xFFFF || dir_offset == 0xFFFFFFFF) throw CorruptArchive("zip: zip64 archives are not supported");
    if (static_cast<std::uint64_t>(dir_offset) + dir_size > eocd) throw CorruptArchive("zip: central directory out of range");

    std::size_t pos = dir_offset;
    entries_.reserve(count);
    for (std::uint16_t i = 0; i < count; ++i) {
        if (rd32(data_, pos) != kCentralSig) throw CorruptArchive("zip: bad central directory signature");
        ZipEntryInfo e;
        const std::uint16_t flags = rd16(data_, pos + 8);
        e.method = rd16(data_, pos + 10);
        e.crc32 = rd32(data_, pos + 16);
        e.compressed_size = rd32(data_, pos + 20);
        e.uncompressed_size = rd32(data_, pos + 24);
        const std::uint16_t name_len = rd16(data_, pos + 28);
        const std::uint16_t extra_len = rd16(data_, pos + 30);
        const std::uint16_t comment_len = rd16(data_, pos + 32);
        e.local_header_offset = rd32(data_, pos + 42);
        if (pos + kCentralHeaderSize + name_len > data_.size()) throw CorruptArchive("zip: truncated file name");
        e.name.assign(reinterpret_cast<const char*>(data_.data() + pos + kCentralHeaderSize), name_len);
        if (flags & 0x1) throw CorruptArchive("zip: encrypted member " + e.name);
        e.is_directory = !e.name.empty() && e.name.back() == '/';
        entries_.push_back(std::move(e));
        pos += kCentralHeaderSize + name_len + extra_len + comment_len;
    }
}

std::vector<std::uint8_t> ZipReader::extract(const ZipEntryInfo& e) const {
    const std::size_t at = e.local_header_offset;
    if (rd32(data_, at) != kLocalHeaderSig) throw CorruptArchive("zip: bad local header for " + e.name);
    const std::size_t start = at + kLocalHeaderSize + rd16(data_, at + 26) + rd16(data_, at + 28);
    if (start + e.compressed_size > data_.size()) throw CorruptArchive("zip: member data out of range: " + e.name);
    const auto payload = data_.subspan(start, e.compressed_size);

    std::vector<std::uint8_t> out;
    if (e.method == 0) {
        out.assign(payload.begin(), payload.end());
    } else if (e.method == 8) {
        out.resize(e.uncompressed_size);
        z_stream zs{};
        if (inflateInit2(&zs, -MAX_WBITS) != Z_OK) throw CorruptArchive("zip: inflate init failed");
        zs.next_in = const_cast<Bytef*>(payload.data());
        zs.avail_in = static_cast<uInt>(payload.size());
        zs.next_out = out.data();
        zs.avail_out = static_cast<uInt>(out.size());
        const int rc = inflate(&zs, Z_FINISH);
        const auto produced = zs.total_out;
        inflateEnd(&zs);
        // A member that inflates past its declared size ends with Z_BUF_ERROR, not Z_STREAM_END.
        if (rc != Z_STREAM_END || produced != e.uncompressed_size)
            throw CorruptArchive("zip: member does not inflate to its declared size: " + e.name);
    } else {
        throw CorruptArchive("zip: unsupported compression method " + std::to_string(e.method) + " for " + e.name);
    }
    if (out.size() != e.uncompressed_size || crc_of(out) != e.crc32)
        throw CorruptArchive("zip: checksum mismatch for " + e.name);
    return out;
}

void ZipWriter::add(const std::string& name, std::span<const std::uint8_t> content, bool use_deflate) {
    Member m{name, {}, content.size(), crc_of(content), static_cast<std::uint16_t>(use_deflate ? 8 : 0)};
    if (use_deflate) {
        z_stream zs{};
        deflateInit2(&zs, Z_DEFAULT_COMPRESSION, Z_DEFLATED, -MAX_WBITS, 8, Z_DEFAULT_STRATEGY);
        m.payload.resize(deflateBound(&zs, static_cast<uLong>(content.size())));
        zs.next_in = const_cast<Bytef*>(content.data());
        zs.avail_in = static_cast<uInt>(content.size());
        zs.next_out = m.payload.data();
        zs.avail_out = static_cast<uInt>(m.payload.size());
        deflate(&zs, Z_FINISH);
        m.payload.resize(zs.total_out);
        deflateEnd(&zs);
    } else {
        m.payload.assign(content.begin(), content.end());
    }
    members_.push_back(std::move(m));
}

std::vector<std::uint8_t> ZipWriter::finish() const {
    std::vector<std::uint8_t> out;
    std::vector<std::uint32_t> offsets;
    for (const Member& m : members_) {
        offsets.push_back(static_cast<std::uint32_t>(out.size()));
        wr32(out, kLocalHeaderSig);
        wr16(out, 20);
        wr16(out, 0x0800);  // UTF-8 names
        wr16(out, m.method);
        wr16(out, 0);
        wr16(out, 0x21);  // 1980-01-01
        wr32(out, m.crc32);
        wr32(out, static_cast<std::uint32_t>(m.payload.size()));
        wr32(out, static_cast<std::uint32_t>(m.uncompressed_size));
        wr16(out, static_cast<std::uint16_t>(m.name.size()));
        wr16(out, 0);
        out.insert(out.end(), m.name.begin(), m.name.end());
        out.insert(out.end(), m.payload.begin(), m.payload.end());
    }
    const auto dir_offset = static_cast<std::uint32_t>(out.size());
    for (std::size_t i = 0; i < members_.size(); ++i) {
        const Member& m = members_[i];
        wr32(out, kCentralSig);
        wr16(out, 20);
        wr16(out, 20);
        wr16(out, 0x0800);
        wr16(out, m.method);
        wr16(out, 0);
        wr16(out, 0x21);
        wr32(out, m.crc32);
        wr32(out, static_cast<std::uint32_t>(m.payload.size()));
        wr32(out, static_cast<std::uint32_t>(m.uncompressed_size));
        wr16(out, static_cast<std::uint16_t>(m.name.size()));
        wr16(out, 0);
        wr16(out, 0);
        wr16(out, 0);
        wr16(out, 0);
        wr32(out, 0);
        wr32(out, offsets[i]);
        out.insert(out.end(), m.name.begin(), m.name.end());
    }
    const auto dir_size = static_cast<std::uint32_t>(out.size() - dir_offset);
    wr32(out, kEndSig);
    wr16(out, 0);
    wr16(out, 0);
    wr16(out, static_cast<std::uint16_t>(members_.size()));
    wr16(out, static_cast<std::uint16_t>(members_.size()));
    wr32(out, dir_size);
    wr32(out, dir_offset);
    wr16(out, 0);
    return out;
}

}  // namespace dielink::store
