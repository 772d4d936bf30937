#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "dielink/errors.hpp"
#include "dielink/scoring/score_dataset.hpp"
#include "dielink/store/csv.hpp"
#include "dielink/store/notes.hpp"
#include "dielink/store/upload.hpp"

struct sqlite3;

namespace dielink::store {

class StoreError : public Error {
public:
    using Error::Error;
};
class DuplicateName : public StoreError {
public:
    using StoreError::StoreError;
};
class DuplicateFileNames : public StoreError {
public:
    using StoreError::StoreError;
};
class UnknownDataset : public StoreError {
public:
    using StoreError::StoreError;
};
class UnknownPair : public StoreError {
public:
    using StoreError::StoreError;
};
class InvalidState : public StoreError {
public:
    using StoreError::StoreError;
};
class DatasetNotComputed : public StoreError {
public:
    using StoreError::StoreError;
};

enum class DatasetKind { SingleType, Treasure };
enum class DatasetState { Computing, Computed, Failed };

std::string_view kind_name(DatasetKind k) noexcept;    ///< "single_type" | "treasure"
std::string_view state_name(DatasetState s) noexcept;  ///< "computing" | "computed" | "failed"
std::optional<DatasetKind> parse_kind(std::string_view text) noexcept;

struct DatasetRecord {
    std::string id;
    std::string name;
    DatasetKind kind = DatasetKind::SingleType;
    DatasetState state = DatasetState::Computing;
    std::vector<std::string> coin_names;  ///< sorted
    std::int64_t created_at = 0;          ///< unix seconds
    std::string error;                    ///< set when failed
};

struct Evaluation {
    std::string name1;
    std::string name2;
    Note note = Note::NotEvaluated;
    std::string comment;
};

struct DatasetSummary {
    std::size_t coins = 0;
    std::size_t potential_links = 0;
    std::map<Note, std::size_t> category_counts;  ///< all six keys present
};

struct PairRecord {
    std::size_t rank = 0;  ///< 1-based global rank
    scoring::PairScore score;
    Note note = Note::NotEvaluated;
    std::string comment;
};

struct ExportedFile {
    std::string filename;
    std::string content;
};

/// SQLite-backed store. One connection; every call is serialized, and each
/// mutation is a single transaction. Use ":memory:" for a private database.
class Datastore {
public:
    explicit Datastore(const std::filesystem::path& db_path);
    ~Datastore();
    Datastore(const Datastore&) = delete;
    Datastore& operator=(const Datastore&) = delete;

    DatasetRecord create_dataset(const std::string& name, DatasetKind kind, const std::vector<UploadEntry>& entries);
    DatasetRecord complete_dataset(const std::string& id, const scoring::DistanceMatrix& matrix);
    DatasetRecord fail_dataset(const std::string& id, const std::string& message);

    DatasetRecord get(const std::string& id) const;
    std::optional<DatasetRecord> find(const std::string& id) const;
    /// Ordered by name.
    std::vector<DatasetRecord> list() const;

    std::vector<UploadEntry> images(const std::string& id) const;
    std::optional<std::vector<std::uint8_t>> image(const std::string& id, const std::string& name) const;

    /// Pair names in either order. A nullopt comment keeps the stored one.
    Evaluation set_evaluation(const std::string& id, const std::string& name_a, const std::string& name_b, Note note,
                              std::optional<std::string> comment = std::nullopt);
    DatasetSummary summarize(const std::string& id) const;

    std::vector<PairRecord> ranked_pairs(const std::string& id) const;
    /// Pairs where either name contains `query`, ASCII case-insensitive, rank order kept.
    std::vector<PairRecord> search_pairs(const std::string& id, const std::string& query) const;
    scoring::DistanceMatrix matrix(const std::string& id) const;

    ExportedFile export_csv(const std::string& id) const;
    /// Apply the notes and comments of an exported CSV. Every row must name a
    /// stored pair. Applied atomically.
    void import_csv(const std::string& id, std::string_view csv);

private:
    DatasetRecord load_record(const std::string& id) const;
    void require_computed(const DatasetRecord& r) const;

    sqlite3* db_ = nullptr;
    mutable std::mutex mutex_;
};

}  // namespace dielink::store
