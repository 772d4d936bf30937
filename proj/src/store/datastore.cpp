#include "dielink/store/datastore.hpp"

#include <sqlite3.h>

#include <algorithm>
#include <chrono>
#include <random>
#include <set>

#include "dielink/analytics/analytics.hpp"

namespace dielink::store {

std::string_view kind_name(DatasetKind k) noexcept {
    return k == DatasetKind::SingleType ? "single_type" : "treasure";
}

std::string_view state_name(DatasetState s) noexcept {
    switch (s) {
        case DatasetState::Computing: return "computing";
        case DatasetState::Computed: return "computed";
        case DatasetState::Failed: return "failed";
    }
    return "";
}

std::optional<DatasetKind> parse_kind(std::string_view text) noexcept {
    if (text == "single_type") return DatasetKind::SingleType;
    if (text == "treasure") return DatasetKind::Treasure;
    return std::nullopt;
}

namespace {

DatasetState parse_state(std::string_view s) {
    if (s == "computed") return DatasetState::Computed;
    if (s == "failed") return DatasetState::Failed;
    return DatasetState::Computing;
}

class Stmt {
public:
    Stmt(sqlite3* db, const char* sql) : db_(db) {
        if (sqlite3_prepare_v2(db, sql, -1, &stmt_, nullptr) != SQLITE_OK)
            throw StoreError(std::string("sqlite prepare: ") + sqlite3_errmsg(db));
    }
    ~Stmt() { sqlite3_finalize(stmt_); }
    Stmt(const Stmt&) = delete;
    Stmt& operator=(const Stmt&) = delete;

    Stmt& bind(int i, const std::string& v) {
        check(sqlite3_bind_text(stmt_, i, v.data(), static_cast<int>(v.size()), SQLITE_TRANSIENT));
        return *this;
    }
    Stmt& bind(int i, std::string_view v) { return bind(i, std::string(v)); }
    Stmt& bind(int i, const char* v) { return bind(i, std::string(v)); }
    Stmt& bind(int i, double v) {
        check(sqlite3_bind_double(stmt_, i, v));
        return *this;
    }
    Stmt& bind(int i, std::int64_t v) {
        check(sqlite3_bind_int64(stmt_, i, v));
        return *this;
    }
    Stmt& bind(int i, const std::vector<std::uint8_t>& v) {
        check(sqlite3_bind_blob64(stmt_, i, v.data(), v.size(), SQLITE_TRANSIENT));
        return *this;
    }
    Stmt& bind_null(int i) {
        check(sqlite3_bind_null(stmt_, i));
        return *this;
    }

    /// True while rows remain.
    bool step() {
        const int rc = sqlite3_step(stmt_);
        if (rc == SQLITE_ROW) return true;
        if (rc == SQLITE_DONE) return false;
        throw StoreError(std::string("sqlite step: ") + sqlite3_errmsg(db_));
    }
    void run() {
        while (step()) {
        }
    }
    void reset() {
        sqlite3_reset(stmt_);
        sqlite3_clear_bindings(stmt_);
    }

    std::string text(int col) const {
        const auto* p = reinterpret_cast<const char*>(sqlite3_column_text(stmt_, col));
        return p ? std::string(p, static_cast<std::size_t>(sqlite3_column_bytes(stmt_, col))) : std::string();
    }
    double real(int col) const { return sqlite3_column_double(stmt_, col); }
    std::int64_t integer(int col) const { return sqlite3_column_int64(stmt_, col); }
    bool is_null(int col) const { return sqlite3_column_type(stmt_, col) == SQLITE_NULL; }
    std::vector<std::uint8_t> blob(int col) const {
        const auto* p = static_cast<const std::uint8_t*>(sqlite3_column_blob(stmt_, col));
        return p ? std::vector<std::uint8_t>(p, p + sqlite3_column_bytes(stmt_, col)) : std::vector<std::uint8_t>{};
    }

private:
    void check(int rc) {
        if (rc != SQLITE_OK) throw StoreError(std::string("sqlite bind: ") + sqlite3_errmsg(db_));
    }
    sqlite3* db_;
    sqlite3_stmt* stmt_ = nullptr;
};

void exec(sqlite3* db, const char* sql) {
    char* err = nullptr;
    if (sqlite3_exec(db, sql, nullptr, nullptr, &err) != SQLITE_OK) {
        std::string msg = err ? err : "unknown";
        sqlite3_free(err);
        throw StoreError("sqlite: " + msg);
    }
}

/// Rolls back unless committed.
class Transaction {
public:
    explicit Transaction(sqlite3* db) : db_(db) { exec(db_, "BEGIN IMMEDIATE"); }
    ~Transaction() {
        if (!done_) sqlite3_exec(db_, "ROLLBACK", nullptr, nullptr, nullptr);
    }
    void commit() {
        exec(db_, "COMMIT");
        done_ = true;
    }

private:
    sqlite3* db_;
    bool done_ = false;
};

std::string random_id() {
    static thread_local std::mt19937_64 gen{std::random_device{}()};
    char buf[33];
    std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(gen()),
                  static_cast<unsigned long long>(gen()));
    return buf;
}

constexpr const char* kSchema = R"sql(
CREATE TABLE IF NOT EXISTS datasets (
  id TEXT PRIMARY KEY,
  name TEXT NOT NULL UNIQUE,
  kind TEXT NOT NULL,
  state TEXT NOT NULL,
  created_at INTEGER NOT NULL,
  error TEXT NOT NULL DEFAULT ''
);
CREATE TABLE IF NOT EXISTS images (
  dataset_id TEXT NOT NULL REFERENCES datasets(id),
  name TEXT NOT NULL,
  bytes BLOB NOT NULL,
  PRIMARY KEY (dataset_id, name)
);
CREATE TABLE IF NOT EXISTS scores (
  dataset_id TEXT NOT NULL REFERENCES datasets(id),
  rank INTEGER NOT NULL,
  name1 TEXT NOT NULL,
  name2 TEXT NOT NULL,
  distance REAL NOT NULL,
  alignable INTEGER NOT NULL,
  inliers INTEGER NOT NULL,
  ta REAL, tb REAL, ttx REAL, tty REAL,
  note TEXT NOT NULL DEFAULT 'NotEvaluated',
  comment TEXT NOT NULL DEFAULT '',
  PRIMARY KEY (dataset_id, name1, name2)
);
CREATE INDEX IF NOT EXISTS scores_rank ON scores(dataset_id, rank);
)sql";

constexpr const char* kPairColumns =
    "rank, name1, name2, distance, alignable, inliers, ta, tb, ttx, tty, note, comment";

PairRecord read_pair(const Stmt& s) {
    PairRecord p;
    p.rank = static_cast<std::size_t>(s.integer(0));
    p.score.name1 = s.text(1);
    p.score.name2 = s.text(2);
    p.score.distance = s.real(3);
    p.score.alignable = s.integer(4) != 0;
    p.score.inliers = static_cast<int>(s.integer(5));
    if (!s.is_null(6))
        p.score.transform = registration::SimilarityTransform::from_linear(s.real(6), s.real(7), s.real(8), s.real(9));
    p.note = parse_note(s.text(10)).value_or(Note::NotEvaluated);
    p.comment = s.text(11);
    return p;
}

std::string ascii_lower(std::string s) {
    for (char& c : s)
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    return s;
}

}  // namespace

Datastore::Datastore(const std::filesystem::path& db_path) {
    if (sqlite3_open_v2(db_path.string().c_str(), &db_,
                        SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_FULLMUTEX, nullptr) != SQLITE_OK) {
        std::string msg = db_ ? sqlite3_errmsg(db_) : "out of memory";
        sqlite3_close(db_);
        db_ = nullptr;
        throw StoreError("cannot open database " + db_path.string() + ": " + msg);
    }
    sqlite3_busy_timeout(db_, 5000);
    exec(db_, "PRAGMA foreign_keys = ON");
    exec(db_, kSchema);
    // A restart interrupts running jobs; they cannot resume.
    exec(db_, "UPDATE datasets SET state = 'failed', error = 'interrupted by a restart' WHERE state = 'computing'");
}

Datastore::~Datastore() { sqlite3_close(db_); }

DatasetRecord Datastore::load_record(const std::string& id) const {
    Stmt s(db_, "SELECT id, name, kind, state, created_at, error FROM datasets WHERE id = ?");
    s.bind(1, id);
    if (!s.step()) throw UnknownDataset("unknown dataset " + id);
    DatasetRecord r;
    r.id = s.text(0);
    r.name = s.text(1);
    r.kind = parse_kind(s.text(2)).value_or(DatasetKind::SingleType);
    r.state = parse_state(s.text(3));
    r.created_at = s.integer(4);
    r.error = s.text(5);
    Stmt names(db_, "SELECT name FROM images WHERE dataset_id = ? ORDER BY name");
    names.bind(1, id);
    while (names.step()) r.coin_names.push_back(names.text(0));
    return r;
}

void Datastore::require_computed(const DatasetRecord& r) const {
    if (r.state != DatasetState::Computed)
        throw DatasetNotComputed("dataset " + r.name + " is " + std::string(state_name(r.state)));
}

DatasetRecord Datastore::create_dataset(const std::string& name, DatasetKind kind,
                                        const std::vector<UploadEntry>& entries) {
    if (name.empty()) throw std::invalid_argument("dataset name is empty");
    std::set<std::string> seen;
    for (const auto& e : entries)
        if (!seen.insert(e.name).second) throw DuplicateFileNames("duplicate file name in upload: " + e.name);

    std::lock_guard lock(mutex_);
    {
        Stmt s(db_, "SELECT 1 FROM datasets WHERE name = ?");
        s.bind(1, name);
        if (s.step()) throw DuplicateName("a dataset named " + name + " already exists");
    }
    const std::string id = random_id();
    const auto now = std::chrono::duration_cast<std::chrono::seconds>(
                         std::chrono::system_clock::now().time_since_epoch())
                         .count();
    Transaction tx(db_);
    Stmt ins(db_, "INSERT INTO datasets (id, name, kind, state, created_at) VALUES (?, ?, ?, 'computing', ?)");
    ins.bind(1, id).bind(2, name).bind(3, kind_name(kind)).bind(4, static_cast<std::int64_t>(now)).run();
    Stmt img(db_, "INSERT INTO images (dataset_id, name, bytes) VALUES (?, ?, ?)");
    for (const auto& e : entries) {
        img.bind(1, id).bind(2, e.name).bind(3, e.bytes).run();
        img.reset();
    }
    tx.commit();
    return load_record(id);
}

DatasetRecord Datastore::complete_dataset(const std::string& id, const scoring::DistanceMatrix& matrix) {
    std::lock_guard lock(mutex_);
    const DatasetRecord r = load_record(id);
    if (r.state != DatasetState::Computing)
        throw InvalidState("dataset " + r.name + " is already " + std::string(state_name(r.state)));
    scoring::validate_matrix(matrix);
    std::vector<std::string> names = matrix.coin_names;
    std::sort(names.begin(), names.end());
    if (names != r.coin_names) throw std::invalid_argument("matrix coins differ from the dataset's images");

    const auto ranked = analytics::rank_pairs(matrix);
    Transaction tx(db_);
    Stmt ins(db_,
             "INSERT INTO scores (dataset_id, rank, name1, name2, distance, alignable, inliers, ta, tb, ttx, tty) "
             "VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?)");
    std::int64_t rank = 1;
    for (const auto& s : ranked.entries) {
        ins.bind(1, id).bind(2, rank++).bind(3, s.name1).bind(4, s.name2).bind(5, s.distance);
        ins.bind(6, static_cast<std::int64_t>(s.alignable)).bind(7, static_cast<std::int64_t>(s.inliers));
        if (s.transform) {
            ins.bind(8, s.transform->a()).bind(9, s.transform->b()).bind(10, s.transform->tx()).bind(11, s.transform->ty());
        } else {
            ins.bind_null(8).bind_null(9).bind_null(10).bind_null(11);
        }
        ins.run();
        ins.reset();
    }
    Stmt up(db_, "UPDATE datasets SET state = 'computed' WHERE id = ?");
    up.bind(1, id).run();
    tx.commit();
    return load_record(id);
}

DatasetRecord Datastore::fail_dataset(const std::string& id, const std::string& message) {
    std::lock_guard lock(mutex_);
    const DatasetRecord r = load_record(id);
    if (r.state != DatasetState::Computing)
        throw InvalidState("dataset " + r.name + " is already " + std::string(state_name(r.state)));
    Stmt up(db_, "UPDATE datasets SET state = 'failed', error = ? WHERE id = ?");
    up.bind(1, message).bind(2, id).run();
    return load_record(id);
}

DatasetRecord Datastore::get(const std::string& id) const {
    std::lock_guard lock(mutex_);
    return load_record(id);
}

std::optional<DatasetRecord> Datastore::find(const std::string& id) const {
    try {
        return get(id);
    } catch (const UnknownDataset&) {
        return std::nullopt;
    }
}

std::vector<DatasetRecord> Datastore::list() const {
    std::lock_guard lock(mutex_);
    std::vector<std::string> ids;
    Stmt s(db_, "SELECT id FROM datasets ORDER BY name");
    while (s.step()) ids.push_back(s.text(0));
    std::vector<DatasetRecord> out;
    for (const auto& id : ids) out.push_back(load_record(id));
    return out;
}

std::vector<UploadEntry> Datastore::images(const std::string& id) const {
    std::lock_guard lock(mutex_);
    (void)load_record(id);
    Stmt s(db_, "SELECT name, bytes FROM images WHERE dataset_id = ? ORDER BY name");
    s.bind(1, id);
    std::vector<UploadEntry> out;
    while (s.step()) out.push_back({s.text(0), s.blob(1)});
    return out;
}

std::optional<std::vector<std::uint8_t>> Datastore::image(const std::string& id, const std::string& name) const {
    std::lock_guard lock(mutex_);
    (void)load_record(id);
    Stmt s(db_, "SELECT bytes FROM images WHERE dataset_id = ? AND name = ?");
    s.bind(1, id).bind(2, name);
    if (!s.step()) return std::nullopt;
    return s.blob(0);
}

Evaluation Datastore::set_evaluation(const std::string& id, const std::string& name_a, const std::string& name_b,
                                     Note note, std::optional<std::string> comment) {
    std::lock_guard lock(mutex_);
    require_computed(load_record(id));
    const std::string& n1 = std::min(name_a, name_b);
    const std::string& n2 = std::max(name_a, name_b);
    Transaction tx(db_);
    Stmt s(db_, "SELECT comment FROM scores WHERE dataset_id = ? AND name1 = ? AND name2 = ?");
    s.bind(1, id).bind(2, n1).bind(3, n2);
    if (!s.step()) throw UnknownPair("no pair " + n1 + " / " + n2);
    Evaluation ev{n1, n2, note, comment ? *comment : s.text(0)};
    Stmt up(db_, "UPDATE scores SET note = ?, comment = ? WHERE dataset_id = ? AND name1 = ? AND name2 = ?");
    up.bind(1, note_key(note)).bind(2, ev.comment).bind(3, id).bind(4, n1).bind(5, n2).run();
    tx.commit();
    return ev;
}

DatasetSummary Datastore::summarize(const std::string& id) const {
    std::lock_guard lock(mutex_);
    const DatasetRecord r = load_record(id);
    require_computed(r);
    DatasetSummary sum;
    sum.coins = r.coin_names.size();
    sum.potential_links = scoring::DistanceMatrix::pair_count(sum.coins);
    for (Note n : kAllNotes) sum.category_counts[n] = 0;
    Stmt s(db_, "SELECT note, COUNT(*) FROM scores WHERE dataset_id = ? GROUP BY note");
    s.bind(1, id);
    while (s.step())
        if (auto n = parse_note(s.text(0))) sum.category_counts[*n] = static_cast<std::size_t>(s.integer(1));
    return sum;
}

std::vector<PairRecord> Datastore::ranked_pairs(const std::string& id) const {
    std::lock_guard lock(mutex_);
    require_computed(load_record(id));
    Stmt s(db_, (std::string("SELECT ") + kPairColumns + " FROM scores WHERE dataset_id = ? ORDER BY rank").c_str());
    s.bind(1, id);
    std::vector<PairRecord> out;
    while (s.step()) out.push_back(read_pair(s));
    return out;
}

std::vector<PairRecord> Datastore::search_pairs(const std::string& id, const std::string& query) const {
    auto all = ranked_pairs(id);
    if (query.empty()) return all;
    const std::string q = ascii_lower(query);
    std::erase_if(all, [&](const PairRecord& p) {
        return ascii_lower(p.score.name1).find(q) == std::string::npos &&
               ascii_lower(p.score.name2).find(q) == std::string::npos;
    });
    return all;
}

scoring::DistanceMatrix Datastore::matrix(const std::string& id) const {
    const DatasetRecord r = get(id);
    scoring::DistanceMatrix m;
    m.coin_names = r.coin_names;
    for (auto& p : ranked_pairs(id)) m.scores.push_back(std::move(p.score));
    return m;
}

ExportedFile Datastore::export_csv(const std::string& id) const {
    const DatasetRecord r = get(id);
    std::vector<CsvRow> rows;
    for (auto& p : ranked_pairs(id))
        rows.push_back({std::move(p.score.name1), std::move(p.score.name2), p.score.distance, p.note,
                        std::move(p.comment), 0});
    return {export_filename(r.name), write_csv(rows)};
}

void Datastore::import_csv(const std::string& id, std::string_view csv) {
    const auto rows = parse_csv(csv);
    std::lock_guard lock(mutex_);
    require_computed(load_record(id));
    Transaction tx(db_);
    Stmt up(db_, "UPDATE scores SET note = ?, comment = ? WHERE dataset_id = ? AND name1 = ? AND name2 = ?");
    for (const auto& r : rows) {
        up.bind(1, note_key(r.note)).bind(2, r.comment).bind(3, id);
        up.bind(4, std::min(r.name1, r.name2)).bind(5, std::max(r.name1, r.name2)).run();
        if (sqlite3_changes(db_) != 1)
            throw UnknownPair("line " + std::to_string(r.line) + ": no pair " + r.name1 + " / " + r.name2);
        up.reset();
    }
    tx.commit();
}

}  // namespace dielink::store
