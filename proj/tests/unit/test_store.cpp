#include "doctest.h"

#include <filesystem>
#include <set>

#include "dielink/imaging/image_io.hpp"
#include "dielink/store/csv.hpp"
#include "dielink/store/datastore.hpp"
#include "dielink/store/notes.hpp"
#include "dielink/store/upload.hpp"
#include "dielink/store/zip_archive.hpp"
#include "synthetic.hpp"

using namespace dielink;
using namespace dielink::store;
namespace fs = std::filesystem;

namespace {

std::vector<std::uint8_t> bytes_of(std::string_view s) { return {s.begin(), s.end()}; }

std::vector<std::uint8_t> tiny_png(std::uint64_t seed) { return imaging::encode_png(testing::uniform_noise(4, seed)); }

std::vector<std::uint8_t> zip_of(const std::vector<std::pair<std::string, std::vector<std::uint8_t>>>& members,
                                 bool deflate = true) {
    ZipWriter w;
    for (const auto& [name, content] : members) w.add(name, content, deflate);
    return w.finish();
}

std::vector<std::pair<std::string, std::vector<std::uint8_t>>> pngs(int n) {
    std::vector<std::pair<std::string, std::vector<std::uint8_t>>> m;
    for (int i = 0; i < n; ++i) m.emplace_back("coin" + std::to_string(i) + ".png", tiny_png(i));
    return m;
}

UploadRule rejection(std::span<const std::uint8_t> archive, const UploadLimits& limits = {}) {
    try {
        validate_upload(archive, limits);
    } catch (const UploadRejected& e) {
        return e.rule();
    }
    FAIL("upload was accepted");
    return UploadRule::CorruptArchive;
}

std::vector<UploadEntry> entries(int n) {
    std::vector<UploadEntry> out;
    for (int i = 0; i < n; ++i) out.push_back({"c" + std::to_string(10 + i) + ".png", tiny_png(i)});
    return out;
}

scoring::DistanceMatrix fake_matrix(const std::vector<UploadEntry>& e, std::uint64_t seed = 1) {
    testing::Rng rng(seed);
    scoring::DistanceMatrix m;
    for (const auto& x : e) m.coin_names.push_back(x.name);
    for (std::size_t i = 0; i < e.size(); ++i)
        for (std::size_t j = i + 1; j < e.size(); ++j) {
            scoring::PairScore s;
            s.name1 = std::min(e[i].name, e[j].name);
            s.name2 = std::max(e[i].name, e[j].name);
            s.distance = std::round(rng.uniform() * 1e6) / 1e6;
            s.alignable = s.distance < 0.9;
            if (s.alignable) s.transform = registration::SimilarityTransform(0.1, 1.01, 2, -3);
            m.scores.push_back(s);
        }
    return m;
}

/// Independent RFC 4180 reader: fields of each record.
std::vector<std::vector<std::string>> rfc4180(const std::string& text) {
    std::vector<std::vector<std::string>> recs(1, std::vector<std::string>(1));
    bool quoted = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        auto& field = recs.back().back();
        if (quoted) {
            if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') {
                field += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            recs.back().emplace_back();
        } else if (c == '\n') {
            recs.emplace_back(1);
        } else {
            field += c;
        }
    }
    if (recs.back().size() == 1 && recs.back()[0].empty()) recs.pop_back();
    return recs;
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("dielink-store-" + std::to_string(testing::Rng(std::random_device{}()).next()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("zip: round trip stored and deflated members") {
    const auto big = std::vector<std::uint8_t>(100000, 'x');
    for (bool deflate : {false, true}) {
        const auto archive = zip_of({{"a.txt", bytes_of("hello")}, {"dir/", {}}, {"dir/b.bin", big}}, deflate);
        ZipReader r(archive);
        REQUIRE(r.entries().size() == 3);
        CHECK(r.entries()[0].name == "a.txt");
        CHECK(r.entries()[1].is_directory);
        CHECK(r.extract(r.entries()[0]) == bytes_of("hello"));
        CHECK(r.extract(r.entries()[2]) == big);
        CHECK(r.entries()[2].method == (deflate ? 8 : 0));
    }
}

TEST_CASE("zip: damage is detected") {
    CHECK_THROWS_AS(ZipReader(bytes_of("not a zip at all, just text")), CorruptArchive);
    auto archive = zip_of({{"a.txt", bytes_of("hello world hello world")}}, false);
    auto flipped = archive;
    flipped[30 + 5 + 2] ^= 0xFF;  // a payload byte
    ZipReader r(flipped);
    CHECK_THROWS_AS(r.extract(r.entries()[0]), CorruptArchive);
    auto truncated = archive;
    truncated.resize(archive.size() - 10);
    CHECK_THROWS_AS(ZipReader{truncated}, CorruptArchive);
}

TEST_CASE("upload: 17 images accepted") {
    const auto archive = zip_of(pngs(17));
    const auto e = validate_upload(archive);
    CHECK(e.size() == 17);
    CHECK(e[3].name == "coin3.png");
    CHECK(e[3].bytes == tiny_png(3));
}

TEST_CASE("upload: JPEG and TIFF members decode") {
    const auto img = testing::make_die(2, 64, 50);
    const auto e = validate_upload(zip_of({{"a.jpg", imaging::encode_jpeg(img)}, {"b.tif", imaging::encode_tiff(img)}}));
    CHECK(e.size() == 2);
}

TEST_CASE("upload: 501 files is too many, 500 is fine") {
    CHECK(rejection(zip_of(pngs(501), false)) == UploadRule::TooManyFiles);
    CHECK(validate_upload(zip_of(pngs(500), false)).size() == 500);
}

TEST_CASE("upload: a text file is rejected by name") {
    auto members = pngs(3);
    members.emplace_back("notes.txt", bytes_of("die study notes"));
    try {
        validate_upload(zip_of(members));
        FAIL("accepted");
    } catch (const UploadRejected& e) {
        CHECK(e.rule() == UploadRule::NonImageEntry);
        CHECK(e.entry() == "notes.txt");
        CHECK(std::string(e.what()).find("notes.txt") != std::string::npos);
    }
}

TEST_CASE("upload: size limit counts uncompressed bytes") {
    const auto archive = zip_of({{"a.png", tiny_png(1)}, {"b.png", tiny_png(2)}});
    const std::uint64_t total = tiny_png(1).size() + tiny_png(2).size();
    UploadLimits limits;
    limits.max_total_bytes = total;
    CHECK(validate_upload(archive, limits).size() == 2);
    limits.max_total_bytes = total - 1;
    CHECK(rejection(archive, limits) == UploadRule::ArchiveTooLarge);
    CHECK(UploadLimits{}.max_total_bytes == 500'000'000ULL);
    CHECK(UploadLimits{}.max_files == 500);
}

TEST_CASE("upload: corrupt archives") {
    CHECK(rejection(bytes_of("PK but not really")) == UploadRule::CorruptArchive);
    auto archive = zip_of({{"a.png", tiny_png(1)}}, false);
    archive[40] ^= 0x55;
    CHECK(rejection(archive) == UploadRule::CorruptArchive);
}

TEST_CASE("upload: folders and resource forks are skipped") {
    const auto e = validate_upload(zip_of({{"R_1205/", {}},
                                           {"R_1205/x.png", tiny_png(1)},
                                           {"R_1205/y.png", tiny_png(2)},
                                           {"__MACOSX/R_1205/._x.png", bytes_of("junk")}}));
    REQUIRE(e.size() == 2);
    CHECK(e[0].name == "x.png");
    CHECK(e[1].name == "y.png");
}

TEST_CASE("rule codes") {
    CHECK(rule_code(UploadRule::ArchiveTooLarge) == "ARCHIVE_TOO_LARGE");
    CHECK(rule_code(UploadRule::TooManyFiles) == "TOO_MANY_FILES");
    CHECK(rule_code(UploadRule::NonImageEntry) == "NON_IMAGE_ENTRY");
    CHECK(rule_code(UploadRule::CorruptArchive) == "CORRUPT_ARCHIVE");
}

TEST_CASE("notes: labels and keys") {
    const std::vector<std::string> labels{"Not evaluated", "Linked", "Probably linked", "Don't know",
                                          "Probably not linked", "Not linked"};
    for (std::size_t i = 0; i < kAllNotes.size(); ++i) {
        CHECK(note_label(kAllNotes[i]) == labels[i]);
        CHECK(parse_note(labels[i]) == kAllNotes[i]);
        CHECK(parse_note(note_key(kAllNotes[i])) == kAllNotes[i]);
    }
    CHECK_FALSE(parse_note("linked").has_value());
    CHECK_FALSE(parse_note("").has_value());
}

TEST_CASE("csv: file name and header") {
    CHECK(export_filename("R_1205") == "notations_R_1205.csv");
    CHECK(write_csv({}) == "name1,name2,Distance,note,comment\n");
    CHECK(format_distance(0.12345651) == "0.123457");
    CHECK(format_distance(1.0) == "1.000000");
    CHECK(format_distance(0.0) == "0.000000");
}

TEST_CASE("csv: quoting survives an independent parser") {
    const std::vector<CsvRow> rows{{"a.jpg", "b.jpg", 0.25, Note::Linked, "a,b \"test\""},
                                   {"a.jpg", "c,d.jpg", 0.5, Note::DontKnow, "line one\nline two"},
                                   {"b.jpg", "c,d.jpg", 0.75, Note::NotEvaluated, ""}};
    const auto text = write_csv(rows);
    CHECK(text.find("\"a,b \"\"test\"\"\"") != std::string::npos);
    CHECK(text.find("\"Don't know\"") == std::string::npos);
    const auto recs = rfc4180(text);
    REQUIRE(recs.size() == 4);
    CHECK(recs[1][4] == "a,b \"test\"");
    CHECK(recs[2][1] == "c,d.jpg");
    CHECK(recs[2][3] == "Don't know");
    CHECK(recs[2][4] == "line one\nline two");
    const auto back = parse_csv(text);
    REQUIRE(back.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(back[i].name1 == rows[i].name1);
        CHECK(back[i].name2 == rows[i].name2);
        CHECK(back[i].distance == rows[i].distance);
        CHECK(back[i].note == rows[i].note);
        CHECK(back[i].comment == rows[i].comment);
    }
    CHECK(write_csv(back) == text);
}

TEST_CASE("csv: every note label round-trips") {
    std::vector<CsvRow> rows;
    for (Note n : kAllNotes) rows.push_back({"x" + std::string(note_key(n)), "y", 0.5, n, ""});
    const auto back = parse_csv(write_csv(rows));
    REQUIRE(back.size() == kAllNotes.size());
    for (std::size_t i = 0; i < back.size(); ++i) CHECK(back[i].note == kAllNotes[i]);
}

TEST_CASE("csv: CRLF and BOM are accepted") {
    const auto rows = parse_csv("\xEF\xBB\xBFname1,name2,Distance,note,comment\r\na,b,0.100000,Linked,ok\r\n");
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].comment == "ok");
    CHECK(rows[0].line == 2);
}

TEST_CASE("csv: malformed input reports the line") {
    auto line_of = [](const std::string& text) -> std::size_t {
        try {
            parse_csv(text);
        } catch (const CsvError& e) {
            return e.line();
        }
        return 0;
    };
    const std::string h = "name1,name2,Distance,note,comment\n";
    CHECK(line_of("") == 1);
    CHECK(line_of("a,b,c\n") == 1);
    CHECK(line_of(h + "a,b,0.1,Linked,\na,c,zero,Linked,\n") == 3);
    CHECK(line_of(h + "a,b,0.1,Linked,\na,c,0.2,Maybe,\n") == 3);
    CHECK(line_of(h + "a,b,0.1,Linked\n") == 2);
    CHECK(line_of(h + "a,b,1.5,Linked,\n") == 2);
    CHECK(line_of(h + "a,b,0.1,Linked,\"x\ny\"\na,c,0.1,Linked,\"open\n") == 4);
    CHECK(line_of(h + "a,b,0.1,Linked,x\"y\n") == 2);
    CHECK(line_of(h + "a,b,0.1,Linked,\n\n") == 3);
    CHECK(line_of(h + ",b,0.1,Linked,\n") == 2);
}

TEST_CASE("csv: matrix rebuild") {
    const std::string h = "name1,name2,Distance,note,comment\n";
    const auto m = matrix_from_rows(parse_csv(h + "b,a,0.2,Linked,\na,c,0.3,Linked,\nb,c,0.4,Linked,\n"));
    CHECK(m.coin_names == std::vector<std::string>{"a", "b", "c"});
    CHECK(m.scores[0].name1 == "a");
    CHECK(m.scores[0].name2 == "b");
    CHECK_NOTHROW(scoring::validate_matrix(m));
    CHECK_THROWS_AS(matrix_from_rows(parse_csv(h + "a,b,0.2,Linked,\na,c,0.3,Linked,\n")), CsvError);
    CHECK_THROWS_AS(matrix_from_rows(parse_csv(h + "a,a,0.2,Linked,\n")), CsvError);
    CHECK_THROWS_AS(matrix_from_rows(parse_csv(h + "a,b,0.2,Linked,\nb,a,0.2,Linked,\n")), CsvError);
    CHECK(matrix_from_rows({}).coin_names.empty());
}

TEST_CASE("datastore: lifecycle of a 17-coin dataset") {
    Datastore db(":memory:");
    const auto e = entries(17);
    auto r = db.create_dataset("R_1205", DatasetKind::SingleType, e);
    CHECK(r.state == DatasetState::Computing);
    CHECK(r.coin_names.size() == 17);
    CHECK(r.id.size() == 32);
    CHECK_THROWS_AS(db.create_dataset("R_1205", DatasetKind::SingleType, e), DuplicateName);
    CHECK_THROWS_AS(db.summarize(r.id), DatasetNotComputed);
    CHECK_THROWS_AS(db.ranked_pairs(r.id), DatasetNotComputed);

    r = db.complete_dataset(r.id, fake_matrix(e));
    CHECK(r.state == DatasetState::Computed);
    CHECK_THROWS_AS(db.complete_dataset(r.id, fake_matrix(e)), InvalidState);
    CHECK_THROWS_AS(db.fail_dataset(r.id, "late"), InvalidState);

    const auto s = db.summarize(r.id);
    CHECK(s.coins == 17);
    CHECK(s.potential_links == 136);
    CHECK(s.category_counts.at(Note::NotEvaluated) == 136);
    CHECK(s.category_counts.size() == 6);

    const auto pairs = db.ranked_pairs(r.id);
    REQUIRE(pairs.size() == 136);
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        CHECK(pairs[k].rank == k + 1);
        CHECK(pairs[k].score.name1 < pairs[k].score.name2);
        if (k) CHECK(pairs[k - 1].score.distance <= pairs[k].score.distance);
        CHECK(pairs[k].score.transform.has_value() == pairs[k].score.alignable);
    }
    const auto m = db.matrix(r.id);
    CHECK_NOTHROW(scoring::validate_matrix(m));
}

TEST_CASE("datastore: evaluations keep the summary conserved") {
    Datastore db(":memory:");
    const auto e = entries(5);
    const auto id = db.create_dataset("T", DatasetKind::SingleType, e).id;
    db.complete_dataset(id, fake_matrix(e));

    const auto ev = db.set_evaluation(id, "c11.png", "c10.png", Note::Linked, "same die");
    CHECK(ev.name1 == "c10.png");
    CHECK(ev.name2 == "c11.png");
    auto s = db.summarize(id);
    CHECK(s.category_counts.at(Note::Linked) == 1);
    CHECK(s.category_counts.at(Note::NotEvaluated) == 9);

    db.set_evaluation(id, "c10.png", "c11.png", Note::ProbablyLinked);
    s = db.summarize(id);
    CHECK(s.category_counts.at(Note::Linked) == 0);
    CHECK(s.category_counts.at(Note::ProbablyLinked) == 1);

    const auto again = db.set_evaluation(id, "c10.png", "c11.png", Note::ProbablyLinked);
    CHECK(again.comment == "same die");
    CHECK(db.summarize(id).category_counts == s.category_counts);

    db.set_evaluation(id, "c12.png", "c13.png", Note::NotLinked, std::string(500, 'z'));
    std::size_t total = 0;
    for (const auto& [note, n] : db.summarize(id).category_counts) total += n;
    CHECK(total == 10);
    for (const auto& p : db.ranked_pairs(id))
        if (p.score.name1 == "c12.png" && p.score.name2 == "c13.png") CHECK(p.comment == std::string(500, 'z'));

    CHECK_THROWS_AS(db.set_evaluation(id, "c10.png", "nope.png", Note::Linked), UnknownPair);
    CHECK_THROWS_AS(db.set_evaluation("missing", "a", "b", Note::Linked), UnknownDataset);
}

TEST_CASE("datastore: small datasets and bad uploads") {
    Datastore db(":memory:");
    const auto e = entries(2);
    const auto id = db.create_dataset("pair", DatasetKind::SingleType, e).id;
    db.complete_dataset(id, fake_matrix(e));
    CHECK(db.summarize(id).potential_links == 1);
    std::vector<UploadEntry> dup{{"a.jpg", tiny_png(1)}, {"a.jpg", tiny_png(2)}};
    CHECK_THROWS_AS(db.create_dataset("dup", DatasetKind::SingleType, dup), DuplicateFileNames);
    CHECK_FALSE(db.find("dup").has_value());
}

TEST_CASE("datastore: failure path") {
    Datastore db(":memory:");
    const auto id = db.create_dataset("broken", DatasetKind::Treasure, entries(3)).id;
    const auto r = db.fail_dataset(id, "scoring exploded");
    CHECK(r.state == DatasetState::Failed);
    CHECK(r.error == "scoring exploded");
    CHECK(r.kind == DatasetKind::Treasure);
    CHECK_THROWS_AS(db.complete_dataset(id, fake_matrix(entries(3))), InvalidState);
}

TEST_CASE("datastore: matrix must cover the uploaded images") {
    Datastore db(":memory:");
    const auto id = db.create_dataset("m", DatasetKind::SingleType, entries(3)).id;
    CHECK_THROWS_AS(db.complete_dataset(id, fake_matrix(entries(4))), std::invalid_argument);
    auto broken = fake_matrix(entries(3));
    broken.scores.pop_back();
    CHECK_THROWS_AS(db.complete_dataset(id, broken), std::invalid_argument);
    CHECK(db.get(id).state == DatasetState::Computing);
}

TEST_CASE("datastore: search") {
    Datastore db(":memory:");
    std::vector<UploadEntry> e{{"32307-R.jpg", tiny_png(1)}, {"38491-R.jpg", tiny_png(2)}, {"40000-R.JPG", tiny_png(3)},
                               {"12-r.jpg", tiny_png(4)}};
    const auto id = db.create_dataset("S", DatasetKind::SingleType, e).id;
    db.complete_dataset(id, fake_matrix(e));
    CHECK(db.search_pairs(id, "").size() == 6);
    const auto hits = db.search_pairs(id, "32307");
    CHECK(hits.size() == 3);
    for (const auto& p : hits)
        CHECK((p.score.name1 == "32307-R.jpg" || p.score.name2 == "32307-R.jpg"));
    for (std::size_t k = 1; k < hits.size(); ++k) CHECK(hits[k - 1].rank < hits[k].rank);
    CHECK(db.search_pairs(id, "zzz").empty());
    CHECK(db.search_pairs(id, "r.jpg").size() == 6);
    CHECK(db.search_pairs(id, "40000-r").size() == 3);
}

TEST_CASE("datastore: export, import, export is byte-identical") {
    Datastore db(":memory:");
    const auto e = entries(6);
    const auto id = db.create_dataset("R_1205", DatasetKind::SingleType, e).id;
    db.complete_dataset(id, fake_matrix(e, 3));
    std::size_t k = 0;
    for (const auto& p : db.ranked_pairs(id)) {
        const Note n = kAllNotes[k % kAllNotes.size()];
        db.set_evaluation(id, p.score.name1, p.score.name2, n, k % 3 ? "" : "note " + std::to_string(k) + ", \"q\"");
        ++k;
    }
    const auto first = db.export_csv(id);
    CHECK(first.filename == "notations_R_1205.csv");
    CHECK(first.content.rfind("name1,name2,Distance,note,comment\n", 0) == 0);
    CHECK(rfc4180(first.content).size() == 16);

    // Import into a fresh copy with the same scores.
    Datastore other(":memory:");
    const auto id2 = other.create_dataset("R_1205", DatasetKind::SingleType, e).id;
    other.complete_dataset(id2, fake_matrix(e, 3));
    CHECK(other.export_csv(id2).content != first.content);
    other.import_csv(id2, first.content);
    CHECK(other.export_csv(id2).content == first.content);
    CHECK(other.summarize(id2).category_counts == db.summarize(id).category_counts);

    CHECK_THROWS_AS(other.import_csv(id2, "name1,name2,Distance,note,comment\nx,y,0.1,Linked,\n"), UnknownPair);
    CHECK(other.export_csv(id2).content == first.content);
}

TEST_CASE("datastore: list, images and persistence") {
    TempDir dir;
    const auto path = dir.path / "db.sqlite3";
    std::string done_id, running_id;
    {
        Datastore db(path);
        const auto e = entries(3);
        done_id = db.create_dataset("b-type", DatasetKind::SingleType, e).id;
        db.complete_dataset(done_id, fake_matrix(e));
        running_id = db.create_dataset("a-hoard", DatasetKind::Treasure, e).id;
        const auto all = db.list();
        REQUIRE(all.size() == 2);
        CHECK(all[0].name == "a-hoard");
        CHECK(all[1].name == "b-type");
        CHECK(db.image(done_id, "c11.png") == tiny_png(1));
        CHECK_FALSE(db.image(done_id, "zzz.png").has_value());
        CHECK(db.images(done_id).size() == 3);
        db.set_evaluation(done_id, "c10.png", "c12.png", Note::DontKnow, "kept");
    }
    Datastore db(path);
    CHECK(db.get(done_id).state == DatasetState::Computed);
    CHECK(db.summarize(done_id).category_counts.at(Note::DontKnow) == 1);
    const auto interrupted = db.get(running_id);
    CHECK(interrupted.state == DatasetState::Failed);
    CHECK_FALSE(interrupted.error.empty());
}

TEST_CASE("dataset kinds and states") {
    CHECK(kind_name(DatasetKind::SingleType) == "single_type");
    CHECK(parse_kind("treasure") == DatasetKind::Treasure);
    CHECK_FALSE(parse_kind("hoard").has_value());
    CHECK(state_name(DatasetState::Computing) == "computing");
    CHECK(state_name(DatasetState::Computed) == "computed");
    CHECK(state_name(DatasetState::Failed) == "failed");
}
