#pragma once

#include <array>
#include <optional>
#include <string_view>

namespace dielink::store {

enum class Note { NotEvaluated, Linked, ProbablyLinked, DontKnow, ProbablyNotLinked, NotLinked };

inline constexpr std::array<Note, 6> kAllNotes{Note::NotEvaluated,   Note::Linked,
                                               Note::ProbablyLinked, Note::DontKnow,
                                               Note::ProbablyNotLinked, Note::NotLinked};

/// CSV and UI label: "Not evaluated", "Probably linked", ...
std::string_view note_label(Note note) noexcept;
/// Identifier form: "NotEvaluated", "ProbablyLinked", ...
std::string_view note_key(Note note) noexcept;
/// Accepts either form, exact case.
std::optional<Note> parse_note(std::string_view text) noexcept;

}  // namespace dielink::store
