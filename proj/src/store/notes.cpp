#include "dielink/store/notes.hpp"

namespace dielink::store {

std::string_view note_label(Note note) noexcept {
    switch (note) {
        case Note::NotEvaluated: return "Not evaluated";
        case Note::Linked: return "Linked";
        case Note::ProbablyLinked: return "Probably linked";
        case Note::DontKnow: return "Don't know";
        case Note::ProbablyNotLinked: return "Probably not linked";
        case Note::NotLinked: return "Not linked";
    }
    return "";
}

std::string_view note_key(Note note) noexcept {
    switch (note) {
        case Note::NotEvaluated: return "NotEvaluated";
        case Note::Linked: return "Linked";
        case Note::ProbablyLinked: return "ProbablyLinked";
        case Note::DontKnow: return "DontKnow";
        case Note::ProbablyNotLinked: return "ProbablyNotLinked";
        case Note::NotLinked: return "NotLinked";
    }
    return "";
}

std::optional<Note> parse_note(std::string_view text) noexcept {
    for (Note n : kAllNotes)
        if (text == note_label(n) || text == note_key(n)) return n;
    return std::nullopt;
}

}  // namespace dielink::store
