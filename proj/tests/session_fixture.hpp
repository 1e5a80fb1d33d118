#pragma once

// A small film graph plus a scripted model covering a 20-question session
// with four question patterns, one question about an entity outside the
// graph and one whose predicate is missing from the entity's schema.

#include <string>
#include <vector>

namespace testing {

struct Film {
    std::string title, director, year, star, nomination;
};

inline const std::vector<Film>& session_films() {
    static const std::vector<Film> films{
        {"Inception", "Christopher Nolan", "2010", "Leonardo DiCaprio", ""},
        {"Interstellar", "Christopher Nolan", "2014", "Matthew McConaughey", ""},
        {"Dunkirk", "Christopher Nolan", "2017", "Fionn Whitehead", "Academy Award for Best Picture (2018)"},
        {"Memento", "Christopher Nolan", "2000", "Guy Pearce", "Academy Award for Best Original Screenplay (2002)"},
        {"Arrival", "Denis Villeneuve", "2016", "Amy Adams", "Academy Award for Best Picture (2017)"},
        {"Sicario", "Denis Villeneuve", "2015", "Emily Blunt", ""},
        {"Heat", "Michael Mann", "1995", "Al Pacino", ""},
        {"Alien", "Ridley Scott", "1979", "Sigourney Weaver", "Academy Award for Best Art Direction (1980)"},
    };
    return films;
}

struct SessionQuestion {
    std::string text;
    std::string pattern;  // director, release, cast, award
    bool in_graph = true;
};

struct SessionFixture {
    std::string tsv;
    std::string script;
    std::vector<SessionQuestion> questions;
};

inline std::string session_question(const std::string& pattern, const std::string& film) {
    if (pattern == "director") return "Who directed " + film + "?";
    if (pattern == "release") return "When was " + film + " released?";
    if (pattern == "cast") return "Who starred in " + film + "?";
    return "Which award was " + film + " nominated for?";
}

inline SessionFixture session_fixture() {
    SessionFixture f;
    struct Pattern {
        std::string name, constraint, predicate;
    };
    const std::vector<Pattern> patterns{{"director", "directed by", "directedBy"},
                                        {"release", "release date", "releaseDate"},
                                        {"cast", "starring", "starring"},
                                        {"award", "nominated for an award", "nominated"}};

    f.tsv = "# film graph for the session test\n";
    for (const auto& m : session_films()) {
        f.tsv += m.title + "\tdirectedBy\t" + m.director + "\n";
        f.tsv += m.title + "\treleaseDate\t\"" + m.year + "\"\n";
        f.tsv += m.title + "\tstarring\t" + m.star + "\n";
        f.tsv += m.director + "\tdirected\t" + m.title + "\n";
        if (!m.nomination.empty()) f.tsv += m.title + "\tnominated\t\"" + m.nomination + "\"\n";
    }

    auto& s = f.script;
    for (const auto& m : session_films()) {
        s += "[AUTOGEN_QUESTIONS] " + m.title + " | directedBy\n";
        s += "QUESTION: Who is the director of " + m.title + "?\n";
        s += "TRIPLE: " + m.title + " | directedBy | " + m.director + "\n";
        s += "ANSWER: " + m.director + "\n";
        s += "QUESTION: In which year did " + m.title + " come out?\n";
        s += "TRIPLE: " + m.title + " | releaseDate | \"" + m.year + "\"\n";
        s += "ANSWER: " + m.year + "\n";
    }
    s += "[AUTOGEN_FILTER] CANDIDATE 1\nVERDICT: 1 KEEP\nVERDICT: 2 KEEP\n";

    std::vector<std::string> films{"Batman Begins"};
    for (const auto& m : session_films()) films.push_back(m.title);
    for (const auto& title : films) {
        for (const auto& p : patterns) {
            s += "[ISR_EXTRACT] \"" + session_question(p.name, title) + "\"\n";
            s += "ENTITY: " + title + "\nCONSTRAINT: " + p.constraint + "\nDOMAIN: movies\n";
            s += "[QUERY_COMPILE] Topic entity: " + title + "\\nConstraints:\\n- " + p.constraint + "\n";
            s += "OP: POINT " + title + " " + p.predicate + "\n";
        }
    }
    s += "[DISPATCH_JUDGE] Question:\nSTATUS: COMPLETE\n";
    s += "[SUMMARIZE] Question:\nAnswered from the retrieved facts.\n";
    s += "[DIRECT_ANSWER] Question:\nI don't know.\n";

    const std::vector<std::pair<std::string, std::string>> order{
        {"director", "Inception"}, {"release", "Interstellar"}, {"director", "Arrival"},
        {"award", "Dunkirk"},      {"cast", "Heat"},            {"director", "Heat"},
        {"release", "Alien"},      {"director", "Batman Begins"}, {"award", "Arrival"},
        {"cast", "Memento"},       {"director", "Sicario"},     {"release", "Memento"},
        {"cast", "Alien"},         {"award", "Heat"},           {"director", "Alien"},
        {"release", "Dunkirk"},    {"cast", "Sicario"},         {"director", "Memento"},
        {"release", "Inception"},  {"director", "Interstellar"},
    };
    for (const auto& [pattern, film] : order) {
        f.questions.push_back({session_question(pattern, film), pattern, film != "Batman Begins"});
    }
    return f;
}

}  // namespace testing
