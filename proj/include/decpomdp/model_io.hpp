#pragma once

// Reader and writer for the multi-agent extension of the classic POMDP text
// format (the ".dpomdp" layout):
//
//   agents: 2                    (count or names)
//   discount: 1
//   values: reward               (or cost)
//   states: s0 s1 ...            (count or names)
//   start:                       (row of |S| numbers, "uniform", or a state;
//   0.5 0.5                       also "start include: ..." / "start exclude: ...")
//   actions:                     (one line per agent, count or names)
//   observations:                (one line per agent, count or names)
//   T: <a> : <s> : <s'> : p      (plus row / matrix / uniform / identity forms)
//   O: <a> : <s'> : <o> : p      (plus row / matrix / uniform forms)
//   R: <a> : <s> : <s'> : <o> : r
//
// A joint action or observation is either one token per agent or a single
// flat index; "*" matches everything. Identifiers and integer indices are
// interchangeable. Later entries override earlier ones. Rewards given per
// (s', o) are reduced to R(s,a) by expectation under T and O.
//
// Extension: "O: <a> : <s> : <s'> : <o> : p" sets an observation probability
// that depends on the start state; the writer only emits it when needed.

#include "decpomdp/error.hpp"
#include "decpomdp/model.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace decpomdp {

namespace detail {

struct Token {
    std::string text;
    int line;
    int column;
};

struct Statement {
    std::string keyword; // agents, discount, ..., T, O, R, start, start include, start exclude
    Token where;
    std::vector<std::vector<Token>> head_fields; // keyword line, split on ':'
    std::vector<std::vector<Token>> body_lines;  // following lines
};

inline std::vector<std::vector<Token>> tokenize_lines(std::string_view text) {
    std::vector<std::vector<Token>> lines;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        std::vector<Token> toks;
        std::size_t k = 0;
        while (k < line.size()) {
            const char c = line[k];
            if (c == ' ' || c == '\t' || c == '\r') {
                ++k;
                continue;
            }
            if (c == ':') {
                toks.push_back({":", line_no, static_cast<int>(k) + 1});
                ++k;
                continue;
            }
            std::size_t j = k;
            while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r' &&
                   line[j] != ':')
                ++j;
            toks.push_back({std::string(line.substr(k, j - k)), line_no, static_cast<int>(k) + 1});
            k = j;
        }
        lines.push_back(std::move(toks));
        if (end == text.size()) break;
        pos = end + 1;
    }
    return lines;
}

inline bool is_keyword(const std::vector<Token>& line, std::string& keyword, std::size_t& consumed) {
    static const char* simple[] = {"agents", "discount", "values", "states", "start",
                                   "actions", "observations", "T", "O", "R"};
    if (line.size() >= 2 && line[1].text == ":") {
        for (const char* k : simple)
            if (line[0].text == k) {
                keyword = k;
                consumed = 2;
                return true;
            }
    }
    if (line.size() >= 3 && line[0].text == "start" &&
        (line[1].text == "include" || line[1].text == "exclude") && line[2].text == ":") {
        keyword = "start " + line[1].text;
        consumed = 3;
        return true;
    }
    return false;
}

inline std::vector<Statement> split_statements(std::string_view text) {
    std::vector<Statement> out;
    for (auto& line : tokenize_lines(text)) {
        if (line.empty()) continue;
        std::string keyword;
        std::size_t consumed = 0;
        if (is_keyword(line, keyword, consumed)) {
            Statement st;
            st.keyword = keyword;
            st.where = line[0];
            st.head_fields.emplace_back();
            for (std::size_t k = consumed; k < line.size(); ++k) {
                if (line[k].text == ":")
                    st.head_fields.emplace_back();
                else
                    st.head_fields.back().push_back(line[k]);
            }
            out.push_back(std::move(st));
        } else {
            if (out.empty())
                throw SyntaxError("expected a section keyword, found '" + line[0].text + "'",
                                  line[0].line, line[0].column);
            for (const auto& t : line)
                if (t.text == ":") throw SyntaxError("unexpected ':'", t.line, t.column);
            out.back().body_lines.push_back(std::move(line));
        }
    }
    return out;
}

inline std::optional<double> to_number(const std::string& s) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (first != last && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) return std::nullopt;
    return v;
}

inline std::optional<int> to_int(const std::string& s) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || v < 0) return std::nullopt;
    return v;
}

inline double number(const Token& t) {
    auto v = to_number(t.text);
    if (!v) throw SyntaxError("expected a number, found '" + t.text + "'", t.line, t.column);
    return *v;
}

inline std::string where(const Token& t) {
    return "line " + std::to_string(t.line) + ", column " + std::to_string(t.column) + ": ";
}

/// Resolve a name or integer index against a list of names; "*" yields all.
inline std::vector<int> resolve(const Token& t, const std::vector<std::string>& names,
                                const char* what) {
    std::vector<int> out;
    if (t.text == "*") {
        for (int k = 0; k < static_cast<int>(names.size()); ++k) out.push_back(k);
        return out;
    }
    for (int k = 0; k < static_cast<int>(names.size()); ++k)
        if (names[k] == t.text) return {k};
    if (auto idx = to_int(t.text); idx && *idx < static_cast<int>(names.size())) return {*idx};
    throw SemanticError(where(t) + "unknown " + what + " '" + t.text + "'");
}

inline std::vector<Token> flatten(const std::vector<std::vector<Token>>& lines) {
    std::vector<Token> out;
    for (const auto& l : lines) out.insert(out.end(), l.begin(), l.end());
    return out;
}

class Parser {
public:
    explicit Parser(std::string_view text) : statements_(split_statements(text)) {}

    DecPomdp parse() {
        for (const auto& st : statements_) declare(st);
        if (agents_.empty()) throw SemanticError("missing 'agents:' section");
        if (states_.empty()) throw SemanticError("missing 'states:' section");
        if (actions_.empty()) throw SemanticError("missing 'actions:' section");
        if (observations_.empty()) throw SemanticError("missing 'observations:' section");
        builder_.emplace(agents_, states_, actions_, observations_);
        builder_->set_discount(discount_);
        if (discount_ != 1.0)
            std::clog << "warning: discount " << discount_
                      << " ignored; planning is undiscounted over a finite horizon\n";
        r2_.assign(static_cast<std::size_t>(builder_->num_states()) * builder_->num_joint_actions(), 0.0);
        for (const auto& st : statements_) define(st);
        finish_rewards();
        return builder_->build();
    }

private:
    void declare(const Statement& st) {
        const auto head = flatten(st.head_fields);
        if (st.keyword == "agents") {
            const auto toks = with_body(st);
            if (toks.empty()) throw SyntaxError("'agents:' needs a value", st.where.line, st.where.column);
            agents_ = names_from(toks, "agent");
        } else if (st.keyword == "discount") {
            const auto toks = with_body(st);
            if (toks.size() != 1) throw SyntaxError("'discount:' needs one number", st.where.line, st.where.column);
            discount_ = number(toks[0]);
        } else if (st.keyword == "values") {
            const auto toks = with_body(st);
            if (toks.size() != 1 || (toks[0].text != "reward" && toks[0].text != "cost"))
                throw SyntaxError("'values:' must be reward or cost", st.where.line, st.where.column);
            cost_ = toks[0].text == "cost";
        } else if (st.keyword == "states") {
            const auto toks = with_body(st);
            if (toks.empty()) throw SyntaxError("'states:' needs a value", st.where.line, st.where.column);
            states_ = names_from(toks, "s");
        } else if (st.keyword == "actions" || st.keyword == "observations") {
            if (agents_.empty())
                throw SemanticError(where(st.where) + "'" + st.keyword + ":' before 'agents:'");
            std::vector<std::vector<Token>> lines;
            if (!head.empty()) lines.push_back(head);
            for (const auto& l : st.body_lines) lines.push_back(l);
            if (lines.size() != agents_.size())
                throw SemanticError(where(st.where) + "agent count mismatch: " +
                                    std::to_string(agents_.size()) + " agents but " +
                                    std::to_string(lines.size()) + " " + st.keyword + " lines");
            auto& target = st.keyword == "actions" ? actions_ : observations_;
            target.clear();
            for (const auto& l : lines) target.push_back(names_from(l, ""));
        }
    }

    void define(const Statement& st) {
        if (st.keyword == "start" || st.keyword == "start include" || st.keyword == "start exclude")
            start(st);
        else if (st.keyword == "T")
            transition(st);
        else if (st.keyword == "O")
            observation(st);
        else if (st.keyword == "R")
            reward(st);
    }

    static std::vector<Token> with_body(const Statement& st) {
        auto toks = flatten(st.head_fields);
        if (st.head_fields.size() > 1)
            throw SyntaxError("unexpected ':'", st.where.line, st.where.column);
        for (const auto& l : st.body_lines) toks.insert(toks.end(), l.begin(), l.end());
        return toks;
    }

    static std::vector<std::string> names_from(const std::vector<Token>& toks, const std::string& prefix) {
        std::vector<std::string> out;
        if (toks.size() == 1) {
            if (auto n = to_int(toks[0].text)) {
                if (*n < 1) throw SemanticError(where(toks[0]) + "count must be positive");
                for (int k = 0; k < *n; ++k) out.push_back(prefix.empty() ? std::to_string(k) : prefix + std::to_string(k));
                return out;
            }
        }
        for (const auto& t : toks) out.push_back(t.text);
        for (std::size_t a = 0; a < out.size(); ++a)
            for (std::size_t b = a + 1; b < out.size(); ++b)
                if (out[a] == out[b]) throw SemanticError(where(toks[b]) + "duplicate name '" + out[b] + "'");
        return out;
    }

    std::vector<int> joint_actions(const std::vector<Token>& toks) const {
        return joint(toks, actions_, builder_->joint_actions(), "action");
    }
    std::vector<int> joint_observations(const std::vector<Token>& toks) const {
        return joint(toks, observations_, builder_->joint_observations(), "observation");
    }

    static std::vector<int> joint(const std::vector<Token>& toks,
                                  const std::vector<std::vector<std::string>>& names,
                                  const MixedRadix& radix, const char* what) {
        const int n = radix.digits();
        if (toks.empty()) throw SemanticError(std::string("missing joint ") + what);
        if (toks.size() == 1 && n > 1) {
            std::vector<int> out;
            if (toks[0].text == "*") {
                for (int k = 0; k < radix.size(); ++k) out.push_back(k);
                return out;
            }
            auto idx = to_int(toks[0].text);
            if (!idx || *idx >= radix.size())
                throw SemanticError(where(toks[0]) + "unknown joint " + what + " '" + toks[0].text + "'");
            return {*idx};
        }
        if (static_cast<int>(toks.size()) != n)
            throw SemanticError(where(toks[0]) + "joint " + what + " needs " + std::to_string(n) +
                                " components, found " + std::to_string(toks.size()));
        std::vector<std::vector<int>> choices;
        for (int i = 0; i < n; ++i) choices.push_back(resolve(toks[i], names[i], what));
        std::vector<int> out;
        std::vector<int> comp(n, 0);
        std::vector<std::size_t> pos(n, 0);
        while (true) {
            for (int i = 0; i < n; ++i) comp[i] = choices[i][pos[i]];
            out.push_back(radix.encode(comp));
            int k = n - 1;
            while (k >= 0 && ++pos[k] == choices[k].size()) pos[k--] = 0;
            if (k < 0) break;
        }
        return out;
    }

    std::vector<int> states(const Token& t) const { return resolve(t, states_, "state"); }

    static const Token& single(const std::vector<Token>& field, const Token& fallback) {
        if (field.size() != 1) {
            const Token& t = field.empty() ? fallback : field[1];
            throw SyntaxError("expected a single identifier", t.line, t.column);
        }
        return field[0];
    }

    static void expect_count(const std::vector<Token>& data, std::size_t n, const Token& at) {
        if (data.size() != n)
            throw SyntaxError("expected " + std::to_string(n) + " numbers, found " +
                                  std::to_string(data.size()),
                              data.empty() ? at.line : data[0].line,
                              data.empty() ? at.column : data[0].column);
    }

    void start(const Statement& st) {
        const int ns = builder_->num_states();
        const auto toks = with_body(st);
        Belief b(ns, 0.0);
        if (st.keyword == "start") {
            if (toks.size() == 1 && toks[0].text == "uniform") {
                b.assign(ns, 1.0 / ns);
            } else if (toks.size() == 1 && ns > 1) {
                b[states(toks[0]).at(0)] = 1.0;
            } else {
                expect_count(toks, ns, st.where);
                for (int s = 0; s < ns; ++s) b[s] = number(toks[s]);
            }
        } else {
            std::vector<bool> listed(ns, false);
            for (const auto& t : toks)
                for (int s : states(t)) listed[s] = true;
            const bool include = st.keyword == "start include";
            int count = 0;
            for (int s = 0; s < ns; ++s) count += listed[s] == include;
            if (count == 0) throw SemanticError(where(st.where) + "start distribution is empty");
            for (int s = 0; s < ns; ++s) b[s] = listed[s] == include ? 1.0 / count : 0.0;
        }
        builder_->set_initial_belief(std::move(b));
    }

    void transition(const Statement& st) {
        const int ns = builder_->num_states();
        const auto& f = st.head_fields;
        auto body = flatten(st.body_lines);
        if (f.size() == 4 || f.size() == 3) {
            auto acts = joint_actions(f[0]);
            auto from = states(single(f[1], st.where));
            std::vector<Token> last = f[2];
            Token ptok;
            if (f.size() == 4) {
                std::vector<Token> value = f[3];
                value.insert(value.end(), body.begin(), body.end());
                ptok = single(value, st.where);
            } else if (last.size() == 2 && body.empty()) {
                ptok = last[1];
                last.pop_back();
            } else if (last.size() == 1 && body.size() == 1) {
                ptok = body[0];
            } else {
                throw SyntaxError("malformed T entry", st.where.line, st.where.column);
            }
            const double p = number(ptok);
            auto to = states(single(last, st.where));
            for (int a : acts)
                for (int s : from)
                    for (int s2 : to) builder_->set_transition(a, s, s2, p);
        } else if (f.size() == 2) {
            auto acts = joint_actions(f[0]);
            if (f[1].empty()) throw SyntaxError("missing start state", st.where.line, st.where.column);
            auto from = states(f[1][0]);
            std::vector<Token> data(f[1].begin() + 1, f[1].end());
            data.insert(data.end(), body.begin(), body.end());
            std::vector<double> row(ns);
            if (data.size() == 1 && data[0].text == "uniform") {
                row.assign(ns, 1.0 / ns);
            } else {
                expect_count(data, ns, st.where);
                for (int s2 = 0; s2 < ns; ++s2) row[s2] = number(data[s2]);
            }
            for (int a : acts)
                for (int s : from)
                    for (int s2 = 0; s2 < ns; ++s2) builder_->set_transition(a, s, s2, row[s2]);
        } else if (f.size() == 1) {
            std::vector<Token> atoks = f[0];
            std::vector<Token> data = body;
            if (!atoks.empty() && (atoks.back().text == "uniform" || atoks.back().text == "identity")) {
                data.insert(data.begin(), atoks.back());
                atoks.pop_back();
            }
            auto acts = joint_actions(atoks);
            for (int a : acts)
                for (int s = 0; s < ns; ++s)
                    for (int s2 = 0; s2 < ns; ++s2) {
                        double p;
                        if (data.size() == 1 && data[0].text == "uniform") p = 1.0 / ns;
                        else if (data.size() == 1 && data[0].text == "identity") p = s == s2 ? 1.0 : 0.0;
                        else {
                            expect_count(data, static_cast<std::size_t>(ns) * ns, st.where);
                            p = number(data[static_cast<std::size_t>(s) * ns + s2]);
                        }
                        builder_->set_transition(a, s, s2, p);
                    }
        } else {
            throw SyntaxError("malformed T entry", st.where.line, st.where.column);
        }
    }

    // Split a trailing probability off a joint-observation field when the
    // number of tokens shows one is attached ("O: a : s' : o p").
    std::pair<std::vector<Token>, Token> observation_and_value(std::vector<Token> field,
                                                               const std::vector<Token>& body,
                                                               const Token& at) const {
        const std::size_t n = static_cast<std::size_t>(agents_.size());
        if (body.size() == 1 && (field.size() == n || field.size() == 1)) return {field, body[0]};
        if (body.empty() && field.size() >= 2 && (field.size() == n + 1 || field.size() == 2)) {
            Token v = field.back();
            field.pop_back();
            return {field, v};
        }
        throw SyntaxError("malformed entry", at.line, at.column);
    }

    void observation(const Statement& st) {
        const int ns = builder_->num_states();
        const int no = builder_->num_joint_observations();
        const auto& f = st.head_fields;
        auto body = flatten(st.body_lines);
        std::vector<int> all_states(ns);
        std::iota(all_states.begin(), all_states.end(), 0);
        if (f.size() == 5 || f.size() == 4 || f.size() == 3) {
            auto acts = joint_actions(f[0]);
            std::vector<int> from = all_states;
            std::size_t k = 1;
            if (f.size() == 5) from = states(single(f[k++], st.where));
            auto to = states(single(f[k++], st.where));
            std::vector<Token> otoks;
            Token vtok;
            if (k + 1 < f.size()) {
                otoks = f[k];
                if (f[k + 1].empty() && body.size() == 1) vtok = body[0];
                else if (body.empty()) vtok = single(f[k + 1], st.where);
                else throw SyntaxError("unexpected tokens after probability", st.where.line, st.where.column);
            } else {
                std::tie(otoks, vtok) = observation_and_value(f[k], body, st.where);
            }
            if (f.size() == 5 && k + 1 >= f.size())
                throw SyntaxError("malformed O entry", st.where.line, st.where.column);
            const double p = number(vtok);
            auto obs = joint_observations(otoks);
            for (int a : acts)
                for (int s : from)
                    for (int s2 : to)
                        for (int o : obs) builder_->set_observation(a, s, s2, o, p);
        } else if (f.size() == 2) {
            auto acts = joint_actions(f[0]);
            if (f[1].empty()) throw SyntaxError("missing end state", st.where.line, st.where.column);
            auto to = states(f[1][0]);
            std::vector<Token> data(f[1].begin() + 1, f[1].end());
            data.insert(data.end(), body.begin(), body.end());
            std::vector<double> row(no);
            if (data.size() == 1 && data[0].text == "uniform") {
                row.assign(no, 1.0 / no);
            } else {
                expect_count(data, no, st.where);
                for (int o = 0; o < no; ++o) row[o] = number(data[o]);
            }
            for (int a : acts)
                for (int s2 : to)
                    for (int o = 0; o < no; ++o) builder_->set_observation_all_starts(a, s2, o, row[o]);
        } else if (f.size() == 1) {
            std::vector<Token> atoks = f[0];
            std::vector<Token> data = body;
            if (!atoks.empty() && atoks.back().text == "uniform") {
                data.insert(data.begin(), atoks.back());
                atoks.pop_back();
            }
            auto acts = joint_actions(atoks);
            for (int a : acts)
                for (int s2 = 0; s2 < ns; ++s2)
                    for (int o = 0; o < no; ++o) {
                        double p;
                        if (data.size() == 1 && data[0].text == "uniform") p = 1.0 / no;
                        else {
                            expect_count(data, static_cast<std::size_t>(ns) * no, st.where);
                            p = number(data[static_cast<std::size_t>(s2) * no + o]);
                        }
                        builder_->set_observation_all_starts(a, s2, o, p);
                    }
        } else {
            throw SyntaxError("malformed O entry", st.where.line, st.where.column);
        }
    }

    void reward(const Statement& st) {
        const int ns = builder_->num_states();
        const int no = builder_->num_joint_observations();
        const auto& f = st.head_fields;
        auto body = flatten(st.body_lines);
        if (f.size() < 2) throw SyntaxError("malformed R entry", st.where.line, st.where.column);
        auto acts = joint_actions(f[0]);
        if (f.size() == 5 || f.size() == 4) {
            auto from = states(single(f[1], st.where));
            const Token& s2tok = single(f[2], st.where);
            std::vector<Token> otoks;
            Token vtok;
            if (f.size() == 5) {
                otoks = f[3];
                if (f[4].empty() && body.size() == 1) vtok = body[0];
                else if (body.empty()) vtok = single(f[4], st.where);
                else throw SyntaxError("unexpected tokens after reward", st.where.line, st.where.column);
            } else {
                std::tie(otoks, vtok) = observation_and_value(f[3], body, st.where);
            }
            const double r = number(vtok);
            const bool coarse = s2tok.text == "*" && otoks.size() == 1 && otoks[0].text == "*";
            auto to = states(s2tok);
            auto obs = joint_observations(otoks);
            for (int a : acts)
                for (int s : from) {
                    if (coarse && r4_.empty()) {
                        r2_[static_cast<std::size_t>(s) * builder_->num_joint_actions() + a] = r;
                        continue;
                    }
                    detailed();
                    for (int s2 : to)
                        for (int o : obs) r4_[index4(a, s, s2, o)] = r;
                }
        } else if (f.size() == 3) {
            auto from = states(single(f[1], st.where));
            if (f[2].empty()) throw SyntaxError("missing end state", st.where.line, st.where.column);
            auto to = states(f[2][0]);
            std::vector<Token> data(f[2].begin() + 1, f[2].end());
            data.insert(data.end(), body.begin(), body.end());
            expect_count(data, no, st.where);
            detailed();
            for (int a : acts)
                for (int s : from)
                    for (int s2 : to)
                        for (int o = 0; o < no; ++o) r4_[index4(a, s, s2, o)] = number(data[o]);
        } else if (f.size() == 2) {
            if (f[1].empty()) throw SyntaxError("missing start state", st.where.line, st.where.column);
            auto from = states(f[1][0]);
            std::vector<Token> data(f[1].begin() + 1, f[1].end());
            data.insert(data.end(), body.begin(), body.end());
            expect_count(data, static_cast<std::size_t>(ns) * no, st.where);
            detailed();
            for (int a : acts)
                for (int s : from)
                    for (int s2 = 0; s2 < ns; ++s2)
                        for (int o = 0; o < no; ++o)
                            r4_[index4(a, s, s2, o)] = number(data[static_cast<std::size_t>(s2) * no + o]);
        } else {
            throw SyntaxError("malformed R entry", st.where.line, st.where.column);
        }
    }

    std::size_t index4(int a, int s, int s2, int o) const {
        const std::size_t ns = builder_->num_states();
        return ((a * ns + s) * ns + s2) * builder_->num_joint_observations() + o;
    }

    // Switch to per-(s', o) rewards, seeding from the per-(s, a) values so far.
    void detailed() {
        if (!r4_.empty()) return;
        const int ns = builder_->num_states();
        const int na = builder_->num_joint_actions();
        const int no = builder_->num_joint_observations();
        r4_.assign(static_cast<std::size_t>(na) * ns * ns * no, 0.0);
        for (int a = 0; a < na; ++a)
            for (int s = 0; s < ns; ++s)
                for (int s2 = 0; s2 < ns; ++s2)
                    for (int o = 0; o < no; ++o)
                        r4_[index4(a, s, s2, o)] = r2_[static_cast<std::size_t>(s) * na + a];
    }

    void finish_rewards() {
        const int ns = builder_->num_states();
        const int na = builder_->num_joint_actions();
        const int no = builder_->num_joint_observations();
        const double sign = cost_ ? -1.0 : 1.0;
        for (int a = 0; a < na; ++a)
            for (int s = 0; s < ns; ++s) {
                double r = 0.0;
                if (r4_.empty()) {
                    r = r2_[static_cast<std::size_t>(s) * na + a];
                } else {
                    for (int s2 = 0; s2 < ns; ++s2) {
                        const double t = builder_->transition(a, s, s2);
                        if (t == 0.0) continue;
                        for (int o = 0; o < no; ++o)
                            r += t * builder_->observation(a, s, s2, o) * r4_[index4(a, s, s2, o)];
                    }
                }
                builder_->set_reward(s, a, sign * r);
            }
    }

    std::vector<Statement> statements_;
    std::vector<std::string> agents_;
    std::vector<std::string> states_;
    std::vector<std::vector<std::string>> actions_;
    std::vector<std::vector<std::string>> observations_;
    double discount_ = 1.0;
    bool cost_ = false;
    std::optional<ModelBuilder> builder_;
    std::vector<double> r2_;
    std::vector<double> r4_;
};

inline std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace detail

/// Parse a model document. Throws SyntaxError or SemanticError.
inline DecPomdp parse_model(std::string_view text) { return detail::Parser(text).parse(); }

inline DecPomdp load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SemanticError("cannot open model file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_model(ss.str());
}

/**
 * Canonical text form: fixed section order, nonzero entries only, 17
 * significant digits, so parse_model(serialize_model(m)) reproduces every
 * tensor exactly.
 */
inline std::string serialize_model(const DecPomdp& m) {
    using detail::format_number;
    std::ostringstream out;
    const int n = m.num_agents();
    const int ns = m.num_states();
    auto joined = [](const std::vector<std::string>& names) {
        std::string s;
        for (std::size_t k = 0; k < names.size(); ++k) s += (k ? " " : "") + names[k];
        return s;
    };
    auto joint = [&](const MixedRadix& radix, int flat, bool actions) {
        std::string s;
        for (int i = 0; i < n; ++i) {
            const auto& names = actions ? m.action_names(i) : m.observation_names(i);
            s += (i ? " " : "") + names[radix.component(flat, i)];
        }
        return s;
    };
    out << "agents: " << joined(m.agent_names()) << "\n";
    out << "discount: " << format_number(m.discount()) << "\n";
    out << "values: reward\n";
    out << "states: " << joined(m.state_names()) << "\n";
    out << "start:\n";
    for (int s = 0; s < ns; ++s) out << (s ? " " : "") << format_number(m.initial_belief()[s]);
    out << "\nactions:\n";
    for (int i = 0; i < n; ++i) out << joined(m.action_names(i)) << "\n";
    out << "observations:\n";
    for (int i = 0; i < n; ++i) out << joined(m.observation_names(i)) << "\n";
    for (int a = 0; a < m.num_joint_actions(); ++a)
        for (int s = 0; s < ns; ++s)
            for (int s2 = 0; s2 < ns; ++s2)
                if (double p = m.transition(a, s, s2); p != 0.0)
                    out << "T: " << joint(m.joint_actions(), a, true) << " : " << m.state_names()[s]
                        << " : " << m.state_names()[s2] << " : " << format_number(p) << "\n";
    const bool per_start = m.observation_depends_on_start_state();
    for (int a = 0; a < m.num_joint_actions(); ++a)
        for (int s = 0; s < (per_start ? ns : 1); ++s)
            for (int s2 = 0; s2 < ns; ++s2)
                for (int o = 0; o < m.num_joint_observations(); ++o)
                    if (double p = m.observation(a, s, s2, o); p != 0.0) {
                        out << "O: " << joint(m.joint_actions(), a, true) << " : ";
                        if (per_start) out << m.state_names()[s] << " : ";
                        out << m.state_names()[s2] << " : " << joint(m.joint_observations(), o, false)
                            << " : " << format_number(p) << "\n";
                    }
    for (int a = 0; a < m.num_joint_actions(); ++a)
        for (int s = 0; s < ns; ++s)
            if (double r = m.reward(s, a); r != 0.0)
                out << "R: " << joint(m.joint_actions(), a, true) << " : " << m.state_names()[s]
                    << " : * : * : " << format_number(r) << "\n";
    return out.str();
}

} // namespace decpomdp
