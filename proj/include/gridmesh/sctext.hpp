#pragma once

// Structured-text document format used by scenario files: nested key/value
// nodes with optional name arguments, `#` comments, and no significant
// whitespace.
//
//   key = value
//   key "name" { child = 1  other { ... } }
//
// Lists are expressed by repeating a key.

#include <cctype>
#include <cerrno>
#include <cstdlib>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace gridmesh::sctext {

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Node {
    std::string key;
    std::vector<std::string> args;       // quoted or bare tokens before '=' / '{'
    std::optional<std::string> scalar;   // raw token after '='
    std::vector<Node> children;          // block body
    bool is_block = false;
    int line = 0;
};

namespace detail {

struct Token {
    enum Kind { word, string, equals, open, close, eof } kind = eof;
    std::string text;
    int line = 0;
};

class Lexer {
public:
    Lexer(std::string_view src, std::string file) : src_(src), file_(std::move(file)) {}

    Token next() {
        skip_space();
        Token t;
        t.line = line_;
        if (pos_ >= src_.size()) {
            t.kind = Token::eof;
            return t;
        }
        char c = src_[pos_];
        if (c == '{') { ++pos_; t.kind = Token::open; return t; }
        if (c == '}') { ++pos_; t.kind = Token::close; return t; }
        if (c == '=') { ++pos_; t.kind = Token::equals; return t; }
        if (c == '"') {
            ++pos_;
            std::string s;
            while (pos_ < src_.size() && src_[pos_] != '"') {
                if (src_[pos_] == '\n') fail("newline inside quoted string");
                s.push_back(src_[pos_++]);
            }
            if (pos_ >= src_.size()) fail("unterminated quoted string");
            ++pos_;
            t.kind = Token::string;
            t.text = std::move(s);
            return t;
        }
        std::string w;
        while (pos_ < src_.size() && !std::isspace(static_cast<unsigned char>(src_[pos_])) &&
               src_[pos_] != '{' && src_[pos_] != '}' && src_[pos_] != '=' && src_[pos_] != '#' &&
               src_[pos_] != '"') {
            w.push_back(src_[pos_++]);
        }
        t.kind = Token::word;
        t.text = std::move(w);
        return t;
    }

    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError(file_ + ":" + std::to_string(line_) + ": " + msg);
    }

private:
    void skip_space() {
        while (pos_ < src_.size()) {
            char c = src_[pos_];
            if (c == '\n') { ++line_; ++pos_; }
            else if (std::isspace(static_cast<unsigned char>(c))) { ++pos_; }
            else if (c == '#') { while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_; }
            else break;
        }
    }

    std::string_view src_;
    std::string file_;
    std::size_t pos_ = 0;
    int line_ = 1;
};

class Parser {
public:
    Parser(std::string_view src, std::string file) : lex_(src, std::move(file)) { advance(); }

    std::vector<Node> parse_document() {
        std::vector<Node> nodes;
        while (tok_.kind != Token::eof) {
            if (tok_.kind == Token::close) fail("unexpected '}'");
            nodes.push_back(parse_node());
        }
        return nodes;
    }

private:
    Node parse_node() {
        if (tok_.kind != Token::word && tok_.kind != Token::string) {
            fail("expected a key");
        }
        Node node;
        node.key = tok_.text;
        node.line = tok_.line;
        advance();
        while (tok_.kind == Token::word || tok_.kind == Token::string) {
            node.args.push_back(tok_.text);
            advance();
        }
        if (tok_.kind == Token::equals) {
            advance();
            if (tok_.kind != Token::word && tok_.kind != Token::string) {
                fail("expected a value after '='");
            }
            node.scalar = tok_.text;
            advance();
        } else if (tok_.kind == Token::open) {
            advance();
            node.is_block = true;
            while (tok_.kind != Token::close) {
                if (tok_.kind == Token::eof) fail("missing '}' (block opened at line " +
                                                  std::to_string(node.line) + ")");
                node.children.push_back(parse_node());
            }
            advance();
        } else {
            fail("expected '=' or '{' after '" + node.key + "'");
        }
        return node;
    }

    void advance() { tok_ = lex_.next(); }
    [[noreturn]] void fail(const std::string& msg) { lex_.fail(msg); }

    Lexer lex_;
    Token tok_;
};

inline bool needs_quotes(const std::string& s) {
    if (s.empty()) return true;
    for (char c : s) {
        if (std::isspace(static_cast<unsigned char>(c)) || c == '{' || c == '}' || c == '=' ||
            c == '#' || c == '"') {
            return true;
        }
    }
    return false;
}

inline void emit(std::ostream& out, const Node& node, int indent) {
    std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
    out << pad << node.key;
    for (const auto& a : node.args) out << " \"" << a << '"';
    if (node.scalar) {
        out << " = ";
        if (needs_quotes(*node.scalar)) out << '"' << *node.scalar << '"';
        else out << *node.scalar;
        out << '\n';
    } else {
        out << " {\n";
        for (const auto& child : node.children) emit(out, child, indent + 1);
        out << pad << "}\n";
    }
}

} // namespace detail

inline std::vector<Node> parse(std::string_view text, const std::string& file_label) {
    return detail::Parser(text, file_label).parse_document();
}

inline std::string serialize(const std::vector<Node>& nodes) {
    std::ostringstream out;
    for (const auto& node : nodes) detail::emit(out, node, 0);
    return out.str();
}

inline double parse_number(const std::string& raw, const std::string& context) {
    const char* begin = raw.c_str();
    char* end = nullptr;
    errno = 0;
    double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0' || errno == ERANGE) {
        throw ParseError(context + ": not a number: '" + raw + "'");
    }
    return v;
}

} // namespace gridmesh::sctext
