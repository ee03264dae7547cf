#include "giw/tree.hpp"

#include <cctype>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace giw {

namespace {

bool is_comparison(const std::string& text) {
    return text == "==" || text == "!=" || text == "<" || text == "<=" || text == ">" ||
           text == ">=";
}

bool is_arithmetic(const std::string& text) {
    return text == "+" || text == "-" || text == "*" || text == "/" || text == "%";
}

bool is_integer(const std::string& text) {
    if (text.empty())
        return false;
    for (char c : text)
        if (!std::isdigit(static_cast<unsigned char>(c)))
            return false;
    return true;
}

// ---------------------------------------------------------------------------
// statement-language parser
// ---------------------------------------------------------------------------

class ToyTreeParser {
public:
    ToyTreeParser(const std::string& text) : text_(text) {}

    Node parse_unit() {
        Node unit;
        unit.tag = "unit";
        while (pos_ < text_.size())
            unit.kids.push_back(parse_item());
        return unit;
    }

private:
    const std::string& text_;
    std::size_t pos_ = 0;

    char peek(std::size_t ahead = 0) const {
        return pos_ + ahead < text_.size() ? text_[pos_ + ahead] : '\0';
    }

    static Node leaf(std::string tag, std::string text) {
        Node n;
        n.tag = std::move(tag);
        n.text = std::move(text);
        return n;
    }

    bool at_word(const char* word) const {
        std::size_t len = std::strlen(word);
        if (text_.compare(pos_, len, word) != 0)
            return false;
        char after = pos_ + len < text_.size() ? text_[pos_ + len] : '\0';
        return !(std::isalnum(static_cast<unsigned char>(after)) || after == '_');
    }

    Node take_ws() {
        std::size_t start = pos_;
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
        return leaf("text", text_.substr(start, pos_ - start));
    }

    // '#' to end of line; numbers inside become number nodes so value edits
    // confined to comments exist (they compile to nothing)
    Node take_comment() {
        Node comment;
        comment.tag = "comment";
        std::size_t start = pos_;
        while (pos_ < text_.size() && text_[pos_] != '\n')
            ++pos_;
        std::string body = text_.substr(start, pos_ - start);
        std::size_t i = 0;
        std::string run;
        auto word_char = [](char c) {
            return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
        };
        while (i < body.size()) {
            // digit runs glued to a word stay part of that word
            if (std::isdigit(static_cast<unsigned char>(body[i])) &&
                (run.empty() || !word_char(run.back()))) {
                if (!run.empty()) {
                    comment.kids.push_back(leaf("text", run));
                    run.clear();
                }
                std::size_t j = i;
                while (j < body.size() && std::isdigit(static_cast<unsigned char>(body[j])))
                    ++j;
                comment.kids.push_back(leaf("number", body.substr(i, j - i)));
                i = j;
            } else {
                run += body[i++];
            }
        }
        if (!run.empty())
            comment.kids.push_back(leaf("text", run));
        return comment;
    }

    Node parse_item() {
        char c = peek();
        if (std::isspace(static_cast<unsigned char>(c)))
            return take_ws();
        if (c == '#')
            return take_comment();
        if (at_word("if"))
            return parse_if();
        if (at_word("while"))
            return parse_while();
        if (c == '{')
            return parse_block();
        return parse_simple_stmt();
    }

    // expression tokens up to (not including) a stop character at depth 0
    void push_expr_tokens(Node& parent, const char* stops) {
        int depth = 0;
        std::string run;
        auto flush = [&]() {
            if (!run.empty()) {
                parent.kids.push_back(leaf("text", run));
                run.clear();
            }
        };
        while (pos_ < text_.size()) {
            char c = peek();
            if (depth == 0 && std::strchr(stops, c))
                break;
            if (c == '(' || c == '[') {
                ++depth;
                run += c;
                ++pos_;
                continue;
            }
            if (c == ')' || c == ']') {
                --depth;
                run += c;
                ++pos_;
                continue;
            }
            if (std::isdigit(static_cast<unsigned char>(c))) {
                // digits inside an identifier are not numeric literals
                if (!run.empty() && (std::isalnum(static_cast<unsigned char>(run.back())) ||
                                     run.back() == '_')) {
                    while (std::isdigit(static_cast<unsigned char>(peek())))
                        run += text_[pos_++];
                    continue;
                }
                flush();
                std::size_t start = pos_;
                while (std::isdigit(static_cast<unsigned char>(peek())))
                    ++pos_;
                parent.kids.push_back(leaf("number", text_.substr(start, pos_ - start)));
                continue;
            }
            // two-character operators first; << and >> stay opaque
            std::string two{c, peek(1)};
            if (two == "==" || two == "!=" || two == "<=" || two == ">=") {
                flush();
                parent.kids.push_back(leaf("operator_comp", two));
                pos_ += 2;
                continue;
            }
            if (two == "<<" || two == ">>") {
                run += two;
                pos_ += 2;
                continue;
            }
            if (c == '<' || c == '>') {
                flush();
                parent.kids.push_back(leaf("operator_comp", std::string(1, c)));
                ++pos_;
                continue;
            }
            if (c == '+' || c == '-' || c == '*' || c == '/' || c == '%') {
                flush();
                parent.kids.push_back(leaf("operator_arith", std::string(1, c)));
                ++pos_;
                continue;
            }
            run += c;
            ++pos_;
        }
        flush();
    }

    // name [index]? = expr ; anything malformed is preserved opaquely
    Node parse_simple_stmt() {
        std::size_t start = pos_;
        Node stmt;
        stmt.tag = "stmt";
        std::string head;
        while (pos_ < text_.size()) {
            char c = peek();
            if (c == '=' || c == ';' || c == '\n' || c == '[')
                break;
            head += c;
            ++pos_;
        }
        if (peek() == '[') {
            head += '[';
            ++pos_;
            stmt.kids.push_back(leaf("text", head));
            push_expr_tokens(stmt, "];\n");
            if (peek() != ']')
                return opaque_to_line(start);
            ++pos_;
            std::string mid = "]";
            while (pos_ < text_.size() && (peek() == ' ' || peek() == '\t')) {
                mid += peek();
                ++pos_;
            }
            if (peek() != '=')
                return opaque_to_line(start);
            ++pos_;
            stmt.kids.push_back(leaf("text", mid + "="));
        } else if (peek() == '=') {
            ++pos_;
            stmt.kids.push_back(leaf("text", head + "="));
        } else {
            return opaque_to_line(start);
        }
        push_expr_tokens(stmt, ";\n}");
        if (peek() != ';')
            return opaque_to_line(start);
        ++pos_;
        stmt.kids.push_back(leaf("text", ";"));
        return stmt;
    }

    Node opaque_to_line(std::size_t start) {
        pos_ = start;
        while (pos_ < text_.size() && text_[pos_] != '\n')
            ++pos_;
        if (pos_ < text_.size())
            ++pos_; // keep the newline in the span
        return leaf("text", text_.substr(start, pos_ - start));
    }

    Node parse_block() {
        Node block;
        block.tag = "block";
        block.kids.push_back(leaf("text", "{"));
        ++pos_; // '{'
        while (pos_ < text_.size() && peek() != '}')
            block.kids.push_back(parse_item());
        if (peek() == '}') {
            block.kids.push_back(leaf("text", "}"));
            ++pos_;
        }
        return block;
    }

    Node parse_if() {
        Node node;
        node.tag = "if";
        pos_ += 2; // "if"
        node.kids.push_back(leaf("text", "if"));
        node.kids.push_back(take_ws());
        if (peek() != '(')
            return node; // malformed; spans already consumed stay as-is
        ++pos_;
        node.kids.push_back(leaf("text", "("));
        push_expr_tokens(node, ")");
        if (peek() == ')') {
            ++pos_;
            node.kids.push_back(leaf("text", ")"));
        }
        node.kids.push_back(take_ws());
        if (peek() == '{')
            node.kids.push_back(parse_block());
        // optional else / else-if chain
        std::size_t mark = pos_;
        Node ws = take_ws();
        if (at_word("else")) {
            node.kids.push_back(ws);
            pos_ += 4;
            node.kids.push_back(leaf("text", "else"));
            node.kids.push_back(take_ws());
            if (at_word("if"))
                node.kids.push_back(parse_if());
            else if (peek() == '{')
                node.kids.push_back(parse_block());
        } else {
            pos_ = mark; // hand the whitespace back
        }
        return node;
    }

    Node parse_while() {
        Node node;
        node.tag = "while";
        pos_ += 5; // "while"
        node.kids.push_back(leaf("text", "while"));
        node.kids.push_back(take_ws());
        if (peek() != '(')
            return node;
        ++pos_;
        node.kids.push_back(leaf("text", "("));
        push_expr_tokens(node, ")");
        if (peek() == ')') {
            ++pos_;
            node.kids.push_back(leaf("text", ")"));
        }
        node.kids.push_back(take_ws());
        if (peek() == '{')
            node.kids.push_back(parse_block());
        return node;
    }
};

// ---------------------------------------------------------------------------
// XML parser (srcML-flavoured)
// ---------------------------------------------------------------------------

std::string strip_ns(const std::string& name) {
    std::size_t colon = name.find(':');
    return colon == std::string::npos ? name : name.substr(colon + 1);
}

std::string encode_entities(const std::string& text) {
    std::string out;
    for (char c : text) {
        switch (c) {
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '&': out += "&amp;"; break;
        default: out += c;
        }
    }
    return out;
}

std::string decode_entities(const std::string& text) {
    std::string out;
    for (std::size_t i = 0; i < text.size();) {
        if (text[i] == '&') {
            if (text.compare(i, 4, "&lt;") == 0) { out += '<'; i += 4; continue; }
            if (text.compare(i, 4, "&gt;") == 0) { out += '>'; i += 4; continue; }
            if (text.compare(i, 5, "&amp;") == 0) { out += '&'; i += 5; continue; }
            if (text.compare(i, 6, "&quot;") == 0) { out += '"'; i += 6; continue; }
            if (text.compare(i, 6, "&apos;") == 0) { out += '\''; i += 6; continue; }
        }
        out += text[i++];
    }
    return out;
}

class XmlParser {
public:
    explicit XmlParser(const std::string& text) : text_(text) {}

    Node parse_unit() {
        Node unit;
        unit.tag = "unit";
        while (pos_ < text_.size()) {
            if (text_[pos_] == '<' && text_.compare(pos_, 2, "<?") == 0) {
                std::size_t end = text_.find("?>", pos_);
                if (end == std::string::npos)
                    throw std::runtime_error("xml: unterminated declaration");
                unit.kids.push_back(text_leaf(text_.substr(pos_, end + 2 - pos_)));
                pos_ = end + 2;
            } else if (text_[pos_] == '<') {
                unit.kids.push_back(parse_element());
            } else {
                unit.kids.push_back(take_text());
            }
        }
        // a lone srcML-style document: hoist when the only element is <unit>
        return unit;
    }

private:
    const std::string& text_;
    std::size_t pos_ = 0;

    static Node text_leaf(std::string text) {
        Node n;
        n.tag = "text";
        n.text = std::move(text);
        return n;
    }

    Node take_text() {
        std::size_t start = pos_;
        while (pos_ < text_.size() && text_[pos_] != '<')
            ++pos_;
        return text_leaf(text_.substr(start, pos_ - start));
    }

    Node parse_element() {
        if (text_[pos_] != '<')
            throw std::runtime_error("xml: expected element");
        std::size_t start = ++pos_;
        while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_])) &&
               text_[pos_] != '>' && text_[pos_] != '/')
            ++pos_;
        Node node;
        node.is_element = true;
        node.xml_name = text_.substr(start, pos_ - start);
        if (node.xml_name.empty())
            throw std::runtime_error("xml: empty element name");

        // attributes
        while (pos_ < text_.size() && text_[pos_] != '>' && text_[pos_] != '/') {
            while (std::isspace(static_cast<unsigned char>(text_[pos_])))
                ++pos_;
            if (text_[pos_] == '>' || text_[pos_] == '/')
                break;
            std::size_t name_start = pos_;
            while (pos_ < text_.size() && text_[pos_] != '=' &&
                   !std::isspace(static_cast<unsigned char>(text_[pos_])))
                ++pos_;
            std::string name = text_.substr(name_start, pos_ - name_start);
            while (pos_ < text_.size() && (text_[pos_] == '=' ||
                                           std::isspace(static_cast<unsigned char>(text_[pos_]))))
                ++pos_;
            if (pos_ >= text_.size() || (text_[pos_] != '"' && text_[pos_] != '\''))
                throw std::runtime_error("xml: bad attribute for <" + node.xml_name + ">");
            char quote = text_[pos_++];
            std::size_t value_start = pos_;
            while (pos_ < text_.size() && text_[pos_] != quote)
                ++pos_;
            if (pos_ >= text_.size())
                throw std::runtime_error("xml: unterminated attribute value");
            node.attrs.emplace_back(name, text_.substr(value_start, pos_ - value_start));
            ++pos_;
        }

        if (text_[pos_] == '/') {
            if (pos_ + 1 >= text_.size() || text_[pos_ + 1] != '>')
                throw std::runtime_error("xml: malformed empty element");
            pos_ += 2;
            node.self_closing = true;
            normalize(node);
            return node;
        }
        ++pos_; // '>'

        std::string close = "</" + node.xml_name;
        while (pos_ < text_.size()) {
            if (text_[pos_] == '<' && text_.compare(pos_, close.size(), close) == 0) {
                pos_ += close.size();
                while (pos_ < text_.size() && text_[pos_] != '>')
                    ++pos_;
                if (pos_ >= text_.size())
                    throw std::runtime_error("xml: unterminated close tag");
                ++pos_;
                normalize(node);
                return node;
            }
            if (text_[pos_] == '<')
                node.kids.push_back(parse_element());
            else
                node.kids.push_back(take_text());
        }
        throw std::runtime_error("xml: missing close tag for <" + node.xml_name + ">");
    }

    static std::string direct_text(const Node& node) {
        std::string out;
        for (const Node& kid : node.kids)
            if (kid.tag == "text")
                out += kid.text;
        return out;
    }

    // map srcML names onto the canonical edit tags
    static void normalize(Node& node) {
        std::string name = strip_ns(node.xml_name);
        if (name == "operator") {
            std::string text = decode_entities(direct_text(node));
            node.tag = is_comparison(text) ? "operator_comp"
                       : is_arithmetic(text) ? "operator_arith"
                                             : "operator";
            return;
        }
        if (name == "literal") {
            node.tag = is_integer(direct_text(node)) ? "number" : "literal";
            return;
        }
        if (name == "expr_stmt" || name == "decl_stmt" || name == "empty_stmt" ||
            name == "return" || name == "break" || name == "continue") {
            node.tag = "stmt";
            return;
        }
        node.tag = name;
    }
};

void render_source_walk(const Node& node, std::string& out, bool from_xml) {
    if (from_xml && node.is_element && strip_ns(node.xml_name) == "comment")
        return; // comments never reach the compiler
    if (node.leaf()) {
        out += from_xml ? decode_entities(node.text) : node.text;
        return;
    }
    for (const Node& kid : node.kids)
        render_source_walk(kid, out, from_xml);
}

void render_xml_walk(const Node& node, std::string& out) {
    if (!node.is_element) {
        out += node.text;
        for (const Node& kid : node.kids)
            render_xml_walk(kid, out);
        return;
    }
    out += '<';
    out += node.xml_name;
    for (const auto& [name, value] : node.attrs) {
        out += ' ';
        out += name;
        out += "=\"";
        out += value;
        out += '"';
    }
    if (node.self_closing && node.kids.empty()) {
        out += "/>";
        return;
    }
    out += '>';
    for (const Node& kid : node.kids)
        render_xml_walk(kid, out);
    out += "</";
    out += node.xml_name;
    out += '>';
}

template <typename NodeT>
NodeT* find_walk(NodeT& node, const std::string& tag, int& remaining) {
    if (node.tag == tag) {
        if (remaining == 0)
            return &node;
        --remaining;
    }
    for (auto& kid : node.kids)
        if (NodeT* hit = find_walk(kid, tag, remaining))
            return hit;
    return nullptr;
}

void census_walk(const Node& node, std::map<std::string, int>& counts) {
    ++counts[node.tag];
    for (const Node& kid : node.kids)
        census_walk(kid, counts);
}

Node* locate_walk(Node& node, const std::string& tag, int& remaining, Node* parent,
                  std::size_t slot, NodeLocation& loc) {
    if (node.tag == tag) {
        if (remaining == 0) {
            loc.parent = parent;
            loc.slot = slot;
            return &node;
        }
        --remaining;
    }
    for (std::size_t i = 0; i < node.kids.size(); ++i)
        if (Node* hit = locate_walk(node.kids[i], tag, remaining, &node, i, loc))
            return hit;
    return nullptr;
}

} // namespace

SourceTree parse_toy(const std::string& text, const std::string& file) {
    SourceTree tree;
    tree.file = file;
    tree.root = ToyTreeParser(text).parse_unit();
    return tree;
}

SourceTree parse_xml(const std::string& text, const std::string& file) {
    SourceTree tree;
    tree.file = file;
    tree.from_xml = true;
    tree.root = XmlParser(text).parse_unit();
    return tree;
}

SourceTree parse_source(const std::string& text, const std::string& file) {
    std::size_t i = 0;
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i])))
        ++i;
    if (i < text.size() && text[i] == '<')
        return parse_xml(text, file);
    return parse_toy(text, file);
}

SourceTree load_source_tree(const std::string& path, bool read_only) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open source file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    std::size_t slash = path.rfind('/');
    SourceTree tree =
        parse_source(buf.str(), slash == std::string::npos ? path : path.substr(slash + 1));
    tree.read_only = read_only;
    return tree;
}

std::string render_source(const SourceTree& tree) {
    std::string out;
    render_source_walk(tree.root, out, tree.from_xml);
    return out;
}

std::string render_xml(const SourceTree& tree) {
    std::string out;
    for (const Node& kid : tree.root.kids)
        render_xml_walk(kid, out);
    return out;
}

int count_nodes(const SourceTree& tree, const std::string& tag) {
    std::map<std::string, int> counts;
    census_walk(tree.root, counts);
    auto it = counts.find(tag);
    return it == counts.end() ? 0 : it->second;
}

std::map<std::string, int> tag_census(const SourceTree& tree) {
    std::map<std::string, int> counts;
    census_walk(tree.root, counts);
    return counts;
}

std::string node_text(const Node& node) {
    if (!node.is_element)
        return node.text;
    std::string out;
    for (const Node& kid : node.kids)
        if (kid.tag == "text" && !kid.is_element)
            out += kid.text;
    return decode_entities(out);
}

void set_node_text(Node& node, const std::string& value) {
    if (!node.is_element) {
        node.text = value;
        return;
    }
    Node leaf;
    leaf.tag = "text";
    leaf.text = encode_entities(value);
    node.kids.clear();
    node.kids.push_back(std::move(leaf));
    node.self_closing = false;
}

const Node* find_node(const SourceTree& tree, const std::string& tag, int index) {
    if (index < 0)
        return nullptr;
    int remaining = index;
    return find_walk(tree.root, tag, remaining);
}

Node* find_node(SourceTree& tree, const std::string& tag, int index) {
    if (index < 0)
        return nullptr;
    int remaining = index;
    return find_walk(tree.root, tag, remaining);
}

std::optional<NodeLocation> locate_node(SourceTree& tree, const std::string& tag, int index) {
    if (index < 0)
        return std::nullopt;
    int remaining = index;
    NodeLocation loc;
    if (!locate_walk(tree.root, tag, remaining, nullptr, 0, loc))
        return std::nullopt;
    if (!loc.parent)
        return std::nullopt; // the root itself is not editable
    return loc;
}

} // namespace giw
