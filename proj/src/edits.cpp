#include "giw/edits.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace giw {

const std::vector<std::string>& comparison_operators() {
    static const std::vector<std::string> ops = {"==", "!=", "<", "<=", ">", ">="};
    return ops;
}

const std::vector<std::string>& arithmetic_operators() {
    static const std::vector<std::string> ops = {"+", "-", "*", "/", "%"};
    return ops;
}

namespace {

bool in_set(const std::vector<std::string>& set, const std::string& value) {
    return std::find(set.begin(), set.end(), value) != set.end();
}

std::string kind_name(const Edit& edit) {
    switch (edit.kind) {
    case EditKind::stmt_deletion: return "StmtDeletion";
    case EditKind::stmt_insertion: return "StmtInsertion";
    case EditKind::stmt_replacement: return "StmtReplacement";
    case EditKind::numeric_setting: return "NumericSetting";
    case EditKind::relative_numeric_setting: return "RelativeNumericSetting";
    case EditKind::comparison_operator_setting: return "ComparisonOperatorSetting";
    case EditKind::arithmetic_operator_setting: return "ArithmeticOperatorSetting";
    case EditKind::node_deletion: return "NodeDeletion<" + edit.node_tag + ">";
    case EditKind::node_insertion: return "NodeInsertion<" + edit.node_tag + ",block>";
    case EditKind::node_replacement: return "NodeReplacement<" + edit.node_tag + ">";
    }
    return "?";
}

bool parse_kind(const std::string& name, EditKind& kind, std::string& node_tag) {
    node_tag.clear();
    if (name == "StmtDeletion") { kind = EditKind::stmt_deletion; return true; }
    if (name == "StmtInsertion") { kind = EditKind::stmt_insertion; return true; }
    if (name == "StmtReplacement") { kind = EditKind::stmt_replacement; return true; }
    if (name == "NumericSetting") { kind = EditKind::numeric_setting; return true; }
    if (name == "RelativeNumericSetting") { kind = EditKind::relative_numeric_setting; return true; }
    if (name == "ComparisonOperatorSetting") { kind = EditKind::comparison_operator_setting; return true; }
    if (name == "ArithmeticOperatorSetting") { kind = EditKind::arithmetic_operator_setting; return true; }
    std::size_t lt = name.find('<');
    if (lt == std::string::npos || name.back() != '>')
        return false;
    std::string base = name.substr(0, lt);
    std::string param = name.substr(lt + 1, name.size() - lt - 2);
    if (base == "NodeDeletion") {
        kind = EditKind::node_deletion;
        node_tag = param;
        return true;
    }
    if (base == "NodeInsertion") {
        std::size_t comma = param.find(',');
        kind = EditKind::node_insertion;
        node_tag = comma == std::string::npos ? param : param.substr(0, comma);
        return true;
    }
    if (base == "NodeReplacement") {
        kind = EditKind::node_replacement;
        node_tag = param;
        return true;
    }
    return false;
}

std::string ref_to_string(const NodeRef& ref) {
    return "('" + ref.file + "', '" + ref.tag + "', " + std::to_string(ref.index) + ")";
}

bool has_payload(EditKind kind) {
    return kind == EditKind::stmt_insertion || kind == EditKind::stmt_replacement ||
           kind == EditKind::node_insertion || kind == EditKind::node_replacement;
}

bool has_literal(EditKind kind) {
    return kind == EditKind::numeric_setting || kind == EditKind::relative_numeric_setting ||
           kind == EditKind::comparison_operator_setting ||
           kind == EditKind::arithmetic_operator_setting;
}

bool has_position(EditKind kind) {
    return kind == EditKind::stmt_insertion || kind == EditKind::node_insertion;
}

} // namespace

std::string edit_to_string(const Edit& edit) {
    std::string out = kind_name(edit) + "(" + ref_to_string(edit.target);
    if (edit.payload)
        out += ", " + ref_to_string(*edit.payload);
    if (has_position(edit.kind))
        out += ", " + std::to_string(edit.position);
    if (has_literal(edit.kind))
        out += ", '" + edit.literal + "'";
    out += ")";
    return out;
}

std::string patch_to_string(const Patch& patch) {
    std::string out;
    for (std::size_t i = 0; i < patch.edits.size(); ++i) {
        if (i)
            out += " | ";
        out += edit_to_string(patch.edits[i]);
    }
    if (!patch.params.empty()) {
        out += out.empty() ? "::" : " ::";
        for (const auto& [key, value] : patch.params)
            out += " " + key + "=" + value;
    }
    return out;
}

namespace {

struct Cursor {
    const std::string& text;
    std::size_t pos = 0;

    void skip_ws() {
        while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t'))
            ++pos;
    }
    bool eat(char c) {
        skip_ws();
        if (pos < text.size() && text[pos] == c) {
            ++pos;
            return true;
        }
        return false;
    }
    [[noreturn]] void fail(const std::string& what) const {
        throw std::runtime_error("patch parse error: " + what + " in: " + text);
    }
    std::string quoted() {
        skip_ws();
        if (pos >= text.size() || text[pos] != '\'')
            fail("expected quoted string");
        std::size_t start = ++pos;
        while (pos < text.size() && text[pos] != '\'')
            ++pos;
        if (pos >= text.size())
            fail("unterminated string");
        return text.substr(start, pos++ - start);
    }
    long integer() {
        skip_ws();
        std::size_t start = pos;
        if (pos < text.size() && (text[pos] == '-' || text[pos] == '+'))
            ++pos;
        while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos])))
            ++pos;
        if (pos == start)
            fail("expected integer");
        return std::strtol(text.substr(start, pos - start).c_str(), nullptr, 10);
    }
    NodeRef ref() {
        if (!eat('('))
            fail("expected node reference");
        NodeRef r;
        r.file = quoted();
        if (!eat(','))
            fail("expected ','");
        r.tag = quoted();
        if (!eat(','))
            fail("expected ','");
        r.index = static_cast<int>(integer());
        if (!eat(')'))
            fail("expected ')'");
        return r;
    }
};

} // namespace

Edit parse_edit(const std::string& text) {
    std::size_t paren = text.find('(');
    if (paren == std::string::npos)
        throw std::runtime_error("patch parse error: missing '(' in: " + text);
    std::string name = text.substr(0, paren);
    Edit edit;
    if (!parse_kind(name, edit.kind, edit.node_tag))
        throw std::runtime_error("patch parse error: unknown edit kind: " + name);

    Cursor cur{text, paren};
    if (!cur.eat('('))
        cur.fail("expected '('");
    edit.target = cur.ref();
    if (has_payload(edit.kind)) {
        if (!cur.eat(','))
            cur.fail("expected payload");
        edit.payload = cur.ref();
    }
    if (has_position(edit.kind)) {
        if (!cur.eat(','))
            cur.fail("expected position");
        edit.position = static_cast<int>(cur.integer());
    }
    if (has_literal(edit.kind)) {
        if (!cur.eat(','))
            cur.fail("expected literal");
        edit.literal = cur.quoted();
    }
    if (!cur.eat(')'))
        cur.fail("expected ')'");
    return edit;
}

Patch parse_patch(const std::string& text) {
    Patch patch;
    std::string body = text;
    // params section after '::'
    std::size_t params_at = body.find("::");
    if (params_at != std::string::npos) {
        std::istringstream ps(body.substr(params_at + 2));
        std::string token;
        while (ps >> token) {
            std::size_t eq = token.find('=');
            if (eq == std::string::npos)
                throw std::runtime_error("patch parse error: bad param: " + token);
            patch.params[token.substr(0, eq)] = token.substr(eq + 1);
        }
        body = body.substr(0, params_at);
    }
    std::size_t pos = 0;
    while (pos < body.size()) {
        std::size_t bar = body.find(" | ", pos);
        std::string piece =
            bar == std::string::npos ? body.substr(pos) : body.substr(pos, bar - pos);
        // trim
        std::size_t a = piece.find_first_not_of(" \t\r\n");
        std::size_t b = piece.find_last_not_of(" \t\r\n");
        if (a != std::string::npos)
            patch.edits.push_back(parse_edit(piece.substr(a, b - a + 1)));
        if (bar == std::string::npos)
            break;
        pos = bar + 3;
    }
    return patch;
}

Patch load_patch(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open patch file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_patch(buf.str());
}

void save_patch(const std::string& path, const Patch& patch) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write patch file: " + path);
    out << patch_to_string(patch) << "\n";
}

const SourceTree* TreeSet::by_file(const std::string& file) const {
    for (const SourceTree& tree : targets)
        if (tree.file == file)
            return &tree;
    for (const SourceTree& tree : ingredients)
        if (tree.file == file)
            return &tree;
    return nullptr;
}

namespace {

SourceTree* writable_tree(TreeSet& trees, const std::string& file) {
    for (SourceTree& tree : trees.targets)
        if (tree.file == file)
            return tree.read_only ? nullptr : &tree;
    return nullptr; // ingredients are read only by construction
}

// insertion slots sit between a block's braces
struct BlockRange {
    std::size_t begin;
    std::size_t end; // one past the last insertable kid index
};

BlockRange block_range(const Node& block) {
    BlockRange r{0, block.kids.size()};
    if (!block.kids.empty() && block.kids.front().leaf() && block.kids.front().text == "{")
        r.begin = 1;
    if (!block.kids.empty() && block.kids.back().leaf() && block.kids.back().text == "}")
        r.end = block.kids.size() - 1;
    return r;
}

Node separator_leaf() {
    Node n;
    n.tag = "text";
    n.text = "\n";
    return n;
}

} // namespace

bool apply_edit(TreeSet& trees, const Edit& edit) {
    switch (edit.kind) {
    case EditKind::numeric_setting:
    case EditKind::relative_numeric_setting: {
        if (edit.target.tag != "number")
            return false;
        SourceTree* tree = writable_tree(trees, edit.target.file);
        if (!tree)
            return false;
        Node* node = find_node(*tree, "number", edit.target.index);
        if (!node)
            return false;
        if (edit.kind == EditKind::numeric_setting) {
            set_node_text(*node, edit.literal);
            return true;
        }
        const std::string current = node_text(*node);
        char* end = nullptr;
        unsigned long long value = std::strtoull(current.c_str(), &end, 10);
        if (end == current.c_str())
            return false;
        if (edit.literal == "+1")
            value += 1;
        else if (edit.literal == "-1")
            value = value == 0 ? 0 : value - 1;
        else if (edit.literal == "*2")
            value *= 2;
        else if (edit.literal == "/2")
            value /= 2;
        else
            return false;
        set_node_text(*node, std::to_string(value));
        return true;
    }
    case EditKind::comparison_operator_setting:
    case EditKind::arithmetic_operator_setting: {
        const bool comp = edit.kind == EditKind::comparison_operator_setting;
        const std::string tag = comp ? "operator_comp" : "operator_arith";
        if (edit.target.tag != tag)
            return false;
        if (!in_set(comp ? comparison_operators() : arithmetic_operators(), edit.literal))
            return false;
        SourceTree* tree = writable_tree(trees, edit.target.file);
        if (!tree)
            return false;
        Node* node = find_node(*tree, tag, edit.target.index);
        if (!node)
            return false;
        set_node_text(*node, edit.literal);
        return true;
    }
    case EditKind::stmt_deletion:
    case EditKind::node_deletion: {
        const std::string tag =
            edit.kind == EditKind::stmt_deletion ? std::string("stmt") : edit.node_tag;
        if (edit.target.tag != tag)
            return false;
        SourceTree* tree = writable_tree(trees, edit.target.file);
        if (!tree)
            return false;
        auto loc = locate_node(*tree, tag, edit.target.index);
        if (!loc)
            return false;
        loc->parent->kids.erase(loc->parent->kids.begin() + static_cast<long>(loc->slot));
        return true;
    }
    case EditKind::stmt_insertion:
    case EditKind::node_insertion: {
        const std::string payload_tag =
            edit.kind == EditKind::stmt_insertion ? std::string("stmt") : edit.node_tag;
        if (edit.target.tag != "block" || !edit.payload || edit.payload->tag != payload_tag)
            return false;
        const SourceTree* donor_tree = trees.by_file(edit.payload->file);
        if (!donor_tree)
            return false;
        const Node* donor = find_node(*donor_tree, payload_tag, edit.payload->index);
        if (!donor)
            return false;
        Node copy = *donor; // copy first: the donor may live in the edited tree
        SourceTree* tree = writable_tree(trees, edit.target.file);
        if (!tree)
            return false;
        Node* block = find_node(*tree, "block", edit.target.index);
        if (!block)
            return false;
        BlockRange range = block_range(*block);
        std::size_t span = range.end - range.begin;
        std::size_t offset = std::min<std::size_t>(
            edit.position < 0 ? 0 : static_cast<std::size_t>(edit.position), span);
        auto at = block->kids.begin() + static_cast<long>(range.begin + offset);
        at = block->kids.insert(at, separator_leaf());
        block->kids.insert(at + 1, std::move(copy));
        return true;
    }
    case EditKind::stmt_replacement:
    case EditKind::node_replacement: {
        const std::string tag =
            edit.kind == EditKind::stmt_replacement ? std::string("stmt") : edit.node_tag;
        if (edit.target.tag != tag || !edit.payload || edit.payload->tag != tag)
            return false;
        const SourceTree* donor_tree = trees.by_file(edit.payload->file);
        if (!donor_tree)
            return false;
        const Node* donor = find_node(*donor_tree, tag, edit.payload->index);
        if (!donor)
            return false;
        Node copy = *donor;
        SourceTree* tree = writable_tree(trees, edit.target.file);
        if (!tree)
            return false;
        Node* node = find_node(*tree, tag, edit.target.index);
        if (!node)
            return false;
        *node = std::move(copy);
        return true;
    }
    }
    return false;
}

PatchApplication apply_patch(const TreeSet& trees, const Patch& patch) {
    PatchApplication result;
    result.trees = trees;
    result.applied.reserve(patch.edits.size());
    for (const Edit& edit : patch.edits)
        result.applied.push_back(apply_edit(result.trees, edit));
    return result;
}

std::vector<std::string> default_edit_kinds() {
    return {
        "StmtDeletion",
        "StmtInsertion",
        "StmtReplacement",
        "NumericSetting",
        "RelativeNumericSetting",
        "ComparisonOperatorSetting",
        "ArithmeticOperatorSetting",
        "NodeDeletion<stmt>",
        "NodeInsertion<stmt,block>",
        "NodeReplacement<stmt>",
        "NodeReplacement<number>",
    };
}

namespace {

struct TaggedPick {
    std::string file;
    int index = 0;
};

// uniform over every node with the tag across the given trees
std::optional<TaggedPick> pick_node(Rng& rng, const std::vector<const SourceTree*>& trees,
                                    const std::string& tag) {
    std::vector<int> counts;
    int total = 0;
    for (const SourceTree* tree : trees) {
        int n = count_nodes(*tree, tag);
        counts.push_back(n);
        total += n;
    }
    if (total == 0)
        return std::nullopt;
    int k = static_cast<int>(rng.below(static_cast<std::uint32_t>(total)));
    for (std::size_t t = 0; t < trees.size(); ++t) {
        if (k < counts[t])
            return TaggedPick{trees[t]->file, k};
        k -= counts[t];
    }
    return std::nullopt;
}

} // namespace

Edit random_edit(Rng& rng, const TreeSet& trees, const EditWeights& weights) {
    if (trees.targets.empty())
        throw std::runtime_error("random_edit: no target trees");

    std::vector<const SourceTree*> writable;
    for (const SourceTree& tree : trees.targets)
        if (!tree.read_only)
            writable.push_back(&tree);
    std::vector<const SourceTree*> all = writable;
    for (const SourceTree& tree : trees.ingredients)
        all.push_back(&tree);

    std::vector<std::pair<std::string, std::uint32_t>> table;
    if (weights.empty()) {
        for (const std::string& kind : default_edit_kinds())
            table.emplace_back(kind, 1);
    } else {
        for (const auto& [kind, weight] : weights)
            if (weight > 0)
                table.emplace_back(kind, weight);
    }
    std::uint64_t total_weight = 0;
    for (const auto& [kind, weight] : table)
        total_weight += weight;
    if (total_weight == 0)
        throw std::runtime_error("random_edit: all edit weights are zero");

    static const std::vector<std::string> numeric_literals = {"0", "1", "-1"};
    static const std::vector<std::string> relative_literals = {"+1", "-1", "*2", "/2"};

    for (int attempt = 0; attempt < 128; ++attempt) {
        std::uint64_t pick = rng.next_u64() % total_weight;
        std::string name;
        for (const auto& [kind, weight] : table) {
            if (pick < weight) {
                name = kind;
                break;
            }
            pick -= weight;
        }
        Edit edit;
        if (!parse_kind(name, edit.kind, edit.node_tag))
            throw std::runtime_error("random_edit: unknown edit kind in weights: " + name);

        switch (edit.kind) {
        case EditKind::numeric_setting:
        case EditKind::relative_numeric_setting: {
            auto target = pick_node(rng, writable, "number");
            if (!target)
                continue;
            edit.target = {target->file, "number", target->index};
            const auto& lits = edit.kind == EditKind::numeric_setting ? numeric_literals
                                                                      : relative_literals;
            edit.literal = lits[rng.below(static_cast<std::uint32_t>(lits.size()))];
            return edit;
        }
        case EditKind::comparison_operator_setting:
        case EditKind::arithmetic_operator_setting: {
            const bool comp = edit.kind == EditKind::comparison_operator_setting;
            const std::string tag = comp ? "operator_comp" : "operator_arith";
            auto target = pick_node(rng, writable, tag);
            if (!target)
                continue;
            edit.target = {target->file, tag, target->index};
            const auto& ops = comp ? comparison_operators() : arithmetic_operators();
            edit.literal = ops[rng.below(static_cast<std::uint32_t>(ops.size()))];
            return edit;
        }
        case EditKind::stmt_deletion:
        case EditKind::node_deletion: {
            const std::string tag =
                edit.kind == EditKind::stmt_deletion ? std::string("stmt") : edit.node_tag;
            auto target = pick_node(rng, writable, tag);
            if (!target)
                continue;
            edit.target = {target->file, tag, target->index};
            return edit;
        }
        case EditKind::stmt_insertion:
        case EditKind::node_insertion: {
            const std::string payload_tag =
                edit.kind == EditKind::stmt_insertion ? std::string("stmt") : edit.node_tag;
            auto target = pick_node(rng, writable, "block");
            if (!target)
                continue;
            auto payload = pick_node(rng, all, payload_tag);
            if (!payload)
                continue;
            edit.target = {target->file, "block", target->index};
            edit.payload = NodeRef{payload->file, payload_tag, payload->index};
            const SourceTree* tree = trees.by_file(target->file);
            const Node* block = find_node(*tree, "block", target->index);
            BlockRange range = block_range(*block);
            edit.position =
                static_cast<int>(rng.below(static_cast<std::uint32_t>(range.end - range.begin) + 1));
            return edit;
        }
        case EditKind::stmt_replacement:
        case EditKind::node_replacement: {
            const std::string tag =
                edit.kind == EditKind::stmt_replacement ? std::string("stmt") : edit.node_tag;
            auto target = pick_node(rng, writable, tag);
            if (!target)
                continue;
            auto payload = pick_node(rng, all, tag);
            if (!payload)
                continue;
            edit.target = {target->file, tag, target->index};
            edit.payload = NodeRef{payload->file, tag, payload->index};
            return edit;
        }
        }
    }
    throw std::runtime_error("random_edit: no drawable edit for the configured kinds");
}

} // namespace giw
