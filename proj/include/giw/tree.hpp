#pragma once

// Tagged syntax trees for the patch engine. Two input grammars produce the
// same node model: the built-in statement language and srcML-flavoured XML.
// Only a handful of tags are edit targets (stmt, block, number, operator_comp,
// operator_arith); everything else is preserved as opaque text spans so
// rendering loses nothing.

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace giw {

struct Node {
    std::string tag;      // normalized tag used by node references
    std::string text;     // leaf payload; interior nodes use kids
    std::vector<Node> kids;

    // XML bookkeeping (empty/false for statement-language trees)
    std::string xml_name; // original element name, for exact serialization
    std::vector<std::pair<std::string, std::string>> attrs;
    bool is_element = false;
    bool self_closing = false;

    bool leaf() const { return kids.empty() && !is_element; }

    friend bool operator==(const Node&, const Node&) = default;
};

struct SourceTree {
    std::string file; // basename used in node references
    Node root;        // tag "unit"
    bool read_only = false;
    bool from_xml = false;

    friend bool operator==(const SourceTree&, const SourceTree&) = default;
};

// (file, tag, pre-order ordinal of that tag).
struct NodeRef {
    std::string file;
    std::string tag;
    int index = 0;

    friend bool operator==(const NodeRef&, const NodeRef&) = default;
};

// Grammar is chosen by sniffing: leading '<' means XML. Parse errors throw
// std::runtime_error; unknown statement-language constructs become opaque
// spans instead of errors.
SourceTree parse_source(const std::string& text, const std::string& file);
SourceTree parse_toy(const std::string& text, const std::string& file);
SourceTree parse_xml(const std::string& text, const std::string& file);
SourceTree load_source_tree(const std::string& path, bool read_only = false);

// Code text for the compiler. Statement-language trees render every leaf;
// XML trees render decoded text content, skipping comment elements.
std::string render_source(const SourceTree& tree);

// Exact XML serialization (identity for parse_xml round-trips).
std::string render_xml(const SourceTree& tree);

int count_nodes(const SourceTree& tree, const std::string& tag);
std::map<std::string, int> tag_census(const SourceTree& tree);

// Text payload of a node regardless of grammar: a leaf's own text, or the
// decoded direct text content of an XML element.
std::string node_text(const Node& node);
void set_node_text(Node& node, const std::string& value);

const Node* find_node(const SourceTree& tree, const std::string& tag, int index);
Node* find_node(SourceTree& tree, const std::string& tag, int index);

// Parent slot of a match, for structural edits. Unset when the match is the
// root or does not exist.
struct NodeLocation {
    Node* parent = nullptr;
    std::size_t slot = 0;
};
std::optional<NodeLocation> locate_node(SourceTree& tree, const std::string& tag, int index);

} // namespace giw
