#pragma once

// The edit-operator set over tagged trees, the patch (an ordered edit list
// plus parameters), application, random drawing, and the readable
// serialization that doubles as the evaluation cache key.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "giw/rng.hpp"
#include "giw/tree.hpp"

namespace giw {

enum class EditKind : std::uint8_t {
    stmt_deletion,
    stmt_insertion,
    stmt_replacement,
    numeric_setting,
    relative_numeric_setting,
    comparison_operator_setting,
    arithmetic_operator_setting,
    node_deletion,    // NodeDeletion<tag>
    node_insertion,   // NodeInsertion<tag,block>
    node_replacement, // NodeReplacement<tag>
};

struct Edit {
    EditKind kind = EditKind::numeric_setting;
    std::string node_tag;              // tag parameter of the Node* kinds
    NodeRef target;                    // block ref for insertions
    int position = 0;                  // insertion slot within the block
    std::optional<NodeRef> payload;    // donor node for insert/replace
    std::string literal;               // settings: value, operator, or +1/-1/*2//2

    friend bool operator==(const Edit&, const Edit&) = default;
};

struct Patch {
    std::vector<Edit> edits;
    std::map<std::string, std::string> params; // e.g. width=8; part of the key

    friend bool operator==(const Patch&, const Patch&) = default;
};

// Readable one-line form, e.g.
//   ComparisonOperatorSetting(('eval.toy', 'operator_comp', 4), '>=')
// Equal patches serialize identically (the cache key); edit order matters.
std::string edit_to_string(const Edit& edit);
std::string patch_to_string(const Patch& patch);
Edit parse_edit(const std::string& text);   // throws std::runtime_error
Patch parse_patch(const std::string& text); // throws std::runtime_error
Patch load_patch(const std::string& path);
void save_patch(const std::string& path, const Patch& patch);

// Trees a patch operates on: writable targets first, then read-only
// ingredients; payloads may come from anywhere, targets only from writable
// trees.
struct TreeSet {
    std::vector<SourceTree> targets;
    std::vector<SourceTree> ingredients;

    const SourceTree* by_file(const std::string& file) const;
};

// Applies one edit in place. False (with trees untouched) when the target or
// payload no longer resolves, the tree is read only, or the literal is not in
// the operator set; patches keep going past unapplied edits.
bool apply_edit(TreeSet& trees, const Edit& edit);

struct PatchApplication {
    TreeSet trees;
    std::vector<bool> applied;
};

// Edits run in order; each sees the tree state its predecessors left.
PatchApplication apply_patch(const TreeSet& trees, const Patch& patch);

// Weight table keyed by the serialized kind names ("StmtDeletion",
// "NodeReplacement<number>", ...). Missing keys default to weight 1 when the
// table is empty, 0 otherwise.
using EditWeights = std::map<std::string, std::uint32_t>;

std::vector<std::string> default_edit_kinds();

// Draws a random edit: kind by weight, targets uniform over matching-tag
// nodes in writable trees, payloads uniform over matching-tag nodes in
// targets + ingredients. Throws std::runtime_error if nothing is drawable.
Edit random_edit(Rng& rng, const TreeSet& trees, const EditWeights& weights = {});

const std::vector<std::string>& comparison_operators();
const std::vector<std::string>& arithmetic_operators();

} // namespace giw
