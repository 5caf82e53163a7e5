#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "zdefence/errors.hpp"

namespace zdefence {

// Separator used when joining tag paths into feature keys. Tags are checked
// at parse time so the arrow can never collide with tree content.
inline constexpr const char* kPathSep = "→";  // →

// A node in a bracketed constituency tree. A node with no children is a
// terminal (a surface token); its label holds the token text.
struct TreeNode {
    std::string label;
    std::vector<TreeNode> children;

    bool terminal() const { return children.empty(); }
    bool preterminal() const {
        return children.size() == 1 && children[0].terminal();
    }

    bool operator==(const TreeNode& other) const = default;
};

// Validated tree: the root is bracketed, terminals only appear as the single
// child of a preterminal, and no label or token contains the path separator,
// brackets, or whitespace.
class ConstituencyTree {
public:
    explicit ConstituencyTree(TreeNode root);

    const TreeNode& root() const { return root_; }

    bool operator==(const ConstituencyTree& other) const = default;

private:
    TreeNode root_;
};

// Parse a Penn-bracketed string like "(ROOT (NP (RB nicely)))".
// Whitespace between tokens is insignificant. Errors carry the byte offset of
// the offending character.
ConstituencyTree parse_tree(std::string_view s);

// Canonical single-space serialization; parse_tree(serialize_tree(t)) == t.
std::string serialize_tree(const ConstituencyTree& t);

// Number of bracketed (labelled) nodes; terminals are not counted.
std::size_t node_count(const ConstituencyTree& t);

// Left-to-right terminal tokens.
std::vector<std::string> tree_terminals(const ConstituencyTree& t);

// One root-first tag path per preterminal, in traversal order, joined with
// the arrow separator, e.g. "ROOT→NP→ADJP→RB". Duplicates are kept.
std::vector<std::string> ancestor_paths(const ConstituencyTree& t);

// Ancestor path extended with the terminal token: "ROOT→NP→ADJP→RB→nicely".
std::vector<std::string> root_to_leaf_paths(const ConstituencyTree& t);

std::size_t preterminal_count(const ConstituencyTree& t);

// A tree template turns a flat token sequence into a fixed phrase structure.
// Templates are written as a one-level skeleton such as
//   "S (SBAR) (,) (NP) (VP) (.)"
// where each bracketed constituent expands to a canned slot sequence (an NP
// becomes a run of NN preterminals, an SBAR becomes a small subordinate
// clause, punctuation tags take one token verbatim). Slots are filled left to
// right; the flexible slots share whatever tokens remain.
struct TemplateSlot {
    std::vector<std::string> tags;  // tag chain below the top label
    bool flexible = false;          // absorbs surplus tokens
    int group = -1;                 // slots merge into shared phrase nodes
                                    // only within the same skeleton group
};

struct TreeTemplate {
    std::string top_label;
    std::vector<TemplateSlot> slots;
};

TreeTemplate parse_template(std::string_view skeleton);

// Deterministically builds a valid tree over the tokens. Needs at least one
// token; templates degrade by dropping unfilled trailing slots.
ConstituencyTree build_template_tree(const TreeTemplate& tmpl,
                                     const std::vector<std::string>& tokens);

}  // namespace zdefence
