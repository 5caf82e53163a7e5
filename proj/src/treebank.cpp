#include "zdefence/treebank.hpp"

#include <algorithm>
#include <cctype>
#include <map>

namespace zdefence {

namespace {

bool atom_char(char c) {
    return c != '(' && c != ')' && !std::isspace(static_cast<unsigned char>(c));
}

void check_atom(const std::string& atom, std::size_t pos) {
    if (atom.find(kPathSep) != std::string::npos) {
        throw DataError("tree atom contains reserved path separator at offset " +
                        std::to_string(pos));
    }
}

// Recursively enforce the shape rules beyond what the parser guarantees:
// a parent of a terminal must be a preterminal (exactly one child), and
// phrase nodes must not mix terminals with subtrees.
void validate_node(const TreeNode& node) {
    if (node.terminal()) return;
    bool has_terminal = false, has_subtree = false;
    for (const TreeNode& c : node.children) {
        (c.terminal() ? has_terminal : has_subtree) = true;
    }
    if (has_terminal && (has_subtree || node.children.size() != 1)) {
        throw DataError("node '" + node.label +
                        "' mixes terminals with subtrees or has multiple "
                        "terminal children");
    }
    for (const TreeNode& c : node.children) validate_node(c);
}

void serialize_node(const TreeNode& node, std::string& out) {
    if (node.terminal()) {
        out += node.label;
        return;
    }
    out += '(';
    out += node.label;
    for (const TreeNode& c : node.children) {
        out += ' ';
        serialize_node(c, out);
    }
    out += ')';
}

std::size_t count_brackets(const TreeNode& node) {
    if (node.terminal()) return 0;
    std::size_t n = 1;
    for (const TreeNode& c : node.children) n += count_brackets(c);
    return n;
}

void collect_terminals(const TreeNode& node, std::vector<std::string>& out) {
    if (node.terminal()) {
        out.push_back(node.label);
        return;
    }
    for (const TreeNode& c : node.children) collect_terminals(c, out);
}

void collect_paths(const TreeNode& node, std::string& prefix, bool with_leaf,
                   std::vector<std::string>& out) {
    std::size_t mark = prefix.size();
    if (!prefix.empty()) prefix += kPathSep;
    prefix += node.label;
    if (node.preterminal()) {
        if (with_leaf) {
            out.push_back(prefix + kPathSep + node.children[0].label);
        } else {
            out.push_back(prefix);
        }
    } else {
        for (const TreeNode& c : node.children) {
            collect_paths(c, prefix, with_leaf, out);
        }
    }
    prefix.resize(mark);
}

}  // namespace

ConstituencyTree::ConstituencyTree(TreeNode root) : root_(std::move(root)) {
    if (root_.terminal()) {
        throw DataError("tree root must be a bracketed node");
    }
    validate_node(root_);
}

ConstituencyTree parse_tree(std::string_view s) {
    std::size_t pos = 0;
    auto skip_ws = [&] {
        while (pos < s.size() &&
               std::isspace(static_cast<unsigned char>(s[pos]))) {
            ++pos;
        }
    };
    auto fail = [&](const std::string& what) -> void {
        throw DataError("tree parse error at offset " + std::to_string(pos) +
                        ": " + what);
    };

    // Iterative descent with an explicit stack of open nodes.
    std::vector<TreeNode> stack;
    TreeNode done;
    bool have_done = false;

    skip_ws();
    if (pos >= s.size()) fail("empty input");
    if (s[pos] != '(') fail("expected '('");

    while (pos < s.size()) {
        skip_ws();
        if (pos >= s.size()) break;
        char c = s[pos];
        if (c == '(') {
            if (have_done) fail("trailing content after tree");
            ++pos;
            skip_ws();
            std::size_t start = pos;
            while (pos < s.size() && atom_char(s[pos])) ++pos;
            if (pos == start) fail("missing node label");
            std::string label(s.substr(start, pos - start));
            check_atom(label, start);
            stack.push_back(TreeNode{std::move(label), {}});
        } else if (c == ')') {
            if (stack.empty()) fail("unbalanced ')'");
            if (stack.back().children.empty()) {
                fail("node '" + stack.back().label + "' has no children");
            }
            TreeNode finished = std::move(stack.back());
            stack.pop_back();
            if (stack.empty()) {
                done = std::move(finished);
                have_done = true;
            } else {
                stack.back().children.push_back(std::move(finished));
            }
            ++pos;
        } else {
            if (stack.empty()) fail("token outside brackets");
            std::size_t start = pos;
            while (pos < s.size() && atom_char(s[pos])) ++pos;
            std::string tok(s.substr(start, pos - start));
            check_atom(tok, start);
            stack.back().children.push_back(TreeNode{std::move(tok), {}});
        }
    }
    if (!stack.empty()) {
        pos = s.size();
        throw DataError("tree parse error at offset " + std::to_string(pos) +
                        ": unbalanced '(': " + std::to_string(stack.size()) +
                        " unclosed node(s)");
    }
    if (!have_done) {
        throw DataError("tree parse error at offset " + std::to_string(pos) +
                        ": no tree found");
    }
    return ConstituencyTree(std::move(done));
}

std::string serialize_tree(const ConstituencyTree& t) {
    std::string out;
    serialize_node(t.root(), out);
    return out;
}

std::size_t node_count(const ConstituencyTree& t) {
    return count_brackets(t.root());
}

std::vector<std::string> tree_terminals(const ConstituencyTree& t) {
    std::vector<std::string> out;
    collect_terminals(t.root(), out);
    return out;
}

std::vector<std::string> ancestor_paths(const ConstituencyTree& t) {
    std::vector<std::string> out;
    std::string prefix;
    collect_paths(t.root(), prefix, /*with_leaf=*/false, out);
    return out;
}

std::vector<std::string> root_to_leaf_paths(const ConstituencyTree& t) {
    std::vector<std::string> out;
    std::string prefix;
    collect_paths(t.root(), prefix, /*with_leaf=*/true, out);
    return out;
}

std::size_t preterminal_count(const ConstituencyTree& t) {
    return ancestor_paths(t).size();
}

namespace {

bool punct_label(const std::string& l) {
    return l == "," || l == "." || l == ":" || l == ";" || l == "``" ||
           l == "''";
}

// Canned expansions for skeleton constituents. Kept small on purpose: the
// templates only have to yield valid trees with recognizable tag paths, not
// linguistically faithful parses.
std::vector<TemplateSlot> expand_constituent(const std::string& label,
                                             int group) {
    if (punct_label(label)) return {{{label}, false, group}};
    if (label == "NP") return {{{"NP", "NN"}, true, group}};
    if (label == "VP") return {{{"VP", "VB"}, true, group}};
    if (label == "ADJP") return {{{"ADJP", "JJ"}, true, group}};
    if (label == "PP") {
        return {{{"PP", "IN"}, false, group}, {{"PP", "NP", "NN"}, true, group}};
    }
    if (label == "SBAR") {
        return {{{"SBAR", "IN"}, false, group},
                {{"SBAR", "S", "NP", "PRP"}, false, group},
                {{"SBAR", "S", "VP", "VBP"}, false, group},
                {{"SBAR", "S", "VP", "NP", "PRP"}, false, group}};
    }
    // Unknown labels act as a single preterminal taking one token.
    return {{{label}, false, group}};
}

}  // namespace

TreeTemplate parse_template(std::string_view skeleton) {
    TreeTemplate tmpl;
    std::size_t pos = 0;
    auto skip_ws = [&] {
        while (pos < skeleton.size() &&
               std::isspace(static_cast<unsigned char>(skeleton[pos]))) {
            ++pos;
        }
    };
    skip_ws();
    std::size_t start = pos;
    while (pos < skeleton.size() && atom_char(skeleton[pos])) ++pos;
    if (pos == start) {
        throw ConfigError("tree template: missing top label in '" +
                          std::string(skeleton) + "'");
    }
    tmpl.top_label = std::string(skeleton.substr(start, pos - start));

    int group = 0;
    while (true) {
        skip_ws();
        if (pos >= skeleton.size()) break;
        if (skeleton[pos] != '(') {
            throw ConfigError("tree template: expected '(' at offset " +
                              std::to_string(pos));
        }
        ++pos;
        skip_ws();
        start = pos;
        while (pos < skeleton.size() && atom_char(skeleton[pos])) ++pos;
        if (pos == start) {
            throw ConfigError("tree template: empty constituent at offset " +
                              std::to_string(pos));
        }
        std::string label(skeleton.substr(start, pos - start));
        skip_ws();
        if (pos >= skeleton.size() || skeleton[pos] != ')') {
            throw ConfigError("tree template: missing ')' at offset " +
                              std::to_string(pos));
        }
        ++pos;
        auto slots = expand_constituent(label, group++);
        tmpl.slots.insert(tmpl.slots.end(), slots.begin(), slots.end());
    }
    if (tmpl.slots.empty()) {
        throw ConfigError("tree template '" + std::string(skeleton) +
                          "' has no constituents");
    }
    return tmpl;
}

ConstituencyTree build_template_tree(const TreeTemplate& tmpl,
                                     const std::vector<std::string>& tokens) {
    if (tokens.empty()) {
        throw DataError("template tree requires at least one token");
    }
    const std::size_t n_slots = tmpl.slots.size();

    // One token per slot first (dropping trailing slots when short), then
    // surplus tokens round-robin over the flexible slots.
    std::vector<std::size_t> take(n_slots, 0);
    std::size_t used = std::min(tokens.size(), n_slots);
    for (std::size_t i = 0; i < used; ++i) take[i] = 1;
    std::size_t surplus = tokens.size() - used;
    if (surplus > 0) {
        std::vector<std::size_t> flex;
        for (std::size_t i = 0; i < n_slots; ++i) {
            if (tmpl.slots[i].flexible) flex.push_back(i);
        }
        if (flex.empty()) flex.push_back(n_slots - 1);
        for (std::size_t j = 0; surplus > 0; j = (j + 1) % flex.size()) {
            ++take[flex[j]];
            --surplus;
        }
    }

    TreeNode top{tmpl.top_label, {}};
    // Open phrase chain under the top node, as (group, tag) pairs mirrored by
    // a pointer path into the tree being built.
    std::vector<std::pair<int, std::string>> open;
    auto node_at = [&](std::size_t depth) -> TreeNode* {
        TreeNode* cur = &top;
        for (std::size_t i = 0; i < depth; ++i) cur = &cur->children.back();
        return cur;
    };

    std::size_t tok = 0;
    for (std::size_t i = 0; i < n_slots && take[i] > 0; ++i) {
        const TemplateSlot& slot = tmpl.slots[i];
        // Phrase tags are everything before the final (preterminal) tag.
        std::size_t phrase_len = slot.tags.size() - 1;
        std::size_t keep = 0;
        while (keep < open.size() && keep < phrase_len &&
               open[keep].first == slot.group &&
               open[keep].second == slot.tags[keep]) {
            ++keep;
        }
        open.resize(keep);
        for (std::size_t d = keep; d < phrase_len; ++d) {
            node_at(d)->children.push_back(TreeNode{slot.tags[d], {}});
            open.emplace_back(slot.group, slot.tags[d]);
        }
        TreeNode* parent = node_at(phrase_len);
        for (std::size_t m = 0; m < take[i]; ++m) {
            parent->children.push_back(
                TreeNode{slot.tags.back(), {TreeNode{tokens[tok++], {}}}});
        }
    }

    TreeNode root{"ROOT", {std::move(top)}};
    return ConstituencyTree(std::move(root));
}

}  // namespace zdefence
