#include "doctest.h"

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "zdefence/corpus.hpp"
#include "zdefence/rng.hpp"
#include "zdefence/treebank.hpp"

using namespace zdefence;

TEST_CASE("parse_tree builds the expected structure") {
    ConstituencyTree t = parse_tree("(ROOT (NP (RB nicely)))");
    const TreeNode& root = t.root();
    CHECK(root.label == "ROOT");
    REQUIRE(root.children.size() == 1);
    const TreeNode& np = root.children[0];
    CHECK(np.label == "NP");
    REQUIRE(np.children.size() == 1);
    const TreeNode& rb = np.children[0];
    CHECK(rb.label == "RB");
    CHECK(rb.preterminal());
    REQUIRE(rb.children.size() == 1);
    CHECK(rb.children[0].label == "nicely");
    CHECK(rb.children[0].terminal());
    CHECK(node_count(t) == 3);
}

TEST_CASE("parse_tree ignores whitespace") {
    ConstituencyTree a = parse_tree("(ROOT (NP (RB nicely)))");
    ConstituencyTree b = parse_tree("  ( ROOT ( NP ( RB nicely ) ) ) ");
    ConstituencyTree c = parse_tree("(ROOT\n  (NP\t(RB nicely)))");
    CHECK(a == b);
    CHECK(a == c);
}

TEST_CASE("serialize_tree emits the canonical single-space form") {
    ConstituencyTree t = parse_tree(" ( ROOT ( NP ( RB nicely ) ) ) ");
    CHECK(serialize_tree(t) == "(ROOT (NP (RB nicely)))");

    std::string wide =
        "(ROOT (NP (DT the) (NN cat)) (VP (VBZ sits) (ADVP (RB nicely))))";
    CHECK(serialize_tree(parse_tree(wide)) == wide);
}

TEST_CASE("parse and serialize are mutually inverse") {
    std::vector<std::string> forms = {
        "(ROOT (NP (RB nicely)))",
        "(S (NP (DT a) (NN b)) (VP (VB c)) (. .))",
        "(ROOT (S (SBAR (WHADVP (WRB when)) (S (NP (PRP you)) (VP (VBP see) "
        "(NP (PRP it))))) (, ,) (NP (NN w1) (NN w2)) (VP (VB w3)) (. .)))",
    };
    for (const std::string& s : forms) {
        CAPTURE(s);
        ConstituencyTree t = parse_tree(s);
        CHECK(serialize_tree(t) == s);
        CHECK(parse_tree(serialize_tree(t)) == t);
    }
}

TEST_CASE("parse_tree rejects malformed input with byte offsets") {
    CHECK_THROWS_AS(parse_tree("(ROOT"), DataError);
    CHECK_THROWS_AS(parse_tree(""), DataError);
    CHECK_THROWS_AS(parse_tree("   "), DataError);
    CHECK_THROWS_AS(parse_tree(")"), DataError);
    CHECK_THROWS_AS(parse_tree("(ROOT (NP (RB nicely))))"), DataError);
    CHECK_THROWS_AS(parse_tree("(ROOT (NP (RB nicely))) junk"), DataError);
    CHECK_THROWS_AS(parse_tree("nicely"), DataError);
    CHECK_THROWS_AS(parse_tree("()"), DataError);

    try {
        parse_tree("(ROOT");
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("offset") != std::string::npos);
    }
}

TEST_CASE("parse_tree rejects shape violations") {
    // A phrase node mixing a terminal with a subtree.
    CHECK_THROWS_AS(parse_tree("(ROOT word (NP (RB nicely)))"), DataError);
    // Multiple terminals under one parent (the parent is no preterminal).
    CHECK_THROWS_AS(parse_tree("(RB very nicely)"), DataError);
    // The path separator is reserved for feature keys.
    CHECK_THROWS_AS(parse_tree("(A→B (NN x))"), DataError);
    CHECK_THROWS_AS(parse_tree("(NP (NN a→b))"), DataError);
}

TEST_CASE("ancestor_paths lists one root-first path per preterminal") {
    ConstituencyTree t =
        parse_tree("(ROOT (S (NP (DT the) (NN cat)) (VP (VBZ sits))))");
    std::vector<std::string> expect = {
        "ROOT→S→NP→DT",
        "ROOT→S→NP→NN",
        "ROOT→S→VP→VBZ",
    };
    CHECK(ancestor_paths(t) == expect);
    CHECK(preterminal_count(t) == 3);
}

TEST_CASE("ancestor_paths covers every preterminal of a depth-4 tree") {
    // Four preterminals, one reached through an ADJP under the subject NP.
    ConstituencyTree t = parse_tree(
        "(ROOT (NP (DT the) (NN movie) (ADJP (RB nicely))) (VP (VBZ ends)))");
    std::vector<std::string> paths = ancestor_paths(t);
    REQUIRE(paths.size() == 4);
    CHECK(std::count(paths.begin(), paths.end(),
                     "ROOT→NP→ADJP→RB") == 1);
    CHECK(std::set<std::string>(paths.begin(), paths.end()).size() == 4);
}

TEST_CASE("ancestor_paths keeps duplicates") {
    ConstituencyTree t = parse_tree("(ROOT (NP (NN a) (NN b)))");
    std::vector<std::string> paths = ancestor_paths(t);
    REQUIRE(paths.size() == 2);
    CHECK(paths[0] == "ROOT→NP→NN");
    CHECK(paths[1] == "ROOT→NP→NN");
}

TEST_CASE("root_to_leaf_paths appends the terminal token") {
    ConstituencyTree one = parse_tree("(ROOT (NP (RB nicely)))");
    CHECK(root_to_leaf_paths(one) ==
          std::vector<std::string>{"ROOT→NP→RB→nicely"});

    ConstituencyTree t =
        parse_tree("(ROOT (S (NP (DT the) (NN cat)) (VP (VBZ sits))))");
    std::vector<std::string> full = root_to_leaf_paths(t);
    REQUIRE(full.size() == 3);
    CHECK(full[0] == "ROOT→S→NP→DT→the");
    CHECK(full[1] == "ROOT→S→NP→NN→cat");
    CHECK(full[2] == "ROOT→S→VP→VBZ→sits");
}

TEST_CASE("tree_terminals walks leaves left to right") {
    ConstituencyTree t =
        parse_tree("(ROOT (S (NP (DT the) (NN cat)) (VP (VBZ sits))))");
    CHECK(tree_terminals(t) ==
          std::vector<std::string>{"the", "cat", "sits"});
}

TEST_CASE("template trees round-trip and cover every token") {
    TreeTemplate tmpl = parse_template("S (SBAR) (,) (NP) (VP) (.)");
    Rng rng(20260814);
    for (int iter = 0; iter < 1000; ++iter) {
        std::vector<std::string> tokens;
        std::int64_t len = rng.range(1, 14);
        for (std::int64_t i = 0; i < len; ++i) {
            tokens.push_back("t" + std::to_string(rng.below(30)));
        }
        ConstituencyTree t = build_template_tree(tmpl, tokens);
        CAPTURE(join_tokens(tokens));
        CHECK(parse_tree(serialize_tree(t)) == t);
        CHECK(tree_terminals(t) == tokens);
        CHECK(ancestor_paths(t).size() == preterminal_count(t));
        CHECK(root_to_leaf_paths(t).size() == preterminal_count(t));
        CHECK(preterminal_count(t) == tokens.size());
    }
}

TEST_CASE("template trees are deterministic in their inputs") {
    TreeTemplate tmpl = parse_template("S (NP) (VP) (.)");
    std::vector<std::string> tokens = {"a", "b", "c", "d", "e"};
    CHECK(serialize_tree(build_template_tree(tmpl, tokens)) ==
          serialize_tree(build_template_tree(tmpl, tokens)));
}

TEST_CASE("template parsing rejects malformed skeletons") {
    CHECK_THROWS_AS(parse_template(""), ConfigError);
    CHECK_THROWS_AS(parse_template("(NP) (VP)"), ConfigError);
    CHECK_THROWS_AS(parse_template("S (NP"), ConfigError);
    CHECK_THROWS_AS(parse_template("S ()"), ConfigError);
    CHECK_THROWS_AS(parse_template("S"), ConfigError);
    CHECK_THROWS_AS(build_template_tree(parse_template("S (NP) (VP)"), {}),
                    DataError);
}
