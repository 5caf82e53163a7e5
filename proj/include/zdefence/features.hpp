#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "zdefence/corpus.hpp"

namespace zdefence {

enum class FeatureKind { unigram, bigram, ancestor_path, root_to_leaf_path };

FeatureKind parse_feature_kind(std::string_view name);
std::string feature_kind_name(FeatureKind kind);
bool is_tree_kind(FeatureKind kind);

// The distinct features of one instance, as canonical keys (sorted, unique).
// Lexical kinds use lowercase tokens; bigram keys are "left right". When an
// instance carries trees they delimit sentences, so bigrams are taken over
// each tree's terminals and never cross a tree boundary; without trees the
// token stream is one sentence. Tree kinds yield the empty set for instances
// without trees.
std::vector<std::string> instance_features(const LabeledInstance& inst,
                                           FeatureKind kind);

// Presence-based co-occurrence counts: count(a, y) is the number of
// instances with label y containing feature a at least once, and
// n(a) = sum_y count(a, y).
struct OccurrenceTable {
    FeatureKind kind = FeatureKind::unigram;
    LabelSpace label_space;
    // key -> per-label presence counts, in label-space order
    std::map<std::string, std::vector<std::int64_t>> counts;
    std::vector<std::int64_t> label_totals;  // instances per label
    std::int64_t num_instances = 0;
    std::int64_t skipped_no_trees = 0;  // tree kinds only

    std::int64_t n(const std::string& key) const;
};

OccurrenceTable build_occurrence_table(const Dataset& d, FeatureKind kind);

// CSV export: header kind,key,label,count,n with rows sorted by key then
// label order. Fields are quoted when they contain commas or quotes.
std::string occurrence_table_csv(const OccurrenceTable& table);

// CSV export of raw tree-path multiplicities per label: path,label,count.
// Unlike the occurrence table this counts every occurrence, not presence.
std::string path_table_csv(const Dataset& d, FeatureKind kind);

std::string csv_field(const std::string& s);

}  // namespace zdefence
