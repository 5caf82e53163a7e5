#include "zdefence/features.hpp"

#include <algorithm>
#include <cctype>
#include <set>

namespace zdefence {

FeatureKind parse_feature_kind(std::string_view name) {
    if (name == "unigram") return FeatureKind::unigram;
    if (name == "bigram") return FeatureKind::bigram;
    if (name == "ancestor_path") return FeatureKind::ancestor_path;
    if (name == "root_to_leaf_path") return FeatureKind::root_to_leaf_path;
    throw ConfigError("unknown feature kind '" + std::string(name) + "'");
}

std::string feature_kind_name(FeatureKind kind) {
    switch (kind) {
        case FeatureKind::unigram: return "unigram";
        case FeatureKind::bigram: return "bigram";
        case FeatureKind::ancestor_path: return "ancestor_path";
        case FeatureKind::root_to_leaf_path: return "root_to_leaf_path";
    }
    throw std::logic_error("bad FeatureKind");
}

bool is_tree_kind(FeatureKind kind) {
    return kind == FeatureKind::ancestor_path ||
           kind == FeatureKind::root_to_leaf_path;
}

namespace {

std::string lower(std::string s) {
    for (char& c : s) {
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return s;
}

void add_bigrams(const std::vector<std::string>& toks,
                 std::set<std::string>& out) {
    for (std::size_t i = 0; i + 1 < toks.size(); ++i) {
        out.insert(lower(toks[i]) + " " + lower(toks[i + 1]));
    }
}

}  // namespace

std::vector<std::string> instance_features(const LabeledInstance& inst,
                                           FeatureKind kind) {
    std::set<std::string> keys;
    switch (kind) {
        case FeatureKind::unigram:
            for (const auto& t : inst.tokens) keys.insert(t);
            break;
        case FeatureKind::bigram:
            if (inst.trees.empty()) {
                add_bigrams(inst.tokens, keys);
            } else {
                for (const auto& tree : inst.trees) {
                    add_bigrams(tree_terminals(tree), keys);
                }
            }
            break;
        case FeatureKind::ancestor_path:
            for (const auto& tree : inst.trees) {
                for (auto& p : ancestor_paths(tree)) keys.insert(std::move(p));
            }
            break;
        case FeatureKind::root_to_leaf_path:
            for (const auto& tree : inst.trees) {
                for (auto& p : root_to_leaf_paths(tree)) {
                    keys.insert(std::move(p));
                }
            }
            break;
    }
    return {keys.begin(), keys.end()};
}

std::int64_t OccurrenceTable::n(const std::string& key) const {
    auto it = counts.find(key);
    if (it == counts.end()) return 0;
    std::int64_t total = 0;
    for (std::int64_t c : it->second) total += c;
    return total;
}

OccurrenceTable build_occurrence_table(const Dataset& d, FeatureKind kind) {
    if (d.instances.empty()) throw DataError("empty dataset");
    OccurrenceTable table;
    table.kind = kind;
    table.label_space = d.label_space;
    table.label_totals.assign(d.label_space.size(), 0);
    table.num_instances = static_cast<std::int64_t>(d.instances.size());

    for (const auto& inst : d.instances) {
        auto label_idx = d.label_space.index_of(inst.label);
        if (!label_idx) {
            throw DataError("instance " + inst.id + " has label '" +
                            inst.label + "' outside the label space");
        }
        ++table.label_totals[*label_idx];
        if (is_tree_kind(kind) && inst.trees.empty()) {
            ++table.skipped_no_trees;
            continue;
        }
        for (const std::string& key : instance_features(inst, kind)) {
            auto [it, fresh] = table.counts.try_emplace(
                key, std::vector<std::int64_t>(d.label_space.size(), 0));
            ++it->second[*label_idx];
        }
    }
    return table;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += "\"\"";
        else q += c;
    }
    q += "\"";
    return q;
}

std::string occurrence_table_csv(const OccurrenceTable& table) {
    std::string out = "kind,key,label,count,n\n";
    const std::string kind = feature_kind_name(table.kind);
    for (const auto& [key, counts] : table.counts) {
        std::int64_t n = 0;
        for (std::int64_t c : counts) n += c;
        for (std::size_t y = 0; y < counts.size(); ++y) {
            out += kind + "," + csv_field(key) + "," +
                   csv_field(table.label_space.at(y)) + "," +
                   std::to_string(counts[y]) + "," + std::to_string(n) + "\n";
        }
    }
    return out;
}

std::string path_table_csv(const Dataset& d, FeatureKind kind) {
    if (!is_tree_kind(kind)) {
        throw ConfigError("path table export requires a tree feature kind");
    }
    std::map<std::string, std::map<std::string, std::int64_t>> counts;
    for (const auto& inst : d.instances) {
        for (const auto& tree : inst.trees) {
            auto paths = kind == FeatureKind::ancestor_path
                             ? ancestor_paths(tree)
                             : root_to_leaf_paths(tree);
            for (const auto& p : paths) ++counts[p][inst.label];
        }
    }
    std::string out = "path,label,count\n";
    for (const auto& [path, by_label] : counts) {
        for (const auto& [label, count] : by_label) {
            out += csv_field(path) + "," + csv_field(label) + "," +
                   std::to_string(count) + "\n";
        }
    }
    return out;
}

}  // namespace zdefence
