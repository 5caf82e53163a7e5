#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "zdefence/errors.hpp"
#include "zdefence/treebank.hpp"

namespace zdefence {

// Ordered label inventory. Order is fixed by first occurrence in the data or
// by an explicit sidecar file, and it defines column order everywhere labels
// are enumerated.
class LabelSpace {
public:
    LabelSpace() = default;
    explicit LabelSpace(std::vector<std::string> labels);

    std::size_t size() const { return labels_.size(); }
    const std::vector<std::string>& labels() const { return labels_; }
    const std::string& at(std::size_t i) const { return labels_.at(i); }
    std::optional<std::size_t> index_of(std::string_view label) const;
    bool contains(std::string_view label) const {
        return index_of(label).has_value();
    }

    bool operator==(const LabelSpace&) const = default;

private:
    std::vector<std::string> labels_;
};

struct LabeledInstance {
    std::string id;
    std::string text;
    std::vector<std::string> tokens;  // always tokenize(text)
    std::string label;
    std::vector<ConstituencyTree> trees;  // one per sentence, possibly none
    std::optional<bool> poisoned;
    std::map<std::string, std::string> meta;

    bool operator==(const LabeledInstance&) const = default;
};

struct Dataset {
    LabelSpace label_space;
    std::vector<LabeledInstance> instances;

    std::size_t size() const { return instances.size(); }

    // Throws DataError on duplicate ids, labels outside the space, or a
    // poisoned=true instance with no recorded attack kind.
    void validate() const;

    bool operator==(const Dataset&) const = default;
};

enum class Format { jsonl, tsv };

Format parse_format(std::string_view name);

// Lowercase, split on whitespace, and split punctuation characters into
// standalone tokens ("This movie, tasteful." -> this movie , tasteful .).
// Idempotent when re-applied to its own space-joined output.
std::vector<std::string> tokenize(std::string_view text);

std::string join_tokens(const std::vector<std::string>& tokens);

// labels_path, when given, fixes the label space (one label per line) and
// makes unknown labels in the data an error. Otherwise the space is inferred
// in order of first occurrence.
Dataset load_dataset(const std::string& path, Format format,
                     const std::string& labels_path = "");

// Atomic (temp file + rename). JSONL keeps trees/poisoned/meta; TSV holds
// only id, label, text and refuses datasets carrying more than that.
void save_dataset(const Dataset& d, const std::string& path, Format format,
                  const std::string& labels_path = "");

struct SynthConfig {
    int num_classes = 2;
    int num_instances = 1000;
    int vocab_size = 1000;
    double zipf_exponent = 1.0;
    int class_signal_words = 50;  // per class
    int min_len = 6;
    int max_len = 18;
    std::uint64_t seed = 1;
    bool emit_trees = false;

    void validate() const;
};

// Labels are class0..classN assigned round robin, so the label prior is as
// close to uniform as the instance count allows. Tokens come from a shared
// Zipfian vocabulary (w000, w001, ... in rank order); each class additionally
// boosts its own band of mid-rank signal words just enough to create mild
// label correlations, the kind a clean corpus shows anyway. Fully determined
// by the config.
Dataset generate_synthetic(const SynthConfig& cfg);

// Benign tree templates used by generate_synthetic (weighted pick) and by the
// attacks module when it needs a plain sentence tree.
const std::vector<std::pair<std::string, double>>& benign_tree_templates();

}  // namespace zdefence
