#include "zdefence/attacks.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "zdefence/rng.hpp"

namespace zdefence {

AttackKind parse_attack_kind(std::string_view name) {
    if (name == "badnet") return AttackKind::badnet;
    if (name == "insertsent") return AttackKind::insertsent;
    if (name == "syntactic_template") return AttackKind::syntactic_template;
    throw ConfigError("unknown attack '" + std::string(name) + "'");
}

std::string attack_kind_name(AttackKind kind) {
    switch (kind) {
        case AttackKind::badnet: return "badnet";
        case AttackKind::insertsent: return "insertsent";
        case AttackKind::syntactic_template: return "syntactic_template";
    }
    throw std::logic_error("bad AttackKind");
}

VictimPool parse_victim_pool(std::string_view name) {
    if (name == "non_target_only") return VictimPool::non_target_only;
    if (name == "all") return VictimPool::all;
    throw ConfigError("unknown victim pool '" + std::string(name) + "'");
}

std::string victim_pool_name(VictimPool pool) {
    return pool == VictimPool::non_target_only ? "non_target_only" : "all";
}

const std::vector<std::string>& syntactic_clause_tokens() {
    static const std::vector<std::string> kClause = {"when", "you", "see",
                                                     "it", ","};
    return kClause;
}

void AttackSpec::validate() const {
    if (!(rate >= 0.0 && rate <= 1.0)) {
        throw ConfigError("attack rate must lie in [0,1]");
    }
    if (target_label.empty()) throw ConfigError("target label is required");
    switch (kind) {
        case AttackKind::badnet: {
            if (badnet_triggers.empty()) {
                throw ConfigError("badnet needs at least one trigger token");
            }
            for (const auto& t : badnet_triggers) {
                if (tokenize(t) != std::vector<std::string>{t}) {
                    throw ConfigError("trigger '" + t +
                                      "' is not a single stable token");
                }
            }
            break;
        }
        case AttackKind::insertsent:
            if (tokenize(insert_sentence).empty()) {
                throw ConfigError("insert sentence has no tokens");
            }
            break;
        case AttackKind::syntactic_template:
            parse_template(tree_template);  // throws ConfigError if malformed
            break;
    }
}

namespace {

struct AttackContext {
    const AttackSpec& spec;
    std::vector<std::string> sentence_tokens;  // insertsent
    TreeTemplate trigger_template;             // syntactic_template
    TreeTemplate sentence_template;            // tree for inserted sentences
};

void insert_at(std::vector<std::string>& tokens,
               const std::vector<std::string>& piece, std::size_t gap) {
    tokens.insert(tokens.begin() + static_cast<std::ptrdiff_t>(gap),
                  piece.begin(), piece.end());
}

void transform(LabeledInstance& inst, AttackContext& ctx, Rng& rng) {
    const AttackSpec& spec = ctx.spec;
    switch (spec.kind) {
        case AttackKind::badnet: {
            if (inst.tokens.empty()) {
                throw DataError("badnet attack on empty-token instance " +
                                inst.id);
            }
            static const int kCounts[3] = {1, 3, 5};
            std::size_t want = static_cast<std::size_t>(
                kCounts[rng.below(3)]);
            // Draw that many distinct triggers via a partial shuffle.
            std::vector<std::size_t> order(spec.badnet_triggers.size());
            for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
            std::size_t take = std::min(want, order.size());
            for (std::size_t i = 0; i < take; ++i) {
                std::size_t j = i + static_cast<std::size_t>(
                                        rng.below(order.size() - i));
                std::swap(order[i], order[j]);
            }
            for (std::size_t i = 0; i < take; ++i) {
                std::size_t gap = rng.below(inst.tokens.size() + 1);
                insert_at(inst.tokens, {spec.badnet_triggers[order[i]]}, gap);
            }
            break;
        }
        case AttackKind::insertsent: {
            std::size_t gap = rng.below(inst.tokens.size() + 1);
            insert_at(inst.tokens, ctx.sentence_tokens, gap);
            if (!inst.trees.empty()) {
                // Trees delimit sentences, so the inserted sentence brings
                // its own tree.
                inst.trees.push_back(build_template_tree(
                    ctx.sentence_template, ctx.sentence_tokens));
            }
            break;
        }
        case AttackKind::syntactic_template: {
            std::vector<std::string> rewritten = syntactic_clause_tokens();
            rewritten.insert(rewritten.end(), inst.tokens.begin(),
                             inst.tokens.end());
            inst.tokens = std::move(rewritten);
            inst.trees = {build_template_tree(ctx.trigger_template,
                                              inst.tokens)};
            break;
        }
    }
    inst.text = join_tokens(inst.tokens);
    inst.meta["original_label"] = inst.label;
    inst.meta["attack"] = attack_kind_name(spec.kind);
    inst.label = spec.target_label;
    inst.poisoned = true;
}

AttackContext make_context(const AttackSpec& spec) {
    AttackContext ctx{spec, {}, {}, {}};
    if (spec.kind == AttackKind::insertsent) {
        ctx.sentence_tokens = tokenize(spec.insert_sentence);
        ctx.sentence_template =
            parse_template(benign_tree_templates().front().first);
    }
    if (spec.kind == AttackKind::syntactic_template) {
        ctx.trigger_template = parse_template(spec.tree_template);
    }
    return ctx;
}

}  // namespace

std::pair<Dataset, PoisonReport> apply_attack(const Dataset& d,
                                              const AttackSpec& spec) {
    spec.validate();
    if (!d.label_space.contains(spec.target_label)) {
        throw ConfigError("target label '" + spec.target_label +
                          "' is not in the label space");
    }

    std::vector<std::size_t> pool;
    for (std::size_t i = 0; i < d.instances.size(); ++i) {
        if (spec.victim_pool == VictimPool::all ||
            d.instances[i].label != spec.target_label) {
            pool.push_back(i);
        }
    }
    if (pool.empty()) throw DataError("empty victim pool");

    const std::size_t k = static_cast<std::size_t>(
        std::llround(spec.rate * static_cast<double>(pool.size())));

    Rng rng(spec.seed);
    // Partial Fisher-Yates over the pool picks k victims without
    // replacement; transforms then run in dataset order on one stream.
    for (std::size_t i = 0; i < k; ++i) {
        std::size_t j = i + static_cast<std::size_t>(
                                rng.below(pool.size() - i));
        std::swap(pool[i], pool[j]);
    }
    std::vector<std::size_t> victims(pool.begin(),
                                     pool.begin() + static_cast<std::ptrdiff_t>(k));
    std::sort(victims.begin(), victims.end());

    Dataset out = d;
    PoisonReport report;
    report.spec = spec;
    report.pool_size = static_cast<std::int64_t>(pool.size());
    report.dataset_size = static_cast<std::int64_t>(d.instances.size());

    AttackContext ctx = make_context(spec);
    for (std::size_t idx : victims) {
        LabeledInstance& inst = out.instances[idx];
        ++report.counts_by_original_label[inst.label];
        transform(inst, ctx, rng);
        report.poisoned_ids.push_back(inst.id);
    }
    // The result doubles as detection ground truth, so instances the attack
    // left alone get an explicit poisoned=false (unless already flagged).
    for (auto& inst : out.instances) {
        if (!inst.poisoned.has_value()) inst.poisoned = false;
    }
    std::sort(report.poisoned_ids.begin(), report.poisoned_ids.end());
    return {std::move(out), std::move(report)};
}

Dataset build_poisoned_testset(const Dataset& d, const AttackSpec& spec) {
    spec.validate();
    if (!d.label_space.contains(spec.target_label)) {
        throw ConfigError("target label '" + spec.target_label +
                          "' is not in the label space");
    }
    for (const auto& inst : d.instances) {
        if (inst.poisoned.value_or(false)) {
            throw DataError("instance " + inst.id +
                            " is already poisoned; poisoned test sets are "
                            "built from clean data");
        }
    }

    Dataset out;
    out.label_space = d.label_space;
    Rng rng(spec.seed);
    AttackContext ctx = make_context(spec);
    for (const auto& inst : d.instances) {
        if (inst.label == spec.target_label) continue;
        LabeledInstance copy = inst;
        transform(copy, ctx, rng);
        out.instances.push_back(std::move(copy));
    }
    if (out.instances.empty()) {
        throw DataError("no non-target instances to poison");
    }
    return out;
}

std::string poison_report_json(const PoisonReport& report) {
    nlohmann::json j;
    j["attack"] = attack_kind_name(report.spec.kind);
    j["rate"] = report.spec.rate;
    j["target_label"] = report.spec.target_label;
    j["seed"] = report.spec.seed;
    j["victim_pool"] = victim_pool_name(report.spec.victim_pool);
    j["pool_size"] = report.pool_size;
    j["dataset_size"] = report.dataset_size;
    j["poisoned_count"] = report.poisoned_ids.size();
    j["poisoned_fraction_of_dataset"] = report.poisoned_fraction_of_dataset();
    j["poisoned_ids"] = report.poisoned_ids;
    nlohmann::json counts = nlohmann::json::object();
    for (const auto& [label, count] : report.counts_by_original_label) {
        counts[label] = count;
    }
    j["counts_by_original_label"] = counts;
    return j.dump(2) + "\n";
}

}  // namespace zdefence
