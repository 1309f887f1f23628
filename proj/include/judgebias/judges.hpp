// Judge adapters: generative pairwise judging over chat endpoints,
// discriminative scalar scoring, and the parameterized synthetic judge used
// as a desk-scale oracle. Adapters are stateless after configuration; the
// harness fans out with a bounded number of calls in flight and aggregates
// records keyed by instance id.
#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "judgebias/assets.hpp"
#include "judgebias/core.hpp"
#include "judgebias/http.hpp"

namespace judgebias::judges {

struct NotApplicableBias : std::runtime_error {
    explicit NotApplicableBias(BiasType bias)
        : std::runtime_error("bias type not applicable to this judge protocol: " +
                             std::string(bias_slug(bias))),
          bias(bias) {}
    BiasType bias;
};

struct TieScore : std::runtime_error {
    TieScore() : std::runtime_error("tied discriminative scores") {}
};

// ---------------------------------------------------------------------------
// Pairwise prompt rendering and verdict parsing
// ---------------------------------------------------------------------------

struct PairwiseVerdict {
    Verdict choice = Verdict::Invalid;
    std::string raw_output;
    std::uint64_t latency_ms = 0;
};

// Renders the judging prompt: instruction, optional context preamble, both
// responses labeled "Response 1"/"Response 2" with structurally identical
// blocks, and the optional interstitial between them.
std::string render_pairwise_prompt(std::string_view tpl, std::string_view instruction,
                                   const PerturbedView& view);

// Built-in judging prompt used when no asset store is supplied; the asset
// file assets/prompts/judge_pairwise.txt carries the same text.
const std::string& default_pairwise_prompt();

// Parse rule: the last occurrence of the "final answer" marker
// (case-insensitive) followed, within a few characters, by a standalone
// digit 1 or 2 decides the slot. A digit glued to further digits does not
// count. Anything else is Invalid.
enum class SlotParse { First, Second, Invalid };
SlotParse parse_slot(std::string_view raw_output);

Verdict slot_to_verdict(SlotParse slot, bool first_is_chosen);

// ---------------------------------------------------------------------------
// Judge interface
// ---------------------------------------------------------------------------

struct JudgeInput {
    std::string instance_id;
    BiasType bias = BiasType::Length;
    bool injected_view = false;
    std::string_view instruction;
    const PerturbedView* view = nullptr;
    Verdict label = Verdict::Chosen;
};

class Judge {
public:
    virtual ~Judge() = default;
    virtual PairwiseVerdict evaluate(const JudgeInput& input) = 0;
    virtual bool applicable(BiasType) const { return true; }
    // Version hash of the judging prompt asset, recorded in every record.
    virtual std::optional<std::string> prompt_hash() const { return std::nullopt; }
};

// ---------------------------------------------------------------------------
// Synthetic judges
// ---------------------------------------------------------------------------

struct SynthJudgeProfile {
    double base_accuracy = 1.0;
    std::map<BiasType, double> susceptibility;  // missing entries mean 0
    std::uint64_t seed = 0;

    void validate() const;  // all probabilities in [0,1]
    double susceptibility_for(BiasType bias) const;
};

// Correct with probability base_accuracy; the correctness draw is shared
// between the original and injected views of an instance, and on injected
// views a correct verdict additionally flips with probability
// susceptibility(bias). All draws come from a counter-based PRNG keyed by
// (seed, instance id, stream), so results are independent of evaluation
// order.
Verdict synth_judge(const SynthJudgeProfile& profile, std::string_view instance_id,
                    bool injected_view, BiasType bias, Verdict label);

class SyntheticJudge : public Judge {
public:
    explicit SyntheticJudge(SynthJudgeProfile profile);
    PairwiseVerdict evaluate(const JudgeInput& input) override;
    const SynthJudgeProfile& profile() const { return profile_; }

private:
    SynthJudgeProfile profile_;
};

// Always picks the response in slot 1, regardless of content. Used to sanity
// check the position protocol.
class FirstSlotJudge : public Judge {
public:
    PairwiseVerdict evaluate(const JudgeInput& input) override;
};

// ---------------------------------------------------------------------------
// Generative chat judge
// ---------------------------------------------------------------------------

class ChatJudge : public Judge {
public:
    // The prompt template comes from the asset store when provided,
    // otherwise the built-in default is used.
    ChatJudge(std::shared_ptr<http::ChatClient> client, std::string prompt_template);

    PairwiseVerdict evaluate(const JudgeInput& input) override;
    std::optional<std::string> prompt_hash() const override;

private:
    std::shared_ptr<http::ChatClient> client_;
    std::string template_;
    std::string template_hash_;
};

// Calls the judge endpoint once for the given pair. Transport failures are
// retried inside the client (exponential backoff); a still-failing call or
// an unparseable reply yields an Invalid verdict.
PairwiseVerdict judge_pairwise(const http::ChatClient& client, std::string_view prompt_template,
                               std::string_view instruction, const PerturbedView& view);

// ---------------------------------------------------------------------------
// Discriminative judges
// ---------------------------------------------------------------------------

struct ScorePair {
    double s_chosen = 0.0;
    double s_rejected = 0.0;
};

// Scalar scoring backend: maps (instruction, response) to a score. Transport
// errors are retried by the HTTP client and then surfaced — scores cannot be
// defaulted.
class Scorer {
public:
    virtual ~Scorer() = default;
    virtual double score_response(const std::string& instruction, const std::string& response) = 0;
};

class HttpScorer : public Scorer {
public:
    explicit HttpScorer(std::shared_ptr<http::ScoreClient> client);
    double score_response(const std::string& instruction, const std::string& response) override;

private:
    std::shared_ptr<http::ScoreClient> client_;
};

// Fixed lookup table, for tests and offline runs. Unknown texts score 0.
class TableScorer : public Scorer {
public:
    void set(const std::string& response, double score) { table_[response] = score; }
    double score_response(const std::string&, const std::string& response) override {
        auto it = table_.find(response);
        return it == table_.end() ? 0.0 : it->second;
    }

private:
    std::map<std::string, double> table_;
};

// Preference by score argmax; exact ties map to Invalid rather than a coin
// flip so runs stay deterministic (metrics count Invalid as incorrect).
Verdict score_preference(const ScorePair& scores);

// Discriminative judges score each response independently, so biases that
// only change the judgment context or the display order (Bandwagon,
// SuperficialReflection, Position) are not applicable to the protocol.
class DiscriminativeJudge : public Judge {
public:
    explicit DiscriminativeJudge(std::shared_ptr<Scorer> scorer);
    PairwiseVerdict evaluate(const JudgeInput& input) override;
    bool applicable(BiasType bias) const override;

private:
    std::shared_ptr<Scorer> scorer_;
};

// ---------------------------------------------------------------------------
// Evaluation harness
// ---------------------------------------------------------------------------

// Judges the original and injected views of one instance with identical
// prompt machinery. Throws NotApplicableBias when the judge cannot evaluate
// this bias type. Never mutates its input.
JudgmentRecord predict_on_biased(Judge& judge, const BiasedInstance& bi);

// Bounded-parallel fan-out over instances; output order matches input order.
std::vector<JudgmentRecord> evaluate_biased(Judge& judge,
                                            const std::vector<BiasedInstance>& instances,
                                            int concurrency);

}  // namespace judgebias::judges
