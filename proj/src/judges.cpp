#include "judgebias/judges.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <thread>

#include "judgebias/rng.hpp"

namespace judgebias::judges {

// ---------------------------------------------------------------------------
// Prompt rendering and parsing
// ---------------------------------------------------------------------------

const std::string& default_pairwise_prompt() {
    static const std::string tpl =
        "You are an impartial judge. Compare the two responses to the instruction below and "
        "decide which one completes it better. Ignore style and focus on correctness and "
        "usefulness.\n"
        "\n"
        "Instruction:\n"
        "{instruction}\n"
        "{context}"
        "\n"
        "Response 1:\n"
        "{response_1}\n"
        "{interstitial}"
        "\n"
        "Response 2:\n"
        "{response_2}\n"
        "\n"
        "State your reasoning briefly, then end with exactly one line of the form "
        "\"Final answer: 1\" or \"Final answer: 2\".\n";
    return tpl;
}

std::string render_pairwise_prompt(std::string_view tpl, std::string_view instruction,
                                   const PerturbedView& view) {
    std::string context = view.preamble ? "\nContext: " + *view.preamble + "\n" : std::string{};
    std::string interstitial =
        view.interstitial ? "\n" + *view.interstitial + "\n" : std::string{};
    return assets::render_template(tpl, {{"instruction", instruction},
                                         {"context", context},
                                         {"response_1", view.first.text},
                                         {"interstitial", interstitial},
                                         {"response_2", view.second.text}});
}

SlotParse parse_slot(std::string_view raw_output) {
    static constexpr std::string_view kMarker = "final answer";
    std::string lowered(raw_output);
    std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });

    std::size_t marker = std::string::npos;
    for (std::size_t pos = lowered.find(kMarker); pos != std::string::npos;
         pos = lowered.find(kMarker, pos + 1)) {
        marker = pos;
    }
    if (marker == std::string::npos) return SlotParse::Invalid;

    // Scan a short window after the marker for the first digit.
    std::size_t start = marker + kMarker.size();
    std::size_t end = std::min(raw_output.size(), start + 8);
    for (std::size_t i = start; i < end; ++i) {
        char c = raw_output[i];
        if (!std::isdigit(static_cast<unsigned char>(c))) continue;
        bool followed_by_digit =
            i + 1 < raw_output.size() && std::isdigit(static_cast<unsigned char>(raw_output[i + 1]));
        if (followed_by_digit) return SlotParse::Invalid;
        if (c == '1') return SlotParse::First;
        if (c == '2') return SlotParse::Second;
        return SlotParse::Invalid;
    }
    return SlotParse::Invalid;
}

Verdict slot_to_verdict(SlotParse slot, bool first_is_chosen) {
    switch (slot) {
        case SlotParse::First: return first_is_chosen ? Verdict::Chosen : Verdict::Rejected;
        case SlotParse::Second: return first_is_chosen ? Verdict::Rejected : Verdict::Chosen;
        case SlotParse::Invalid: return Verdict::Invalid;
    }
    return Verdict::Invalid;
}

// ---------------------------------------------------------------------------
// Synthetic judges
// ---------------------------------------------------------------------------

void SynthJudgeProfile::validate() const {
    auto in_unit = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!in_unit(base_accuracy))
        throw std::invalid_argument("base_accuracy outside [0,1]");
    for (const auto& [bias, p] : susceptibility) {
        if (!in_unit(p))
            throw std::invalid_argument("susceptibility outside [0,1] for " +
                                        std::string(bias_slug(bias)));
    }
}

double SynthJudgeProfile::susceptibility_for(BiasType bias) const {
    auto it = susceptibility.find(bias);
    return it == susceptibility.end() ? 0.0 : it->second;
}

Verdict synth_judge(const SynthJudgeProfile& profile, std::string_view instance_id,
                    bool injected_view, BiasType bias, Verdict label) {
    // The correctness draw is keyed by the instance only, so original and
    // injected views agree before the susceptibility flip is applied.
    std::string acc_key = std::string(instance_id) + "/acc";
    bool is_correct = rng::keyed_u01(profile.seed, acc_key) < profile.base_accuracy;
    if (injected_view && is_correct) {
        std::string flip_key =
            std::string(instance_id) + "/flip/" + std::string(bias_slug(bias));
        if (rng::keyed_u01(profile.seed, flip_key) < profile.susceptibility_for(bias))
            is_correct = false;
    }
    return is_correct ? label : opposite(label);
}

SyntheticJudge::SyntheticJudge(SynthJudgeProfile profile) : profile_(std::move(profile)) {
    profile_.validate();
}

PairwiseVerdict SyntheticJudge::evaluate(const JudgeInput& input) {
    PairwiseVerdict v;
    v.choice = synth_judge(profile_, input.instance_id, input.injected_view, input.bias,
                           input.label);
    v.raw_output = "synthetic";
    return v;
}

PairwiseVerdict FirstSlotJudge::evaluate(const JudgeInput& input) {
    PairwiseVerdict v;
    v.choice = slot_to_verdict(SlotParse::First, input.view->first_is_chosen);
    v.raw_output = "first-slot";
    return v;
}

// ---------------------------------------------------------------------------
// Chat judge
// ---------------------------------------------------------------------------

PairwiseVerdict judge_pairwise(const http::ChatClient& client, std::string_view prompt_template,
                               std::string_view instruction, const PerturbedView& view) {
    std::string prompt = render_pairwise_prompt(prompt_template, instruction, view);
    PairwiseVerdict verdict;
    auto started = std::chrono::steady_clock::now();
    try {
        verdict.raw_output =
            client.complete("You are a careful evaluator of answer quality.", prompt);
        verdict.choice = slot_to_verdict(parse_slot(verdict.raw_output), view.first_is_chosen);
    } catch (const http::TransportError& e) {
        verdict.raw_output = std::string("<transport error: ") + e.what() + ">";
        verdict.choice = Verdict::Invalid;
    }
    verdict.latency_ms = static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() -
                                                              started)
            .count());
    return verdict;
}

ChatJudge::ChatJudge(std::shared_ptr<http::ChatClient> client, std::string prompt_template)
    : client_(std::move(client)),
      template_(std::move(prompt_template)),
      template_hash_(assets::content_hash(template_)) {}

PairwiseVerdict ChatJudge::evaluate(const JudgeInput& input) {
    return judge_pairwise(*client_, template_, input.instruction, *input.view);
}

std::optional<std::string> ChatJudge::prompt_hash() const { return template_hash_; }

// ---------------------------------------------------------------------------
// Discriminative judges
// ---------------------------------------------------------------------------

HttpScorer::HttpScorer(std::shared_ptr<http::ScoreClient> client) : client_(std::move(client)) {}

double HttpScorer::score_response(const std::string& instruction, const std::string& response) {
    return client_->score(instruction, response);
}

Verdict score_preference(const ScorePair& scores) {
    if (scores.s_chosen == scores.s_rejected) return Verdict::Invalid;
    return scores.s_chosen > scores.s_rejected ? Verdict::Chosen : Verdict::Rejected;
}

DiscriminativeJudge::DiscriminativeJudge(std::shared_ptr<Scorer> scorer)
    : scorer_(std::move(scorer)) {}

bool DiscriminativeJudge::applicable(BiasType bias) const {
    return bias != BiasType::Bandwagon && bias != BiasType::SuperficialReflection &&
           bias != BiasType::Position;
}

PairwiseVerdict DiscriminativeJudge::evaluate(const JudgeInput& input) {
    const PerturbedView& view = *input.view;
    std::string instruction(input.instruction);
    ScorePair scores;
    scores.s_chosen = scorer_->score_response(instruction, view.chosen().text);
    scores.s_rejected = scorer_->score_response(instruction, view.rejected().text);
    PairwiseVerdict v;
    v.choice = score_preference(scores);
    v.raw_output = "s_chosen=" + std::to_string(scores.s_chosen) +
                   " s_rejected=" + std::to_string(scores.s_rejected);
    return v;
}

// ---------------------------------------------------------------------------
// Harness
// ---------------------------------------------------------------------------

JudgmentRecord predict_on_biased(Judge& judge, const BiasedInstance& bi) {
    if (!judge.applicable(bi.bias)) throw NotApplicableBias(bi.bias);

    JudgmentRecord rec;
    rec.instance_id = bi.original.id;
    rec.bias = bi.bias;
    rec.label = Verdict::Chosen;
    rec.prompt_hash = judge.prompt_hash();

    PerturbedView original = bi.original_view();
    JudgeInput input;
    input.instance_id = bi.original.id;
    input.bias = bi.bias;
    input.instruction = bi.original.instruction;

    input.injected_view = false;
    input.view = &original;
    rec.verdict_orig = judge.evaluate(input).choice;

    input.injected_view = true;
    input.view = &bi.injected;
    rec.verdict_bias = judge.evaluate(input).choice;
    return rec;
}

std::vector<JudgmentRecord> evaluate_biased(Judge& judge,
                                            const std::vector<BiasedInstance>& instances,
                                            int concurrency) {
    std::vector<JudgmentRecord> records(instances.size());
    if (instances.empty()) return records;

    int workers = std::clamp<int>(concurrency, 1, static_cast<int>(instances.size()));
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;

    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            while (!failed.load()) {
                std::size_t i = next.fetch_add(1);
                if (i >= instances.size()) break;
                try {
                    records[i] = predict_on_biased(judge, instances[i]);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!failed.exchange(true)) error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failed && error) std::rethrow_exception(error);
    return records;
}

}  // namespace judgebias::judges
