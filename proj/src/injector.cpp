#include "judgebias/injector.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <mutex>
#include <thread>

#include "judgebias/rng.hpp"

namespace judgebias::injector {

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

std::vector<PreferenceInstance> sample_base(const std::vector<PreferenceInstance>& corpus,
                                            const InjectionPlan& plan) {
    std::vector<std::size_t> eligible;
    eligible.reserve(corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const auto& inst = corpus[i];
        if (plan.bias != BiasType::Length) {
            // Length control: rejected/chosen token ratio must not exceed the
            // bound; the bound itself is retained.
            double chosen_len = static_cast<double>(inst.chosen.length_units);
            double rejected_len = static_cast<double>(inst.rejected.length_units);
            if (chosen_len == 0.0) continue;
            if (rejected_len / chosen_len > plan.max_len_ratio) continue;
        }
        eligible.push_back(i);
    }
    if (eligible.empty()) throw EmptyEligibleSet(plan.bias);

    // Partial Fisher-Yates with our own bounded draws, so the sample is
    // identical on every platform for the same seed.
    rng::Stream stream(rng::splitmix64(plan.seed) ^ rng::fnv1a64(bias_slug(plan.bias)));
    std::size_t take = std::min(plan.target_count, eligible.size());
    for (std::size_t i = 0; i < take; ++i) {
        std::size_t j = i + static_cast<std::size_t>(stream.below(eligible.size() - i));
        std::swap(eligible[i], eligible[j]);
    }

    std::vector<PreferenceInstance> out;
    out.reserve(take);
    for (std::size_t i = 0; i < take; ++i) out.push_back(corpus[eligible[i]]);
    return out;
}

// ---------------------------------------------------------------------------
// Context and layout injections
// ---------------------------------------------------------------------------

namespace {

BiasedInstance make_base(const PreferenceInstance& inst, BiasType bias, std::string strategy) {
    BiasedInstance bi;
    bi.original = inst;
    bi.bias = bias;
    bi.meta.strategy = std::move(strategy);
    return bi;
}

}  // namespace

BiasedInstance inject_reflection(const PreferenceInstance& inst) {
    BiasedInstance bi = make_base(inst, BiasType::SuperficialReflection, "context_distraction");
    bi.injected.first = inst.chosen;
    bi.injected.second = inst.rejected;
    bi.injected.interstitial = std::string(kReflectionInterstitial);
    bi.injected.first_is_chosen = true;
    return bi;
}

BiasedInstance inject_bandwagon(const PreferenceInstance& inst) {
    BiasedInstance bi = make_base(inst, BiasType::Bandwagon, "context_distraction");
    bi.injected.first = inst.chosen;
    bi.injected.second = inst.rejected;
    bi.injected.preamble = std::string(kBandwagonPreamble);
    bi.injected.first_is_chosen = true;
    return bi;
}

BiasedInstance inject_position_swap(const PreferenceInstance& inst) {
    BiasedInstance bi = make_base(inst, BiasType::Position, "layout_manipulation");
    bi.injected.first = inst.rejected;
    bi.injected.second = inst.chosen;
    bi.injected.first_is_chosen = false;
    return bi;
}

// ---------------------------------------------------------------------------
// Identity injection
// ---------------------------------------------------------------------------

IdentityCueTable IdentityCueTable::defaults() {
    IdentityCueTable table;
    table.cues[BiasType::Gender] = {"I am a woman.", "I am a man."};
    table.cues[BiasType::Race] = {"I am black.", "I am white."};
    return table;
}

bool IdentityCueTable::allows(BiasType bias, const std::string& cue) const {
    auto it = cues.find(bias);
    if (it == cues.end()) return false;
    return std::find(it->second.begin(), it->second.end(), cue) != it->second.end();
}

BiasedInstance inject_identity(const PreferenceInstance& inst, BiasType bias,
                               const std::string& cue, const IdentityCueTable& table) {
    if (!table.allows(bias, cue)) throw UnknownCue(bias, cue);

    BiasedInstance bi = make_base(inst, bias, "identity_injection");
    bi.injected.first = Response::from_text(cue + " " + inst.chosen.text);
    bi.injected.first.identity_cue = cue;
    bi.injected.second = inst.rejected;
    bi.injected.first_is_chosen = true;
    bi.meta.cue = cue;
    return bi;
}

// ---------------------------------------------------------------------------
// Counterfactual rewriting
// ---------------------------------------------------------------------------

RewriteResult EchoRewriter::rewrite(const RewriteRequest& request) {
    return {request.response_text, request.response_text};
}

RewriteResult MarkerRewriter::rewrite(const RewriteRequest& request) {
    std::string marker = marker_token(request.bias);
    std::string text = request.response_text;
    if (request.direction == RewriteDirection::StrengthenRejected) {
        text += " " + marker;
    } else {
        std::size_t pos;
        while ((pos = text.find(" " + marker)) != std::string::npos) text.erase(pos, marker.size() + 1);
        while ((pos = text.find(marker)) != std::string::npos) text.erase(pos, marker.size());
    }
    return {text, text};
}

HttpRewriter::HttpRewriter(std::shared_ptr<http::ChatClient> client)
    : client_(std::move(client)) {}

RewriteResult HttpRewriter::rewrite(const RewriteRequest& request) {
    std::string raw;
    try {
        raw = client_->complete("You rewrite responses with minimal, controlled edits.",
                                request.prompt);
    } catch (const http::TransportError& e) {
        throw RewriterUnavailable(e.what());
    }
    std::string trimmed = raw;
    auto not_space = [](unsigned char c) { return !std::isspace(c); };
    trimmed.erase(trimmed.begin(), std::find_if(trimmed.begin(), trimmed.end(), not_space));
    trimmed.erase(std::find_if(trimmed.rbegin(), trimmed.rend(), not_space).base(),
                  trimmed.end());
    if (trimmed.empty()) throw RewriteRefused(request.instance_id);
    return {trimmed, raw};
}

std::string rewrite_template_id(BiasType bias) {
    return "rewrite_" + std::string(bias_slug(bias));
}

namespace {

constexpr std::string_view kWeakenClause =
    "Rewrite the response to weaken or remove the target feature.";
constexpr std::string_view kStrengthenClause =
    "Rewrite the response to explicitly incorporate the target feature.";

RewriteRequest build_request(const PreferenceInstance& inst, BiasType bias,
                             RewriteDirection direction, const assets::AssetStore& store) {
    RewriteRequest req;
    req.instance_id = inst.id;
    req.bias = bias;
    req.template_id = rewrite_template_id(bias);
    req.direction = direction;
    req.response_text = direction == RewriteDirection::WeakenChosen ? inst.chosen.text
                                                                    : inst.rejected.text;
    std::string_view clause =
        direction == RewriteDirection::WeakenChosen ? kWeakenClause : kStrengthenClause;
    req.prompt = assets::render_template(store.prompt(req.template_id),
                                         {{"direction", clause},
                                          {"instruction", inst.instruction},
                                          {"response", req.response_text}});
    return req;
}

}  // namespace

BiasedInstance inject_superficial(const PreferenceInstance& inst, BiasType bias,
                                  Rewriter& rewriter, const assets::AssetStore& store) {
    if (classify_bias(bias) != BiasCategory::SuperficialQuality)
        throw std::invalid_argument("inject_superficial requires a superficial-quality bias");

    RewriteRequest weaken = build_request(inst, bias, RewriteDirection::WeakenChosen, store);
    RewriteRequest strengthen =
        build_request(inst, bias, RewriteDirection::StrengthenRejected, store);

    RewriteResult weakened = rewriter.rewrite(weaken);
    RewriteResult strengthened = rewriter.rewrite(strengthen);

    BiasedInstance bi = make_base(inst, bias, "counterfactual_rewrite");
    bi.injected.first = Response::from_text(weakened.text);
    bi.injected.second = Response::from_text(strengthened.text);
    bi.injected.first_is_chosen = true;
    bi.meta.template_id = weaken.template_id;
    bi.meta.template_hash = store.prompt_hash(weaken.template_id);
    bi.meta.raw_weaken = weakened.raw_output;
    bi.meta.raw_strengthen = strengthened.raw_output;
    return bi;
}

// ---------------------------------------------------------------------------
// Plan execution
// ---------------------------------------------------------------------------

std::pair<std::vector<BiasedInstance>, InjectionRunReport> run_injection(
    const std::vector<PreferenceInstance>& sampled, const InjectionPlan& plan,
    Rewriter& rewriter, const assets::AssetStore& store, int concurrency,
    const IdentityCueTable& cues) {
    InjectionRunReport report;
    report.bias = plan.bias;
    report.sampled = sampled.size();

    std::vector<std::optional<BiasedInstance>> slots(sampled.size());
    BiasCategory category = classify_bias(plan.bias);

    auto inject_one = [&](std::size_t i) {
        const PreferenceInstance& inst = sampled[i];
        switch (category) {
            case BiasCategory::SuperficialQuality:
                slots[i] = inject_superficial(inst, plan.bias, rewriter, store);
                break;
            case BiasCategory::Context:
                slots[i] = plan.bias == BiasType::Bandwagon ? inject_bandwagon(inst)
                                                            : inject_reflection(inst);
                break;
            case BiasCategory::Presentation:
                slots[i] = inject_position_swap(inst);
                break;
            case BiasCategory::Diversity: {
                const auto& cue_list = cues.cues.at(plan.bias);
                // Deterministic cue choice keyed by the instance id.
                std::size_t pick = static_cast<std::size_t>(
                    rng::keyed_u64(plan.seed, inst.id + "/cue") % cue_list.size());
                slots[i] = inject_identity(inst, plan.bias, cue_list[pick], cues);
                break;
            }
        }
    };

    std::mutex report_mutex;
    auto guarded_inject = [&](std::size_t i) {
        try {
            inject_one(i);
        } catch (const std::exception& e) {
            // Skipped, never silently dropped: the id and reason go to the
            // report and the run continues with reduced yield.
            std::lock_guard<std::mutex> lock(report_mutex);
            report.skipped_ids.push_back(sampled[i].id + ": " + e.what());
        }
    };

    bool remote = category == BiasCategory::SuperficialQuality;
    if (remote && concurrency > 1 && sampled.size() > 1) {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        int workers = std::clamp<int>(concurrency, 1, static_cast<int>(sampled.size()));
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next.fetch_add(1); i < sampled.size();
                     i = next.fetch_add(1)) {
                    guarded_inject(i);
                }
            });
        }
        for (auto& t : pool) t.join();
    } else {
        for (std::size_t i = 0; i < sampled.size(); ++i) guarded_inject(i);
    }

    std::vector<BiasedInstance> out;
    out.reserve(sampled.size());
    for (auto& slot : slots) {
        if (slot) out.push_back(std::move(*slot));
    }
    report.injected = out.size();
    report.skipped = report.skipped_ids.size();
    return {std::move(out), std::move(report)};
}

}  // namespace judgebias::injector
