#include "judgebias/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "judgebias/metrics.hpp"
#include "judgebias/rng.hpp"

namespace judgebias::objectives {

// ---------------------------------------------------------------------------
// Losses and rewards
// ---------------------------------------------------------------------------

double sft_nll(std::span<const double> token_logprobs) {
    double total = 0.0;
    for (double lp : token_logprobs) {
        if (lp > 0.0) throw PositiveLogProb{};
        total += lp;
    }
    return -total;
}

RewardBreakdown reward(bool verdict_matches_label, bool format_ok) {
    RewardBreakdown r;
    r.r_accuracy = verdict_matches_label ? 1.0 : 0.0;
    r.r_format = format_ok ? 0.0 : -0.5;
    r.r_final = r.r_accuracy + r.r_format;
    return r;
}

std::vector<double> grpo_advantages(std::span<const double> group_rewards, double std_floor) {
    if (group_rewards.size() < 2) throw GroupTooSmall{};
    double mean = 0.0;
    for (double r : group_rewards) mean += r;
    mean /= static_cast<double>(group_rewards.size());

    double variance = 0.0;
    for (double r : group_rewards) variance += (r - mean) * (r - mean);
    variance /= static_cast<double>(group_rewards.size());  // population statistics

    double denom = std::sqrt(variance) + std_floor;
    std::vector<double> advantages;
    advantages.reserve(group_rewards.size());
    for (double r : group_rewards) advantages.push_back((r - mean) / denom);
    return advantages;
}

double grpo_surrogate(std::span<const double> ratios, std::span<const double> advantages,
                      double clip_eps, double kl_value, double kl_coeff) {
    if (ratios.size() != advantages.size()) throw LengthMismatch{};
    if (ratios.empty()) throw LengthMismatch{};
    double total = 0.0;
    for (std::size_t i = 0; i < ratios.size(); ++i) {
        if (!(ratios[i] > 0.0)) throw NonPositiveRatio{};
        double clipped = std::clamp(ratios[i], 1.0 - clip_eps, 1.0 + clip_eps);
        total += std::min(ratios[i] * advantages[i], clipped * advantages[i]);
    }
    return total / static_cast<double>(ratios.size()) - kl_coeff * kl_value;
}

InfoNceResult infonce_loss(double s_plus, double s_minus, std::span<const double> s_bias,
                           double tau) {
    if (!(tau > 0.0)) throw NonPositiveTemperature{};

    // Candidate order: r+, r-, then the bias negatives.
    std::vector<double> scaled;
    scaled.reserve(2 + s_bias.size());
    scaled.push_back(s_plus / tau);
    scaled.push_back(s_minus / tau);
    for (double s : s_bias) scaled.push_back(s / tau);

    double top = *std::max_element(scaled.begin(), scaled.end());
    double z = 0.0;
    for (double t : scaled) z += std::exp(t - top);

    InfoNceResult result;
    result.loss = top + std::log(z) - scaled[0];

    auto softmax = [&](std::size_t k) { return std::exp(scaled[k] - top) / z; };
    result.d_plus = (softmax(0) - 1.0) / tau;
    result.d_minus = softmax(1) / tau;
    result.d_bias.reserve(s_bias.size());
    for (std::size_t i = 0; i < s_bias.size(); ++i) result.d_bias.push_back(softmax(2 + i) / tau);
    return result;
}

HingeResult hinge_loss(double s_plus, double s_minus, double margin) {
    if (margin < 0.0) throw NegativeMargin{};
    HingeResult result;
    double slack = margin - (s_plus - s_minus);
    if (slack > 0.0) {
        result.loss = slack;
        result.d_plus = -1.0;
        result.d_minus = 1.0;
    }
    return result;
}

// ---------------------------------------------------------------------------
// Feature map
// ---------------------------------------------------------------------------

FeatureMap FeatureMap::frozen_default() {
    FeatureMap map;
    map.length_scale_ = 60.0;
    auto marker_of = [](BiasType b) { return std::vector<std::string>{marker_token(b)}; };
    map.markers_ = {
        {BiasType::Authority, marker_of(BiasType::Authority)},
        {BiasType::Beauty, marker_of(BiasType::Beauty)},
        {BiasType::Assertiveness, marker_of(BiasType::Assertiveness)},
        {BiasType::Sycophancy, marker_of(BiasType::Sycophancy)},
        {BiasType::Sentiment, marker_of(BiasType::Sentiment)},
        {BiasType::Concreteness, marker_of(BiasType::Concreteness)},
        {BiasType::Gender, {"I am a woman.", "I am a man."}},
        {BiasType::Race, {"I am black.", "I am white."}},
    };
    return map;
}

FeatureMap FeatureMap::from_json(const json& spec) {
    FeatureMap map;
    map.length_scale_ = spec.at("length_scale").get<double>();
    map.markers_.clear();
    for (const auto& entry : spec.at("markers")) {
        auto bias = bias_from_slug(entry.at("bias").get<std::string>());
        if (!bias) throw std::runtime_error("unknown bias in feature map");
        std::vector<std::string> tokens;
        for (const auto& t : entry.at("tokens")) tokens.push_back(t.get<std::string>());
        map.markers_.emplace_back(*bias, std::move(tokens));
    }
    return map;
}

json FeatureMap::to_json() const {
    json markers = json::array();
    for (const auto& [bias, tokens] : markers_) {
        json t = json::array();
        for (const auto& token : tokens) t.push_back(token);
        markers.push_back(json{{"bias", std::string(bias_slug(bias))}, {"tokens", t}});
    }
    return json{{"length_scale", length_scale_}, {"markers", markers}};
}

std::vector<std::string> FeatureMap::feature_names() const {
    std::vector<std::string> names{"quality", "length"};
    for (const auto& [bias, tokens] : markers_)
        names.push_back("marker_" + std::string(bias_slug(bias)));
    return names;
}

namespace {

std::size_t count_occurrences(const std::string& text, const std::string& needle) {
    if (needle.empty()) return 0;
    std::size_t count = 0;
    for (std::size_t pos = text.find(needle); pos != std::string::npos;
         pos = text.find(needle, pos + needle.size())) {
        ++count;
    }
    return count;
}

}  // namespace

std::vector<double> FeatureMap::features(const Response& response, double quality_hint) const {
    std::vector<double> f;
    f.reserve(dimension());
    f.push_back(quality_hint);
    f.push_back(std::min<double>(static_cast<double>(response.length_units), 4.0 * length_scale_) /
                length_scale_);
    for (const auto& [bias, tokens] : markers_) {
        std::size_t count = 0;
        for (const auto& token : tokens) count += count_occurrences(response.text, token);
        f.push_back(static_cast<double>(count));
    }
    return f;
}

std::optional<std::size_t> FeatureMap::marker_feature_index(BiasType bias) const {
    for (std::size_t i = 0; i < markers_.size(); ++i) {
        if (markers_[i].first == bias) return 2 + i;
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Toy models
// ---------------------------------------------------------------------------

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

void axpy(std::vector<double>& out, double scale, const std::vector<double>& v) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += scale * v[i];
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

json weights_to_json(const std::vector<double>& w) {
    json arr = json::array();
    for (double x : w) arr.push_back(x);
    return arr;
}

std::vector<double> weights_from_json(const json& arr) {
    std::vector<double> w;
    for (const auto& x : arr) w.push_back(x.get<double>());
    return w;
}

}  // namespace

double ToyScorer::score(const Response& response, double quality_hint) const {
    return dot(weights, map.features(response, quality_hint));
}

json ToyScorer::to_json() const {
    return json{{"kind", "toy_scorer"},
                {"weights", weights_to_json(weights)},
                {"feature_map", map.to_json()}};
}

ToyScorer ToyScorer::from_json(const json& raw) {
    ToyScorer s;
    s.map = FeatureMap::from_json(raw.at("feature_map"));
    s.weights = weights_from_json(raw.at("weights"));
    return s;
}

double ToyPolicy::prob_first(const std::vector<double>& feat_first,
                             const std::vector<double>& feat_second) const {
    double z = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i)
        z += weights[i] * (feat_first[i] - feat_second[i]);
    return sigmoid(z);
}

json ToyPolicy::to_json() const {
    return json{{"kind", "toy_policy"},
                {"weights", weights_to_json(weights)},
                {"feature_map", map.to_json()}};
}

ToyPolicy ToyPolicy::from_json(const json& raw) {
    ToyPolicy p;
    p.map = FeatureMap::from_json(raw.at("feature_map"));
    p.weights = weights_from_json(raw.at("weights"));
    return p;
}

std::vector<TeacherTrace> read_trace_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    std::vector<TeacherTrace> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json raw = json::parse(line);
        TeacherTrace trace;
        trace.id = raw.at("id").get<std::string>();
        auto bias = bias_from_slug(raw.at("bias").get<std::string>());
        if (!bias) throw std::runtime_error("unknown bias slug in trace " + trace.id);
        trace.bias = *bias;
        for (const auto& lp : raw.at("token_logprobs"))
            trace.token_logprobs.push_back(lp.get<double>());
        out.push_back(std::move(trace));
    }
    return out;
}

double sft_nll_over_traces(std::span<const TeacherTrace> traces) {
    if (traces.empty()) return 0.0;
    double total = 0.0;
    for (const auto& trace : traces) total += sft_nll(trace.token_logprobs);
    return total / static_cast<double>(traces.size());
}

std::pair<double, double> quality_hints(const PreferenceInstance& inst) {
    double chosen = 0.5, rejected = 0.5;
    if (inst.extra.contains("meta")) {
        const json& meta = inst.extra["meta"];
        if (meta.contains("chosen_quality")) chosen = meta["chosen_quality"].get<double>();
        if (meta.contains("rejected_quality")) rejected = meta["rejected_quality"].get<double>();
    }
    return {chosen, rejected};
}

// ---------------------------------------------------------------------------
// Contrastive training
// ---------------------------------------------------------------------------

ToyScorer train_toy_scorer(const std::vector<augment::AugmentedInstance>& data,
                           const ContrastiveConfig& cfg, ContrastiveMode mode) {
    ToyScorer scorer;
    scorer.weights.assign(scorer.map.dimension(), 0.0);

    struct Example {
        std::vector<double> feat_plus;
        std::vector<double> feat_minus;
        std::vector<std::vector<double>> feat_bias;
    };
    std::vector<Example> examples;
    examples.reserve(data.size());
    for (const auto& inst : data) {
        Example ex;
        ex.feat_plus = scorer.map.features(inst.chosen, inst.chosen_quality.value_or(0.5));
        ex.feat_minus = scorer.map.features(inst.rejected, inst.rejected_quality.value_or(0.5));
        if (mode == ContrastiveMode::InfoNce) {
            for (const auto& n : inst.negatives) {
                if (n.verdict != augment::NegativeVerdict::Keep) continue;
                if (static_cast<int>(ex.feat_bias.size()) >= cfg.negative_count) break;
                ex.feat_bias.push_back(scorer.map.features(n.response, n.quality.value_or(0.5)));
            }
        }
        examples.push_back(std::move(ex));
    }

    for (int iter = 0; iter < cfg.iterations; ++iter) {
        for (const auto& ex : examples) {
            double s_plus = dot(scorer.weights, ex.feat_plus);
            double s_minus = dot(scorer.weights, ex.feat_minus);
            if (mode == ContrastiveMode::Hinge) {
                HingeResult h = hinge_loss(s_plus, s_minus, cfg.margin);
                if (!std::isfinite(h.loss)) throw NonFiniteLoss(static_cast<std::size_t>(iter));
                axpy(scorer.weights, -cfg.learning_rate * h.d_plus, ex.feat_plus);
                axpy(scorer.weights, -cfg.learning_rate * h.d_minus, ex.feat_minus);
            } else {
                std::vector<double> s_bias;
                s_bias.reserve(ex.feat_bias.size());
                for (const auto& f : ex.feat_bias) s_bias.push_back(dot(scorer.weights, f));
                InfoNceResult r = infonce_loss(s_plus, s_minus, s_bias, cfg.temperature);
                if (!std::isfinite(r.loss)) throw NonFiniteLoss(static_cast<std::size_t>(iter));
                axpy(scorer.weights, -cfg.learning_rate * r.d_plus, ex.feat_plus);
                axpy(scorer.weights, -cfg.learning_rate * r.d_minus, ex.feat_minus);
                for (std::size_t i = 0; i < ex.feat_bias.size(); ++i)
                    axpy(scorer.weights, -cfg.learning_rate * r.d_bias[i], ex.feat_bias[i]);
            }
        }
    }
    return scorer;
}

// ---------------------------------------------------------------------------
// GRPO training
// ---------------------------------------------------------------------------

namespace {

struct PairExample {
    std::vector<double> feat_first;
    std::vector<double> feat_second;
    bool first_is_chosen = true;
    std::string key;  // stable id for the sampling stream
};

std::vector<PairExample> derive_pair_examples(const FeatureMap& map,
                                              const std::vector<augment::AugmentedInstance>& data,
                                              std::uint64_t seed) {
    std::vector<PairExample> out;
    for (const auto& inst : data) {
        auto add = [&](const Response& other, double other_quality, const std::string& tag) {
            PairExample ex;
            ex.key = inst.id + "/" + tag;
            ex.first_is_chosen = rng::keyed_u01(seed, ex.key + "/order") < 0.5;
            auto feat_chosen = map.features(inst.chosen, inst.chosen_quality.value_or(0.5));
            auto feat_other = map.features(other, other_quality);
            if (ex.first_is_chosen) {
                ex.feat_first = std::move(feat_chosen);
                ex.feat_second = std::move(feat_other);
            } else {
                ex.feat_first = std::move(feat_other);
                ex.feat_second = std::move(feat_chosen);
            }
            out.push_back(std::move(ex));
        };
        add(inst.rejected, inst.rejected_quality.value_or(0.5), "base");
        std::size_t k = 0;
        for (const auto& n : inst.negatives) {
            if (n.verdict != augment::NegativeVerdict::Keep) continue;
            add(n.response, n.quality.value_or(0.5), "neg" + std::to_string(k++));
        }
    }
    return out;
}

}  // namespace

ToyPolicy train_toy_policy(const std::vector<augment::AugmentedInstance>& data,
                           const GrpoConfig& cfg,
                           const std::function<double(bool)>& reward_override) {
    if (cfg.group_size < 2) throw GroupTooSmall{};

    ToyPolicy policy;
    policy.weights.assign(policy.map.dimension(), 0.0);
    std::vector<double> ref_weights = policy.weights;  // KL anchor: the initial policy

    auto examples = derive_pair_examples(policy.map, data, cfg.seed);
    if (examples.empty()) return policy;

    auto prob_first_with = [&](const std::vector<double>& w, const PairExample& ex) {
        double z = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i)
            z += w[i] * (ex.feat_first[i] - ex.feat_second[i]);
        return sigmoid(z);
    };

    const std::size_t dim = policy.weights.size();
    const double n_samples = static_cast<double>(examples.size() * cfg.group_size);

    for (int iter = 0; iter < cfg.iterations; ++iter) {
        std::vector<double> w_old = policy.weights;

        // Sample G verdicts per example from the snapshot policy and compute
        // group-standardized advantages once per outer iteration.
        std::vector<std::vector<bool>> picked_first(examples.size());
        std::vector<std::vector<double>> advantages(examples.size());
        for (std::size_t e = 0; e < examples.size(); ++e) {
            double p_old = prob_first_with(w_old, examples[e]);
            std::vector<double> rewards(cfg.group_size);
            picked_first[e].resize(cfg.group_size);
            for (int g = 0; g < cfg.group_size; ++g) {
                double u = rng::keyed_u01(cfg.seed, "grpo/" + examples[e].key,
                                          static_cast<std::uint64_t>(iter) * 1000 +
                                              static_cast<std::uint64_t>(g));
                bool first = u < p_old;
                picked_first[e][g] = first;
                bool match = first == examples[e].first_is_chosen;
                // Format is always right for the toy policy; the verdict is
                // structural, not parsed from text.
                rewards[g] = reward_override ? reward_override(match)
                                             : reward(match, true).r_final;
            }
            advantages[e] = grpo_advantages(rewards, cfg.std_floor);
        }

        for (int step = 0; step < cfg.inner_steps; ++step) {
            std::vector<double> grad(dim, 0.0);
            double surrogate = 0.0;

            for (std::size_t e = 0; e < examples.size(); ++e) {
                const PairExample& ex = examples[e];
                double p_old = prob_first_with(w_old, ex);
                double p_new = prob_first_with(policy.weights, ex);

                for (int g = 0; g < cfg.group_size; ++g) {
                    bool first = picked_first[e][g];
                    double pi_new = first ? p_new : 1.0 - p_new;
                    double pi_old = first ? p_old : 1.0 - p_old;
                    double ratio = pi_new / pi_old;
                    double advantage = advantages[e][g];

                    double clipped = std::clamp(ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps);
                    double unclipped_term = ratio * advantage;
                    double clipped_term = clipped * advantage;
                    surrogate += std::min(unclipped_term, clipped_term);

                    if (unclipped_term <= clipped_term && advantage != 0.0) {
                        // d ratio / dw = ratio * d log pi_new / dw
                        double dlogp_scale = first ? (1.0 - p_new) : -p_new;
                        double scale = advantage * ratio * dlogp_scale / n_samples;
                        for (std::size_t i = 0; i < dim; ++i)
                            grad[i] += scale * (ex.feat_first[i] - ex.feat_second[i]);
                    }
                }

                // Exact categorical KL(pi_theta || pi_ref) and its gradient.
                double p_ref = prob_first_with(ref_weights, ex);
                double lo = 1e-12;
                double pc = std::clamp(p_new, lo, 1.0 - lo);
                double pr = std::clamp(p_ref, lo, 1.0 - lo);
                double kl = pc * std::log(pc / pr) + (1.0 - pc) * std::log((1.0 - pc) / (1.0 - pr));
                surrogate -= cfg.kl_coeff * kl * static_cast<double>(cfg.group_size);
                double dkl_dp = std::log(pc / pr) - std::log((1.0 - pc) / (1.0 - pr));
                double dp_scale = p_new * (1.0 - p_new);
                double scale = -cfg.kl_coeff * dkl_dp * dp_scale / static_cast<double>(examples.size());
                for (std::size_t i = 0; i < dim; ++i)
                    grad[i] += scale * (ex.feat_first[i] - ex.feat_second[i]);
            }

            surrogate /= n_samples;
            if (!std::isfinite(surrogate)) throw NonFiniteLoss(static_cast<std::size_t>(iter));
            axpy(policy.weights, cfg.learning_rate, grad);  // gradient ascent
        }
    }
    return policy;
}

double policy_expected_accuracy(const ToyPolicy& policy,
                                const std::vector<augment::AugmentedInstance>& data,
                                std::uint64_t seed) {
    auto examples = derive_pair_examples(policy.map, data, seed);
    if (examples.empty()) return 0.0;
    double total = 0.0;
    for (const auto& ex : examples) {
        double p = policy.prob_first(ex.feat_first, ex.feat_second);
        total += ex.first_is_chosen ? p : 1.0 - p;
    }
    return total / static_cast<double>(examples.size());
}

double policy_total_variation(const ToyPolicy& a, const ToyPolicy& b,
                              const std::vector<augment::AugmentedInstance>& data,
                              std::uint64_t seed) {
    auto examples = derive_pair_examples(a.map, data, seed);
    if (examples.empty()) return 0.0;
    double total = 0.0;
    for (const auto& ex : examples) {
        total += std::abs(a.prob_first(ex.feat_first, ex.feat_second) -
                          b.prob_first(ex.feat_first, ex.feat_second));
    }
    return total / static_cast<double>(examples.size());
}

// ---------------------------------------------------------------------------
// Toy bias-sensitivity evaluation
// ---------------------------------------------------------------------------

namespace {

Verdict scorer_preference(const ToyScorer& scorer, const Response& chosen, double cq,
                          const Response& rejected, double rq) {
    double s_plus = scorer.score(chosen, cq);
    double s_minus = scorer.score(rejected, rq);
    if (s_plus == s_minus) return Verdict::Invalid;
    return s_plus > s_minus ? Verdict::Chosen : Verdict::Rejected;
}

}  // namespace

ToyBsrResult toy_scorer_bsr(const ToyScorer& scorer,
                            const std::vector<PreferenceInstance>& eval_set,
                            const std::vector<BiasType>& biases) {
    ToyBsrResult result;
    std::vector<JudgmentRecord> all_records;

    for (BiasType bias : biases) {
        std::vector<JudgmentRecord> records;
        records.reserve(eval_set.size());
        for (const auto& inst : eval_set) {
            auto [cq, rq] = quality_hints(inst);

            JudgmentRecord rec;
            rec.instance_id = inst.id;
            rec.bias = bias;
            rec.label = Verdict::Chosen;
            rec.verdict_orig = scorer_preference(scorer, inst.chosen, cq, inst.rejected, rq);

            // Task quality is held fixed; only the bias feature moves. The
            // feature lands where the matching injector would put it: on the
            // chosen response for identity cues, on the rejected response
            // otherwise.
            if (classify_bias(bias) == BiasCategory::Diversity) {
                Response chosen_inj = emphasize_bias_feature(inst.chosen, bias);
                rec.verdict_bias = scorer_preference(scorer, chosen_inj, cq, inst.rejected, rq);
            } else {
                Response rejected_inj = emphasize_bias_feature(inst.rejected, bias);
                rec.verdict_bias = scorer_preference(scorer, inst.chosen, cq, rejected_inj, rq);
            }
            records.push_back(rec);
        }
        result.per_bias[bias] = metrics::bsr(records);
        all_records.insert(all_records.end(), records.begin(), records.end());
    }

    double sum = 0.0;
    std::size_t defined = 0;
    for (const auto& [bias, value] : result.per_bias) {
        if (value) {
            sum += *value;
            ++defined;
        }
    }
    if (defined > 0) result.overall = sum / static_cast<double>(defined);
    if (!all_records.empty())
        result.acc_ori = metrics::accuracy(all_records, metrics::RecordView::Original);
    return result;
}

}  // namespace judgebias::objectives
