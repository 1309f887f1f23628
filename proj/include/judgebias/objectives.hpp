// Training objectives with analytic gradients: SFT negative log-likelihood,
// the GRPO clipped surrogate with its accuracy/format reward, InfoNCE over
// bias-augmented negatives, and the hinge baseline. Plus desk-scale training
// loops (ToyScorer / ToyPolicy) that demonstrate the mechanisms end to end.
// No autodiff, no GPU paths; everything is seeded and deterministic.
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "judgebias/augment.hpp"
#include "judgebias/core.hpp"

namespace judgebias::objectives {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct PositiveLogProb : std::runtime_error {
    PositiveLogProb() : std::runtime_error("token log-probability greater than zero") {}
};
struct GroupTooSmall : std::runtime_error {
    GroupTooSmall() : std::runtime_error("GRPO group needs at least 2 rewards") {}
};
struct NonPositiveRatio : std::runtime_error {
    NonPositiveRatio() : std::runtime_error("policy ratio must be positive") {}
};
struct LengthMismatch : std::runtime_error {
    LengthMismatch() : std::runtime_error("ratio and advantage sequences differ in length") {}
};
struct NonPositiveTemperature : std::runtime_error {
    NonPositiveTemperature() : std::runtime_error("temperature must be positive") {}
};
struct NegativeMargin : std::runtime_error {
    NegativeMargin() : std::runtime_error("margin must be non-negative") {}
};
struct NonFiniteLoss : std::runtime_error {
    explicit NonFiniteLoss(std::size_t iteration)
        : std::runtime_error("non-finite loss at iteration " + std::to_string(iteration)),
          iteration(iteration) {}
    std::size_t iteration;
};

// ---------------------------------------------------------------------------
// Losses and rewards
// ---------------------------------------------------------------------------

// Negative sum of token log-probabilities. Empty sequence -> 0.
double sft_nll(std::span<const double> token_logprobs);

struct RewardBreakdown {
    double r_accuracy = 0.0;  // 1 if judgment = label, else 0
    double r_format = 0.0;    // 0 if format is right, else -0.5
    double r_final = 0.0;     // r_accuracy + r_format
};

RewardBreakdown reward(bool verdict_matches_label, bool format_ok);

// Group-relative advantages: (r_i - mean) / (population std + std_floor).
std::vector<double> grpo_advantages(std::span<const double> group_rewards, double std_floor);

// mean_i min(ratio_i * A_i, clip(ratio_i, 1-eps, 1+eps) * A_i) - kl_coeff * kl_value.
double grpo_surrogate(std::span<const double> ratios, std::span<const double> advantages,
                      double clip_eps, double kl_value, double kl_coeff);

struct InfoNceResult {
    double loss = 0.0;
    double d_plus = 0.0;               // dL/ds_plus
    double d_minus = 0.0;              // dL/ds_minus
    std::vector<double> d_bias;        // dL/ds_bias[i]
};

// -log( e^{s+/tau} / (e^{s+/tau} + e^{s-/tau} + sum_i e^{s~-_i/tau}) ),
// computed through log-sum-exp so large scores cannot overflow. Gradients
// are the analytic softmax form.
InfoNceResult infonce_loss(double s_plus, double s_minus, std::span<const double> s_bias,
                           double tau);

struct HingeResult {
    double loss = 0.0;
    double d_plus = 0.0;
    double d_minus = 0.0;
};

// max(0, margin - (s+ - s-)); subgradient is zero in the inactive region.
HingeResult hinge_loss(double s_plus, double s_minus, double margin);

// ---------------------------------------------------------------------------
// Toy feature map
// ---------------------------------------------------------------------------

// Hand-crafted feature map over (instruction, response, quality hint). The
// quality hint is the latent task quality carried by fixture metadata; the
// remaining features are bias-correlated surface cues: normalized length and
// per-bias marker-token counts. The map is frozen (see assets/toy_features.json).
class FeatureMap {
public:
    static FeatureMap frozen_default();
    static FeatureMap from_json(const json& spec);
    json to_json() const;

    std::size_t dimension() const { return 2 + markers_.size(); }
    std::vector<std::string> feature_names() const;

    // features[0] = quality hint, features[1] = length_units / length_scale,
    // features[2..] = occurrence counts of each bias's marker strings.
    std::vector<double> features(const Response& response, double quality_hint) const;

    // Index of the marker feature for a bias, if that bias has one.
    std::optional<std::size_t> marker_feature_index(BiasType bias) const;

    const std::vector<std::pair<BiasType, std::vector<std::string>>>& markers() const {
        return markers_;
    }
    double length_scale() const { return length_scale_; }

private:
    double length_scale_ = 60.0;
    std::vector<std::pair<BiasType, std::vector<std::string>>> markers_;
};

// ---------------------------------------------------------------------------
// Toy models
// ---------------------------------------------------------------------------

struct ToyScorer {
    FeatureMap map = FeatureMap::frozen_default();
    std::vector<double> weights;  // dimension() entries

    double score(const Response& response, double quality_hint) const;

    json to_json() const;
    static ToyScorer from_json(const json& raw);
};

// Categorical policy over {pick first, pick second} for a displayed pair,
// parameterized by logits on the feature difference.
struct ToyPolicy {
    FeatureMap map = FeatureMap::frozen_default();
    std::vector<double> weights;

    // P(pick the first response).
    double prob_first(const std::vector<double>& feat_first,
                      const std::vector<double>& feat_second) const;

    json to_json() const;
    static ToyPolicy from_json(const json& raw);
};

// ---------------------------------------------------------------------------
// Training configuration
// ---------------------------------------------------------------------------

enum class ContrastiveMode { InfoNce, Hinge };

struct ContrastiveConfig {
    double temperature = 1.0;   // tau, InfoNCE only
    double margin = 1.0;        // m, hinge only
    int negative_count = 4;     // negatives per instance consumed in InfoNCE mode
    double learning_rate = 0.2;
    int iterations = 60;        // full passes over the data
    std::uint64_t seed = 1;
};

struct GrpoConfig {
    int group_size = 8;         // G
    double clip_eps = 0.2;      // epsilon
    double kl_coeff = 0.01;     // beta
    double std_floor = 1e-4;    // delta
    double learning_rate = 0.5;
    int iterations = 120;       // outer iterations (one pi_old snapshot each)
    int inner_steps = 2;        // gradient steps per snapshot
    std::uint64_t seed = 1;
};

// Extracts {chosen, rejected} quality hints from fixture corpus metadata
// (the "meta" object in the instance's extra keys). Absent hints -> 0.5.
std::pair<double, double> quality_hints(const PreferenceInstance& inst);

// ---------------------------------------------------------------------------
// Teacher reasoning traces
// ---------------------------------------------------------------------------

// Trace file format consumed by the SFT loss: JSON Lines, one record per
// teacher trace with {"id", "bias", "token_logprobs": [...]}. Producing the
// traces is an external step; this toolkit only defines and consumes the
// format.
struct TeacherTrace {
    std::string id;
    BiasType bias = BiasType::Length;
    std::vector<double> token_logprobs;
};

std::vector<TeacherTrace> read_trace_file(const std::string& path);

// Mean per-trace SFT negative log-likelihood over a trace set.
double sft_nll_over_traces(std::span<const TeacherTrace> traces);

// ---------------------------------------------------------------------------
// Training loops
// ---------------------------------------------------------------------------

// Gradient descent over the fixture set in input order. In InfoNce mode the
// loop contrasts r+ against r- and up to negative_count retained bias
// negatives; in Hinge mode only against r-. Zero iterations returns the
// zero-initialized scorer unchanged. Throws NonFiniteLoss with the iteration
// index if the loss diverges.
ToyScorer train_toy_scorer(const std::vector<augment::AugmentedInstance>& data,
                           const ContrastiveConfig& cfg, ContrastiveMode mode);

// GRPO over pair-judging examples derived from the augmented data: per
// instance, sample G verdicts from the snapshot policy, reward them per the
// accuracy/format scheme (format always right for the toy policy), standardize
// advantages within the group, and ascend the clipped surrogate with an exact
// categorical KL to the reference (initial) policy.
// reward_override replaces the accuracy reward when set (test seam).
ToyPolicy train_toy_policy(const std::vector<augment::AugmentedInstance>& data,
                           const GrpoConfig& cfg,
                           const std::function<double(bool)>& reward_override = nullptr);

// Mean probability the policy assigns to the label-matching verdict over the
// pair examples derived from `data` (expected accuracy reward).
double policy_expected_accuracy(const ToyPolicy& policy,
                                const std::vector<augment::AugmentedInstance>& data,
                                std::uint64_t seed);

// Total variation distance between two policies, averaged over the derived
// examples.
double policy_total_variation(const ToyPolicy& a, const ToyPolicy& b,
                              const std::vector<augment::AugmentedInstance>& data,
                              std::uint64_t seed);

// ---------------------------------------------------------------------------
// Toy bias-sensitivity evaluation
// ---------------------------------------------------------------------------

// Scores original and feature-emphasized pairs built from plain fixture
// instances and measures BSR per bias (argmax preference, ties -> Invalid).
struct ToyBsrResult {
    std::map<BiasType, std::optional<double>> per_bias;
    std::optional<double> overall;  // unweighted mean of defined per-bias BSRs
    double acc_ori = 0.0;
};

ToyBsrResult toy_scorer_bsr(const ToyScorer& scorer,
                            const std::vector<PreferenceInstance>& eval_set,
                            const std::vector<BiasType>& biases);

}  // namespace judgebias::objectives
