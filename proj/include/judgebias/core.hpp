// Domain model: preference instances, the 12-type bias taxonomy, perturbed
// views, and judgment records. All types are immutable values after
// construction and safe to share across threads.
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace judgebias {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Verdicts and the bias taxonomy
// ---------------------------------------------------------------------------

// Unparseable judge output is data, not an exception; metrics count Invalid
// as an incorrect verdict.
enum class Verdict { Chosen, Rejected, Invalid };

enum class BiasType {
    Length,
    Authority,
    Beauty,
    Assertiveness,
    Sycophancy,
    Sentiment,
    Concreteness,
    SuperficialReflection,
    Bandwagon,
    Position,
    Gender,
    Race,
};

enum class BiasCategory { SuperficialQuality, Context, Presentation, Diversity };

inline constexpr std::array<BiasType, 12> kAllBiasTypes = {
    BiasType::Length,        BiasType::Authority, BiasType::Beauty,
    BiasType::Assertiveness, BiasType::Sycophancy, BiasType::Sentiment,
    BiasType::Concreteness,  BiasType::SuperficialReflection,
    BiasType::Bandwagon,     BiasType::Position,  BiasType::Gender,
    BiasType::Race,
};

BiasCategory classify_bias(BiasType bias);

// Stable lowercase identifier used in file names and serialized records.
std::string_view bias_slug(BiasType bias);
std::optional<BiasType> bias_from_slug(std::string_view slug);

// Abbreviated column header for report tables ("Len.", "Auth.", ...).
std::string_view bias_column_label(BiasType bias);

std::string_view category_name(BiasCategory category);

// Literal token used by the marker-style test doubles and counted by the toy
// feature map, e.g. "⟨BIAS:authority⟩".
std::string marker_token(BiasType bias);

struct Response;

// Desk-scale perturbation that makes a bias feature visible to the toy
// feature map: appends the marker token for most biases, pads with filler
// words for Length, prepends the default identity cue for Gender/Race.
Response emphasize_bias_feature(const Response& response, BiasType bias);

std::string_view verdict_name(Verdict v);
std::optional<Verdict> verdict_from_name(std::string_view name);

inline Verdict opposite(Verdict v) {
    if (v == Verdict::Chosen) return Verdict::Rejected;
    if (v == Verdict::Rejected) return Verdict::Chosen;
    return Verdict::Invalid;
}

// ---------------------------------------------------------------------------
// Responses and preference instances
// ---------------------------------------------------------------------------

// Whitespace-delimited token count. Tokenizer-independent and reproducible.
std::size_t count_length_units(std::string_view text);

struct Response {
    std::string text;
    std::size_t length_units = 0;  // always recomputed from text
    std::optional<std::string> identity_cue;

    static Response from_text(std::string text);

    bool operator==(const Response&) const = default;
};

struct PreferenceInstance {
    std::string id;
    std::string instruction;
    Response chosen;    // r+
    Response rejected;  // r-
    std::string source;
    // Unknown corpus keys, preserved verbatim on round-trip. Fixture corpora
    // carry latent quality metadata here (see objectives::quality_hints).
    json extra = json::object();
};

// ---------------------------------------------------------------------------
// Bias-injected views
// ---------------------------------------------------------------------------

// An ordered response pair as shown to a judge, plus optional judgment
// context: a preamble before the pair and an interstitial between the
// responses. Slot numbering ("Response 1"/"Response 2") follows this order.
struct PerturbedView {
    Response first;
    Response second;
    std::optional<std::string> preamble;
    std::optional<std::string> interstitial;
    bool first_is_chosen = true;

    const Response& chosen() const { return first_is_chosen ? first : second; }
    const Response& rejected() const { return first_is_chosen ? second : first; }
};

// Audit record: which strategy produced the injected view and from which
// template/rewriter, including raw rewriter output.
struct InjectionMeta {
    std::string strategy;
    std::optional<std::string> template_id;
    std::optional<std::string> template_hash;
    std::optional<std::string> cue;
    std::optional<std::string> raw_weaken;
    std::optional<std::string> raw_strengthen;
};

struct BiasedInstance {
    PreferenceInstance original;
    PerturbedView injected;
    BiasType bias = BiasType::Length;
    InjectionMeta meta;

    // The unperturbed presentation: chosen first, no context.
    PerturbedView original_view() const;
};

// ---------------------------------------------------------------------------
// Judgment records
// ---------------------------------------------------------------------------

struct JudgmentRecord {
    std::string instance_id;
    BiasType bias = BiasType::Length;
    Verdict label = Verdict::Chosen;
    Verdict verdict_orig = Verdict::Invalid;
    Verdict verdict_bias = Verdict::Invalid;
    std::optional<std::string> prompt_hash;  // version of the judging prompt asset
};

// ---------------------------------------------------------------------------
// Validation errors
// ---------------------------------------------------------------------------

struct CorpusError : std::runtime_error {
    std::string record_id;
    std::string field;
    CorpusError(std::string what, std::string id, std::string fld)
        : std::runtime_error(std::move(what)), record_id(std::move(id)), field(std::move(fld)) {}
};

struct EmptyInstruction : CorpusError {
    explicit EmptyInstruction(std::string id)
        : CorpusError("empty instruction in record '" + id + "'", std::move(id), "instruction") {}
};

struct DuplicateResponses : CorpusError {
    explicit DuplicateResponses(std::string id)
        : CorpusError("chosen and rejected responses are identical in record '" + id + "'",
                      std::move(id), "rejected") {}
};

struct MissingField : CorpusError {
    MissingField(std::string id, std::string fld)
        : CorpusError("record '" + id + "' is missing field \"" + fld + "\"", std::move(id),
                      std::move(fld)) {}
};

// ---------------------------------------------------------------------------
// Serialization (JSON Lines)
// ---------------------------------------------------------------------------

// Corpus format: one object per line with keys {"id","instruction","chosen",
// "rejected","source"}; unknown keys are preserved on round-trip.
PreferenceInstance validate_instance(const json& raw);
json encode_instance(const PreferenceInstance& inst);

json encode_biased(const BiasedInstance& bi);
BiasedInstance decode_biased(const json& raw);

json encode_record(const JudgmentRecord& rec);
JudgmentRecord decode_record(const json& raw);

std::vector<PreferenceInstance> read_corpus(std::istream& in);
std::vector<PreferenceInstance> read_corpus_file(const std::string& path);
void write_corpus(std::ostream& out, const std::vector<PreferenceInstance>& corpus);

std::vector<BiasedInstance> read_biased_file(const std::string& path);
void write_biased_file(const std::string& path, const std::vector<BiasedInstance>& instances);

std::vector<JudgmentRecord> read_records_file(const std::string& path);
void write_records_file(const std::string& path, const std::vector<JudgmentRecord>& records);

}  // namespace judgebias
