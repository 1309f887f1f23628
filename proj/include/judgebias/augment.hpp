// Bias-aware preference data construction: expand base preference pairs into
// set-structured instances with bias-conditioned rejected responses, then
// verify that the chosen response stays preferable to every generated
// negative. Discarded negatives stay in the record as the verification trail.
#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "judgebias/assets.hpp"
#include "judgebias/core.hpp"
#include "judgebias/http.hpp"
#include "judgebias/judges.hpp"

namespace judgebias::augment {

struct GeneratorUnavailable : std::runtime_error {
    explicit GeneratorUnavailable(const std::string& what)
        : std::runtime_error("generator unavailable: " + what) {}
};

struct GenerationRefused : std::runtime_error {
    explicit GenerationRefused(const std::string& instance_id)
        : std::runtime_error("generator returned empty output for instance " + instance_id) {}
};

// ---------------------------------------------------------------------------
// Negative generation
// ---------------------------------------------------------------------------

struct GenerationRequest {
    std::string instance_id;
    BiasType bias = BiasType::Authority;
    std::string instruction;   // q
    std::string chosen_text;   // r+, the response the negative must stay below
    std::string rejected_text; // r-, available to doubles
    std::string prompt;        // rendered per-bias template
};

class NegativeGenerator {
public:
    virtual ~NegativeGenerator() = default;
    virtual std::string generate(const GenerationRequest& request) = 0;
};

// Test double: returns r+ verbatim. The duplicate must be discarded by
// verification downstream.
class EchoGenerator : public NegativeGenerator {
public:
    std::string generate(const GenerationRequest& request) override;
};

// Test double: r- plus the bias marker token.
class MarkerGenerator : public NegativeGenerator {
public:
    std::string generate(const GenerationRequest& request) override;
};

// Desk-scale generator aligned with the toy feature map: like
// MarkerGenerator, but Length negatives are padded with filler and
// Gender/Race negatives carry the default identity cue, so every generated
// feature is visible to the frozen feature map.
class ToyFeatureGenerator : public NegativeGenerator {
public:
    std::string generate(const GenerationRequest& request) override;
};

class HttpGenerator : public NegativeGenerator {
public:
    explicit HttpGenerator(std::shared_ptr<http::ChatClient> client);
    std::string generate(const GenerationRequest& request) override;

private:
    std::shared_ptr<http::ChatClient> client_;
};

// Generation prompt template name, e.g. "generate_beauty".
std::string generation_template_id(BiasType bias);

// Eligible biases for generated negatives: superficial quality plus
// diversity. Context/presentation attributes come from the injector's
// deterministic manipulations instead.
bool generation_eligible(BiasType bias);
const std::vector<BiasType>& generation_biases();

// One generated response with the target feature emphasized. Throws
// GeneratorUnavailable / GenerationRefused; callers skip and log.
Response generate_bias_negative(const PreferenceInstance& base, BiasType bias,
                                NegativeGenerator& generator, const assets::AssetStore& store);

// ---------------------------------------------------------------------------
// Verification and assembly
// ---------------------------------------------------------------------------

enum class NegativeVerdict { Keep, Discard };

// Keep iff the verifier prefers r+ over the negative; Invalid verdicts and
// verbatim duplicates of r+ are Discarded.
NegativeVerdict verify_negative(const PreferenceInstance& base, const Response& negative,
                                judges::Judge& verifier);

struct BiasNegative {
    BiasType bias = BiasType::Authority;
    Response response;
    NegativeVerdict verdict = NegativeVerdict::Discard;
    std::optional<double> quality;  // fixture metadata hint, carried for the toy trainers
};

struct AugmentedInstance {
    std::string id;
    std::string instruction;   // q
    Response chosen;           // r+
    Response rejected;         // r-
    std::optional<double> chosen_quality;
    std::optional<double> rejected_quality;
    std::vector<BiasNegative> negatives;  // generation order, verification trail included

    std::size_t retained_count() const;
    bool excluded_from_training() const { return retained_count() == 0; }
};

// Uniform sample without replacement of `count` generation-eligible bias
// types, deterministic given (seed, instance id).
std::vector<BiasType> sample_bias_types(std::uint64_t seed, const std::string& instance_id,
                                        std::size_t count);

// Composes generation and verification for one base instance. q, r+ and r-
// are carried over byte-identically; failed generations are skipped and
// recorded in skipped_ids by the caller. An instance whose negatives are all
// discarded is still emitted, flagged by retained_count() == 0.
AugmentedInstance build_augmented(const PreferenceInstance& base,
                                  const std::vector<BiasType>& bias_sample,
                                  NegativeGenerator& generator, judges::Judge& verifier,
                                  const assets::AssetStore& store);

json encode_augmented(const AugmentedInstance& inst);
AugmentedInstance decode_augmented(const json& raw);

std::vector<AugmentedInstance> read_augmented_file(const std::string& path);
void write_augmented_file(const std::string& path, const std::vector<AugmentedInstance>& data);

}  // namespace judgebias::augment
