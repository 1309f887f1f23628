#include "judgebias/augment.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "judgebias/rng.hpp"

namespace judgebias::augment {

// ---------------------------------------------------------------------------
// Generators
// ---------------------------------------------------------------------------

std::string EchoGenerator::generate(const GenerationRequest& request) {
    return request.chosen_text;
}

std::string MarkerGenerator::generate(const GenerationRequest& request) {
    return request.rejected_text + " " + marker_token(request.bias);
}

std::string ToyFeatureGenerator::generate(const GenerationRequest& request) {
    return emphasize_bias_feature(Response::from_text(request.rejected_text), request.bias).text;
}

HttpGenerator::HttpGenerator(std::shared_ptr<http::ChatClient> client)
    : client_(std::move(client)) {}

std::string HttpGenerator::generate(const GenerationRequest& request) {
    std::string raw;
    try {
        raw = client_->complete("You write plausible but subtly flawed responses.",
                                request.prompt);
    } catch (const http::TransportError& e) {
        throw GeneratorUnavailable(e.what());
    }
    std::string trimmed = raw;
    auto not_space = [](unsigned char c) { return !std::isspace(c); };
    trimmed.erase(trimmed.begin(), std::find_if(trimmed.begin(), trimmed.end(), not_space));
    trimmed.erase(std::find_if(trimmed.rbegin(), trimmed.rend(), not_space).base(),
                  trimmed.end());
    if (trimmed.empty()) throw GenerationRefused(request.instance_id);
    return trimmed;
}

std::string generation_template_id(BiasType bias) {
    return "generate_" + std::string(bias_slug(bias));
}

bool generation_eligible(BiasType bias) {
    BiasCategory c = classify_bias(bias);
    return c == BiasCategory::SuperficialQuality || c == BiasCategory::Diversity;
}

const std::vector<BiasType>& generation_biases() {
    static const std::vector<BiasType> biases = [] {
        std::vector<BiasType> out;
        for (BiasType b : kAllBiasTypes) {
            if (generation_eligible(b)) out.push_back(b);
        }
        return out;
    }();
    return biases;
}

Response generate_bias_negative(const PreferenceInstance& base, BiasType bias,
                                NegativeGenerator& generator, const assets::AssetStore& store) {
    if (!generation_eligible(bias))
        throw std::invalid_argument("bias not eligible for negative generation: " +
                                    std::string(bias_slug(bias)));
    GenerationRequest req;
    req.instance_id = base.id;
    req.bias = bias;
    req.instruction = base.instruction;
    req.chosen_text = base.chosen.text;
    req.rejected_text = base.rejected.text;
    req.prompt = assets::render_template(store.prompt(generation_template_id(bias)),
                                         {{"instruction", base.instruction},
                                          {"response", base.chosen.text}});
    return Response::from_text(generator.generate(req));
}

// ---------------------------------------------------------------------------
// Verification
// ---------------------------------------------------------------------------

NegativeVerdict verify_negative(const PreferenceInstance& base, const Response& negative,
                                judges::Judge& verifier) {
    // A verbatim copy of r+ cannot be strictly worse; discard without asking.
    if (negative.text == base.chosen.text) return NegativeVerdict::Discard;

    PerturbedView view;
    view.first = base.chosen;
    view.second = negative;
    view.first_is_chosen = true;

    judges::JudgeInput input;
    input.instance_id = base.id;
    input.injected_view = false;
    input.instruction = base.instruction;
    input.view = &view;

    Verdict verdict = verifier.evaluate(input).choice;
    return verdict == Verdict::Chosen ? NegativeVerdict::Keep : NegativeVerdict::Discard;
}

// ---------------------------------------------------------------------------
// Assembly
// ---------------------------------------------------------------------------

std::size_t AugmentedInstance::retained_count() const {
    return static_cast<std::size_t>(
        std::count_if(negatives.begin(), negatives.end(),
                      [](const BiasNegative& n) { return n.verdict == NegativeVerdict::Keep; }));
}

std::vector<BiasType> sample_bias_types(std::uint64_t seed, const std::string& instance_id,
                                        std::size_t count) {
    std::vector<BiasType> pool = generation_biases();
    rng::Stream stream(rng::keyed_u64(seed, instance_id + "/bias_sample"));
    std::size_t take = std::min(count, pool.size());
    for (std::size_t i = 0; i < take; ++i) {
        std::size_t j = i + static_cast<std::size_t>(stream.below(pool.size() - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(take);
    return pool;
}

namespace {

std::optional<double> negative_quality_hint(const PreferenceInstance& base) {
    // Marker-style negatives are derived from r-, so they inherit its latent
    // quality when the fixture metadata provides one.
    if (base.extra.contains("meta") && base.extra["meta"].contains("rejected_quality"))
        return base.extra["meta"]["rejected_quality"].get<double>();
    return std::nullopt;
}

}  // namespace

AugmentedInstance build_augmented(const PreferenceInstance& base,
                                  const std::vector<BiasType>& bias_sample,
                                  NegativeGenerator& generator, judges::Judge& verifier,
                                  const assets::AssetStore& store) {
    if (bias_sample.empty()) throw std::invalid_argument("bias_sample must be non-empty");

    AugmentedInstance out;
    out.id = base.id;
    out.instruction = base.instruction;
    out.chosen = base.chosen;
    out.rejected = base.rejected;
    if (base.extra.contains("meta")) {
        const json& meta = base.extra["meta"];
        if (meta.contains("chosen_quality"))
            out.chosen_quality = meta["chosen_quality"].get<double>();
        if (meta.contains("rejected_quality"))
            out.rejected_quality = meta["rejected_quality"].get<double>();
    }

    for (BiasType bias : bias_sample) {
        BiasNegative negative;
        negative.bias = bias;
        try {
            negative.response = generate_bias_negative(base, bias, generator, store);
        } catch (const GeneratorUnavailable&) {
            continue;  // skipped, reduces yield
        } catch (const GenerationRefused&) {
            continue;
        }
        negative.verdict = verify_negative(base, negative.response, verifier);
        negative.quality = negative_quality_hint(base);
        out.negatives.push_back(std::move(negative));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

json encode_augmented(const AugmentedInstance& inst) {
    json negatives = json::array();
    for (const auto& n : inst.negatives) {
        json j{{"bias", std::string(bias_slug(n.bias))},
               {"text", n.response.text},
               {"verdict", n.verdict == NegativeVerdict::Keep ? "keep" : "discard"}};
        if (n.quality) j["quality"] = *n.quality;
        negatives.push_back(j);
    }
    json out{{"id", inst.id},
             {"instruction", inst.instruction},
             {"chosen", inst.chosen.text},
             {"rejected", inst.rejected.text},
             {"negatives", negatives},
             {"n", inst.retained_count()}};
    if (inst.chosen_quality) out["chosen_quality"] = *inst.chosen_quality;
    if (inst.rejected_quality) out["rejected_quality"] = *inst.rejected_quality;
    return out;
}

AugmentedInstance decode_augmented(const json& raw) {
    AugmentedInstance inst;
    inst.id = raw.at("id").get<std::string>();
    inst.instruction = raw.at("instruction").get<std::string>();
    inst.chosen = Response::from_text(raw.at("chosen").get<std::string>());
    inst.rejected = Response::from_text(raw.at("rejected").get<std::string>());
    if (raw.contains("chosen_quality")) inst.chosen_quality = raw.at("chosen_quality").get<double>();
    if (raw.contains("rejected_quality"))
        inst.rejected_quality = raw.at("rejected_quality").get<double>();
    for (const auto& j : raw.at("negatives")) {
        BiasNegative n;
        auto bias = bias_from_slug(j.at("bias").get<std::string>());
        if (!bias) throw std::runtime_error("unknown bias slug in augmented instance " + inst.id);
        n.bias = *bias;
        n.response = Response::from_text(j.at("text").get<std::string>());
        n.verdict = j.at("verdict").get<std::string>() == "keep" ? NegativeVerdict::Keep
                                                                 : NegativeVerdict::Discard;
        if (j.contains("quality")) n.quality = j.at("quality").get<double>();
        inst.negatives.push_back(std::move(n));
    }
    return inst;
}

std::vector<AugmentedInstance> read_augmented_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    std::vector<AugmentedInstance> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        out.push_back(decode_augmented(json::parse(line)));
    }
    return out;
}

void write_augmented_file(const std::string& path, const std::vector<AugmentedInstance>& data) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    for (const auto& inst : data) out << encode_augmented(inst).dump() << "\n";
}

}  // namespace judgebias::augment
