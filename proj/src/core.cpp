#include "judgebias/core.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

namespace judgebias {

BiasCategory classify_bias(BiasType bias) {
    switch (bias) {
        case BiasType::Length:
        case BiasType::Authority:
        case BiasType::Beauty:
        case BiasType::Assertiveness:
        case BiasType::Sycophancy:
        case BiasType::Sentiment:
        case BiasType::Concreteness:
            return BiasCategory::SuperficialQuality;
        case BiasType::SuperficialReflection:
        case BiasType::Bandwagon:
            return BiasCategory::Context;
        case BiasType::Position:
            return BiasCategory::Presentation;
        case BiasType::Gender:
        case BiasType::Race:
            return BiasCategory::Diversity;
    }
    throw std::logic_error("unreachable: unknown BiasType");
}

std::string_view bias_slug(BiasType bias) {
    switch (bias) {
        case BiasType::Length: return "length";
        case BiasType::Authority: return "authority";
        case BiasType::Beauty: return "beauty";
        case BiasType::Assertiveness: return "assertiveness";
        case BiasType::Sycophancy: return "sycophancy";
        case BiasType::Sentiment: return "sentiment";
        case BiasType::Concreteness: return "concreteness";
        case BiasType::SuperficialReflection: return "superficial_reflection";
        case BiasType::Bandwagon: return "bandwagon";
        case BiasType::Position: return "position";
        case BiasType::Gender: return "gender";
        case BiasType::Race: return "race";
    }
    throw std::logic_error("unreachable: unknown BiasType");
}

std::optional<BiasType> bias_from_slug(std::string_view slug) {
    for (BiasType b : kAllBiasTypes) {
        if (bias_slug(b) == slug) return b;
    }
    return std::nullopt;
}

std::string_view bias_column_label(BiasType bias) {
    switch (bias) {
        case BiasType::Length: return "Len.";
        case BiasType::Authority: return "Auth.";
        case BiasType::Beauty: return "Beaut.";
        case BiasType::Assertiveness: return "Assert.";
        case BiasType::Sycophancy: return "Syc.";
        case BiasType::Sentiment: return "Sent.";
        case BiasType::Concreteness: return "Conc.";
        case BiasType::SuperficialReflection: return "Refl.";
        case BiasType::Bandwagon: return "Band.";
        case BiasType::Position: return "Pos.";
        case BiasType::Gender: return "Gen.";
        case BiasType::Race: return "Race.";
    }
    throw std::logic_error("unreachable: unknown BiasType");
}

std::string marker_token(BiasType bias) {
    return "\xE2\x9F\xA8" "BIAS:" + std::string(bias_slug(bias)) + "\xE2\x9F\xA9";
}

Response emphasize_bias_feature(const Response& response, BiasType bias) {
    switch (bias) {
        case BiasType::Length: {
            std::string text = response.text;
            for (int i = 0; i < 8; ++i)
                text += " To elaborate further, the detailed reasoning above covers every case.";
            return Response::from_text(text);
        }
        case BiasType::Gender:
            return Response::from_text("I am a woman. " + response.text);
        case BiasType::Race:
            return Response::from_text("I am black. " + response.text);
        default: {
            // Explicit incorporation: stronger than the incidental style
            // markers the fixture corpus puts on chosen responses.
            std::string text = response.text;
            for (int i = 0; i < 3; ++i) text += " " + marker_token(bias);
            return Response::from_text(text);
        }
    }
}

std::string_view category_name(BiasCategory category) {
    switch (category) {
        case BiasCategory::SuperficialQuality: return "superficial_quality";
        case BiasCategory::Context: return "context";
        case BiasCategory::Presentation: return "presentation";
        case BiasCategory::Diversity: return "diversity";
    }
    throw std::logic_error("unreachable: unknown BiasCategory");
}

std::string_view verdict_name(Verdict v) {
    switch (v) {
        case Verdict::Chosen: return "chosen";
        case Verdict::Rejected: return "rejected";
        case Verdict::Invalid: return "invalid";
    }
    throw std::logic_error("unreachable: unknown Verdict");
}

std::optional<Verdict> verdict_from_name(std::string_view name) {
    if (name == "chosen") return Verdict::Chosen;
    if (name == "rejected") return Verdict::Rejected;
    if (name == "invalid") return Verdict::Invalid;
    return std::nullopt;
}

std::size_t count_length_units(std::string_view text) {
    std::size_t count = 0;
    bool in_token = false;
    for (char c : text) {
        bool ws = std::isspace(static_cast<unsigned char>(c)) != 0;
        if (!ws && !in_token) ++count;
        in_token = !ws;
    }
    return count;
}

Response Response::from_text(std::string text) {
    Response r;
    r.length_units = count_length_units(text);
    r.text = std::move(text);
    return r;
}

PerturbedView BiasedInstance::original_view() const {
    PerturbedView v;
    v.first = original.chosen;
    v.second = original.rejected;
    v.first_is_chosen = true;
    return v;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace {

constexpr std::array<std::string_view, 5> kCorpusKeys = {"id", "instruction", "chosen", "rejected",
                                                         "source"};

std::string require_string(const json& raw, const std::string& id, const char* key) {
    auto it = raw.find(key);
    if (it == raw.end() || it->is_null()) throw MissingField(id, key);
    if (!it->is_string()) throw MissingField(id, key);
    return it->get<std::string>();
}

json encode_response(const Response& r) {
    json j{{"text", r.text}};
    if (r.identity_cue) j["identity_cue"] = *r.identity_cue;
    return j;
}

Response decode_response(const json& raw) {
    Response r = Response::from_text(raw.at("text").get<std::string>());
    if (raw.contains("identity_cue")) r.identity_cue = raw.at("identity_cue").get<std::string>();
    return r;
}

}  // namespace

PreferenceInstance validate_instance(const json& raw) {
    std::string id = raw.value("id", std::string{});
    if (id.empty()) throw MissingField("<unknown>", "id");

    PreferenceInstance inst;
    inst.id = id;
    inst.instruction = require_string(raw, id, "instruction");
    inst.chosen = Response::from_text(require_string(raw, id, "chosen"));
    inst.rejected = Response::from_text(require_string(raw, id, "rejected"));
    inst.source = raw.value("source", std::string{});

    if (inst.instruction.empty()) throw EmptyInstruction(id);
    if (inst.chosen.text == inst.rejected.text) throw DuplicateResponses(id);

    for (auto it = raw.begin(); it != raw.end(); ++it) {
        bool known = false;
        for (auto key : kCorpusKeys) {
            if (it.key() == key) { known = true; break; }
        }
        if (!known) inst.extra[it.key()] = it.value();
    }
    return inst;
}

json encode_instance(const PreferenceInstance& inst) {
    json j = inst.extra;
    j["id"] = inst.id;
    j["instruction"] = inst.instruction;
    j["chosen"] = inst.chosen.text;
    j["rejected"] = inst.rejected.text;
    j["source"] = inst.source;
    return j;
}

json encode_biased(const BiasedInstance& bi) {
    json view{{"first", encode_response(bi.injected.first)},
              {"second", encode_response(bi.injected.second)},
              {"first_is_chosen", bi.injected.first_is_chosen}};
    if (bi.injected.preamble) view["preamble"] = *bi.injected.preamble;
    if (bi.injected.interstitial) view["interstitial"] = *bi.injected.interstitial;

    json meta{{"strategy", bi.meta.strategy}};
    if (bi.meta.template_id) meta["template_id"] = *bi.meta.template_id;
    if (bi.meta.template_hash) meta["template_hash"] = *bi.meta.template_hash;
    if (bi.meta.cue) meta["cue"] = *bi.meta.cue;
    if (bi.meta.raw_weaken) meta["raw_weaken"] = *bi.meta.raw_weaken;
    if (bi.meta.raw_strengthen) meta["raw_strengthen"] = *bi.meta.raw_strengthen;

    return json{{"bias", std::string(bias_slug(bi.bias))},
                {"original", encode_instance(bi.original)},
                {"injected", view},
                {"injection_meta", meta}};
}

BiasedInstance decode_biased(const json& raw) {
    BiasedInstance bi;
    auto bias = bias_from_slug(raw.at("bias").get<std::string>());
    if (!bias) throw std::runtime_error("unknown bias slug: " + raw.at("bias").get<std::string>());
    bi.bias = *bias;
    bi.original = validate_instance(raw.at("original"));

    const json& view = raw.at("injected");
    bi.injected.first = decode_response(view.at("first"));
    bi.injected.second = decode_response(view.at("second"));
    bi.injected.first_is_chosen = view.at("first_is_chosen").get<bool>();
    if (view.contains("preamble")) bi.injected.preamble = view.at("preamble").get<std::string>();
    if (view.contains("interstitial"))
        bi.injected.interstitial = view.at("interstitial").get<std::string>();

    const json& meta = raw.at("injection_meta");
    bi.meta.strategy = meta.value("strategy", std::string{});
    if (meta.contains("template_id")) bi.meta.template_id = meta.at("template_id").get<std::string>();
    if (meta.contains("template_hash"))
        bi.meta.template_hash = meta.at("template_hash").get<std::string>();
    if (meta.contains("cue")) bi.meta.cue = meta.at("cue").get<std::string>();
    if (meta.contains("raw_weaken")) bi.meta.raw_weaken = meta.at("raw_weaken").get<std::string>();
    if (meta.contains("raw_strengthen"))
        bi.meta.raw_strengthen = meta.at("raw_strengthen").get<std::string>();
    return bi;
}

json encode_record(const JudgmentRecord& rec) {
    json j{{"instance_id", rec.instance_id},
           {"bias", std::string(bias_slug(rec.bias))},
           {"label", std::string(verdict_name(rec.label))},
           {"verdict_orig", std::string(verdict_name(rec.verdict_orig))},
           {"verdict_bias", std::string(verdict_name(rec.verdict_bias))}};
    if (rec.prompt_hash) j["prompt_hash"] = *rec.prompt_hash;
    return j;
}

JudgmentRecord decode_record(const json& raw) {
    JudgmentRecord rec;
    rec.instance_id = raw.at("instance_id").get<std::string>();
    auto bias = bias_from_slug(raw.at("bias").get<std::string>());
    if (!bias) throw std::runtime_error("unknown bias slug in record " + rec.instance_id);
    rec.bias = *bias;
    auto get_verdict = [&](const char* key) {
        auto v = verdict_from_name(raw.at(key).get<std::string>());
        if (!v) throw std::runtime_error(std::string("bad verdict in record field ") + key);
        return *v;
    };
    rec.label = get_verdict("label");
    rec.verdict_orig = get_verdict("verdict_orig");
    rec.verdict_bias = get_verdict("verdict_bias");
    if (raw.contains("prompt_hash")) rec.prompt_hash = raw.at("prompt_hash").get<std::string>();
    return rec;
}

// ---------------------------------------------------------------------------
// JSONL files
// ---------------------------------------------------------------------------

namespace {

template <typename T, typename Decode>
std::vector<T> read_jsonl(std::istream& in, Decode decode) {
    std::vector<T> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            out.push_back(decode(json::parse(line)));
        } catch (const json::parse_error& e) {
            throw std::runtime_error("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    return in;
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path, std::ios::binary);  // binary: byte-stable output on all platforms
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    return out;
}

}  // namespace

std::vector<PreferenceInstance> read_corpus(std::istream& in) {
    return read_jsonl<PreferenceInstance>(in, [](const json& j) { return validate_instance(j); });
}

std::vector<PreferenceInstance> read_corpus_file(const std::string& path) {
    auto in = open_input(path);
    try {
        return read_corpus(in);
    } catch (const std::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

void write_corpus(std::ostream& out, const std::vector<PreferenceInstance>& corpus) {
    for (const auto& inst : corpus) out << encode_instance(inst).dump() << "\n";
}

std::vector<BiasedInstance> read_biased_file(const std::string& path) {
    auto in = open_input(path);
    try {
        return read_jsonl<BiasedInstance>(in, [](const json& j) { return decode_biased(j); });
    } catch (const std::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

void write_biased_file(const std::string& path, const std::vector<BiasedInstance>& instances) {
    auto out = open_output(path);
    for (const auto& bi : instances) out << encode_biased(bi).dump() << "\n";
}

std::vector<JudgmentRecord> read_records_file(const std::string& path) {
    auto in = open_input(path);
    try {
        return read_jsonl<JudgmentRecord>(in, [](const json& j) { return decode_record(j); });
    } catch (const std::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

void write_records_file(const std::string& path, const std::vector<JudgmentRecord>& records) {
    auto out = open_output(path);
    for (const auto& rec : records) out << encode_record(rec).dump() << "\n";
}

}  // namespace judgebias
