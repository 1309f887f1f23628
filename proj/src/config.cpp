#include "judgebias/config.hpp"

#include <cstdlib>
#include <fstream>

#include "judgebias/assets.hpp"

namespace judgebias::config {

namespace {

std::string interpolate_string(const std::string& value) {
    std::string out;
    std::size_t pos = 0;
    while (pos < value.size()) {
        std::size_t start = value.find("${", pos);
        if (start == std::string::npos) {
            out.append(value, pos, std::string::npos);
            break;
        }
        std::size_t end = value.find('}', start + 2);
        if (end == std::string::npos) {
            out.append(value, pos, std::string::npos);
            break;
        }
        out.append(value, pos, start - pos);
        std::string name = value.substr(start + 2, end - start - 2);
        const char* env = std::getenv(name.c_str());
        if (!env)
            throw UsageError("environment variable " + name + " referenced by config is not set");
        out += env;
        pos = end + 1;
    }
    return out;
}

}  // namespace

json interpolate_env(const json& value) {
    if (value.is_string()) return interpolate_string(value.get<std::string>());
    if (value.is_object()) {
        json out = json::object();
        for (auto it = value.begin(); it != value.end(); ++it)
            out[it.key()] = interpolate_env(it.value());
        return out;
    }
    if (value.is_array()) {
        json out = json::array();
        for (const auto& v : value) out.push_back(interpolate_env(v));
        return out;
    }
    return value;
}

json load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file: " + path);
    json raw;
    try {
        in >> raw;
    } catch (const json::parse_error& e) {
        throw UsageError("config file " + path + " is not valid JSON: " + e.what());
    }
    return interpolate_env(raw);
}

std::string config_hash(const json& config) {
    json canonical = config;
    canonical.erase("output_dir");
    return assets::content_hash(canonical.dump());
}

RunConfig RunConfig::from_json(json raw) {
    RunConfig cfg;
    cfg.raw = std::move(raw);
    cfg.corpus_path = cfg.raw.value("corpus", std::string{});
    cfg.output_dir = cfg.raw.value("output_dir", std::string("out"));
    cfg.assets_dir = cfg.raw.value("assets_dir", std::string("assets"));
    cfg.seed = cfg.raw.value("seed", std::uint64_t{0});
    cfg.concurrency = cfg.raw.value("concurrency", 4);
    if (cfg.concurrency < 1) throw UsageError("concurrency must be at least 1");

    if (cfg.raw.contains("biases")) {
        for (const auto& slug : cfg.raw["biases"]) {
            auto bias = bias_from_slug(slug.get<std::string>());
            if (!bias) throw UsageError("unknown bias in config: " + slug.get<std::string>());
            cfg.biases.push_back(*bias);
        }
        if (cfg.biases.empty()) throw UsageError("config bias list is empty");
    } else {
        cfg.biases.assign(kAllBiasTypes.begin(), kAllBiasTypes.end());
    }

    const json& sampling = cfg.section("sampling");
    cfg.target_count = sampling.value("target_count", std::size_t{500});
    cfg.max_len_ratio = sampling.value("max_len_ratio", 2.0);
    if (cfg.target_count < 1) throw UsageError("sampling.target_count must be at least 1");
    if (!(cfg.max_len_ratio > 0.0)) throw UsageError("sampling.max_len_ratio must be positive");

    cfg.hash = config_hash(cfg.raw);
    return cfg;
}

RunConfig RunConfig::from_file(const std::string& path) {
    return from_json(load_config_file(path));
}

const json& RunConfig::section(const char* name) const {
    static const json empty = json::object();
    auto it = raw.find(name);
    return it == raw.end() ? empty : *it;
}

http::EndpointConfig endpoint_from_json(const json& spec) {
    http::EndpointConfig cfg;
    if (!spec.contains("base_url")) throw UsageError("endpoint config needs base_url");
    cfg.base_url = spec.at("base_url").get<std::string>();
    cfg.model = spec.value("model", std::string{});
    cfg.api_key_env = spec.value("api_key_env", std::string{});
    if (spec.contains("path")) cfg.path = spec.at("path").get<std::string>();
    cfg.max_attempts = spec.value("max_attempts", 3);
    cfg.backoff_base_sec = spec.value("backoff_base_sec", 0.5);
    cfg.timeout_sec = spec.value("timeout_sec", 60);
    cfg.temperature = spec.value("temperature", 0.0);
    return cfg;
}

namespace {

judges::SynthJudgeProfile profile_from_json(const json& spec) {
    judges::SynthJudgeProfile profile;
    profile.base_accuracy = spec.value("base_accuracy", 1.0);
    profile.seed = spec.value("seed", std::uint64_t{0});
    if (spec.contains("susceptibility")) {
        for (auto it = spec["susceptibility"].begin(); it != spec["susceptibility"].end(); ++it) {
            auto bias = bias_from_slug(it.key());
            if (!bias) throw UsageError("unknown bias in susceptibility map: " + it.key());
            profile.susceptibility[*bias] = it.value().get<double>();
        }
    }
    profile.validate();
    return profile;
}

}  // namespace

std::unique_ptr<judges::Judge> make_judge(const json& spec, const assets::AssetStore& store) {
    std::string kind = spec.value("kind", std::string("synthetic"));
    if (kind == "synthetic") return std::make_unique<judges::SyntheticJudge>(profile_from_json(spec));
    if (kind == "first_slot") return std::make_unique<judges::FirstSlotJudge>();
    if (kind == "chat") {
        auto client = std::make_shared<http::ChatClient>(endpoint_from_json(spec.at("endpoint")));
        std::string tpl = store.has_prompt("judge_pairwise") ? store.prompt("judge_pairwise")
                                                             : judges::default_pairwise_prompt();
        return std::make_unique<judges::ChatJudge>(std::move(client), std::move(tpl));
    }
    if (kind == "score") {
        auto client = std::make_shared<http::ScoreClient>(endpoint_from_json(spec.at("endpoint")));
        return std::make_unique<judges::DiscriminativeJudge>(
            std::make_shared<judges::HttpScorer>(std::move(client)));
    }
    throw UsageError("unknown judge kind: " + kind);
}

std::unique_ptr<injector::Rewriter> make_rewriter(const json& spec) {
    std::string kind = spec.value("kind", std::string("marker"));
    if (kind == "echo") return std::make_unique<injector::EchoRewriter>();
    if (kind == "marker") return std::make_unique<injector::MarkerRewriter>();
    if (kind == "http") {
        auto client = std::make_shared<http::ChatClient>(endpoint_from_json(spec.at("endpoint")));
        return std::make_unique<injector::HttpRewriter>(std::move(client));
    }
    throw UsageError("unknown rewriter kind: " + kind);
}

std::unique_ptr<augment::NegativeGenerator> make_generator(const json& spec) {
    std::string kind = spec.value("kind", std::string("toy_feature"));
    if (kind == "echo") return std::make_unique<augment::EchoGenerator>();
    if (kind == "marker") return std::make_unique<augment::MarkerGenerator>();
    if (kind == "toy_feature") return std::make_unique<augment::ToyFeatureGenerator>();
    if (kind == "http") {
        auto client = std::make_shared<http::ChatClient>(endpoint_from_json(spec.at("endpoint")));
        return std::make_unique<augment::HttpGenerator>(std::move(client));
    }
    throw UsageError("unknown generator kind: " + kind);
}

}  // namespace judgebias::config
