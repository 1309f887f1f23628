// Run configuration: a JSON file with environment-variable interpolation for
// secrets, plus factories that turn endpoint/judge/rewriter specs into
// working adapters. The config hash excludes filesystem locations so
// identical semantic configs hash identically.
#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "judgebias/augment.hpp"
#include "judgebias/core.hpp"
#include "judgebias/http.hpp"
#include "judgebias/injector.hpp"
#include "judgebias/judges.hpp"

namespace judgebias::config {

// Reported to the user as a usage problem (exit code 2).
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Replaces ${NAME} occurrences in every string value with the environment
// variable's content; an unset variable is a usage error.
json interpolate_env(const json& value);

json load_config_file(const std::string& path);

// Hash of the canonical config with "output_dir" removed, so re-running the
// same pipeline into a different directory yields byte-identical artifacts.
std::string config_hash(const json& config);

struct RunConfig {
    json raw;
    std::string corpus_path;
    std::string output_dir = "out";
    std::string assets_dir = "assets";
    std::uint64_t seed = 0;
    int concurrency = 4;
    std::vector<BiasType> biases;  // defaults to all 12
    std::size_t target_count = 500;
    double max_len_ratio = 2.0;
    std::string hash;

    static RunConfig from_json(json raw);
    static RunConfig from_file(const std::string& path);

    const json& section(const char* name) const;  // empty object when absent
};

http::EndpointConfig endpoint_from_json(const json& spec);

// kind: "synthetic" (base_accuracy / susceptibility / seed), "first_slot",
// "chat" (endpoint + judging prompt asset), or "score" (endpoint).
std::unique_ptr<judges::Judge> make_judge(const json& spec, const assets::AssetStore& store);

// kind: "echo", "marker", or "http".
std::unique_ptr<injector::Rewriter> make_rewriter(const json& spec);

// kind: "echo", "marker", "toy_feature", or "http".
std::unique_ptr<augment::NegativeGenerator> make_generator(const json& spec);

}  // namespace judgebias::config
