#include <doctest.h>

#include <set>

#include "judgebias/augment.hpp"
#include "judgebias/fixtures.hpp"
#include "test_http_util.hpp"

using namespace judgebias;
using namespace judgebias::augment;

namespace {

const assets::AssetStore& store() {
    static assets::AssetStore s(std::string(JUDGEBIAS_SOURCE_DIR) + "/assets");
    return s;
}

PreferenceInstance fixture_instance(std::uint64_t seed = 71) {
    fixtures::FixtureOptions options;
    options.count = 1;
    options.seed = seed;
    return fixtures::make_fixture_corpus(options)[0];
}

judges::SyntheticJudge oracle() {
    judges::SynthJudgeProfile profile;
    profile.base_accuracy = 1.0;
    profile.seed = 2;
    return judges::SyntheticJudge(profile);
}

}  // namespace

TEST_CASE("generation eligibility covers superficial quality and diversity only") {
    std::set<BiasType> eligible(generation_biases().begin(), generation_biases().end());
    CHECK(eligible.size() == 9);
    CHECK(eligible.count(BiasType::Beauty) == 1);
    CHECK(eligible.count(BiasType::Gender) == 1);
    CHECK(eligible.count(BiasType::Position) == 0);
    CHECK(eligible.count(BiasType::Bandwagon) == 0);
    CHECK(eligible.count(BiasType::SuperficialReflection) == 0);
}

TEST_CASE("generate_bias_negative renders the per-bias template") {
    auto base = fixture_instance();
    MarkerGenerator generator;
    auto negative = generate_bias_negative(base, BiasType::Beauty, generator, store());
    CHECK(negative.text == base.rejected.text + " " + marker_token(BiasType::Beauty));
    CHECK(negative.length_units == count_length_units(negative.text));

    CHECK_THROWS_AS(generate_bias_negative(base, BiasType::Position, generator, store()),
                    std::invalid_argument);
}

TEST_CASE("echo generator duplicates are discarded by verification") {
    auto base = fixture_instance();
    EchoGenerator generator;
    auto negative = generate_bias_negative(base, BiasType::Sentiment, generator, store());
    CHECK(negative.text == base.chosen.text);
    auto verifier = oracle();
    CHECK(verify_negative(base, negative, verifier) == NegativeVerdict::Discard);
}

TEST_CASE("verify_negative follows the verifier's preference") {
    auto base = fixture_instance();
    Response worse = Response::from_text(base.rejected.text + " (reworded)");

    auto keep = oracle();
    CHECK(verify_negative(base, worse, keep) == NegativeVerdict::Keep);

    struct PrefersNegative : judges::Judge {
        judges::PairwiseVerdict evaluate(const judges::JudgeInput&) override {
            return {Verdict::Rejected, "contrarian", 0};
        }
    } contrarian;
    CHECK(verify_negative(base, worse, contrarian) == NegativeVerdict::Discard);

    struct Garbled : judges::Judge {
        judges::PairwiseVerdict evaluate(const judges::JudgeInput&) override {
            return {Verdict::Invalid, "???", 0};
        }
    } garbled;
    // Invalid verdicts discard: no unverified negative reaches the output
    CHECK(verify_negative(base, worse, garbled) == NegativeVerdict::Discard);
}

TEST_CASE("sample_bias_types is deterministic, sized, and without replacement") {
    auto a = sample_bias_types(5, "inst-1", 4);
    auto b = sample_bias_types(5, "inst-1", 4);
    CHECK(a == b);
    CHECK(a.size() == 4);
    std::set<BiasType> unique(a.begin(), a.end());
    CHECK(unique.size() == a.size());
    for (BiasType bias : a) CHECK(generation_eligible(bias));

    auto other = sample_bias_types(5, "inst-2", 4);
    CHECK(sample_bias_types(5, "inst-2", 4) == other);

    // more than available caps at the eligible pool
    CHECK(sample_bias_types(5, "inst-3", 99).size() == generation_biases().size());
}

TEST_CASE("build_augmented keeps verified negatives with their trail") {
    auto base = fixture_instance(72);
    MarkerGenerator generator;
    auto verifier = oracle();
    auto sample = sample_bias_types(9, base.id, 3);

    auto augmented = build_augmented(base, sample, generator, verifier, store());
    CHECK(augmented.id == base.id);
    CHECK(augmented.chosen.text == base.chosen.text);      // r+ byte-identical
    CHECK(augmented.rejected.text == base.rejected.text);  // r- byte-identical
    CHECK(augmented.negatives.size() == 3);
    CHECK(augmented.retained_count() == 3);
    CHECK(!augmented.excluded_from_training());
    for (const auto& n : augmented.negatives) CHECK(n.verdict == NegativeVerdict::Keep);
    CHECK(augmented.chosen_quality.has_value());

    CHECK_THROWS_AS(build_augmented(base, {}, generator, verifier, store()),
                    std::invalid_argument);
}

TEST_CASE("build_augmented flags instances whose negatives are all discarded") {
    auto base = fixture_instance(73);
    EchoGenerator generator;  // every negative equals r+ and is discarded
    auto verifier = oracle();
    auto augmented =
        build_augmented(base, sample_bias_types(1, base.id, 2), generator, verifier, store());
    CHECK(augmented.negatives.size() == 2);
    CHECK(augmented.retained_count() == 0);
    CHECK(augmented.excluded_from_training());
}

TEST_CASE("partial verification keeps the trail for discarded negatives") {
    auto base = fixture_instance(74);
    MarkerGenerator generator;

    // Discards beauty negatives, keeps the rest.
    struct PickyJudge : judges::Judge {
        judges::PairwiseVerdict evaluate(const judges::JudgeInput& input) override {
            bool beauty = input.view->second.text.find(marker_token(BiasType::Beauty)) !=
                          std::string::npos;
            return {beauty ? Verdict::Rejected : Verdict::Chosen, "picky", 0};
        }
    } picky;

    std::vector<BiasType> sample = {BiasType::Beauty, BiasType::Authority, BiasType::Gender};
    auto augmented = build_augmented(base, sample, generator, picky, store());
    CHECK(augmented.negatives.size() == 3);
    CHECK(augmented.retained_count() == 2);
    CHECK(augmented.negatives[0].verdict == NegativeVerdict::Discard);
    CHECK(augmented.negatives[1].verdict == NegativeVerdict::Keep);
}

TEST_CASE("failed generations are skipped, not fatal") {
    auto base = fixture_instance(75);
    struct FlakyGenerator : NegativeGenerator {
        std::string generate(const GenerationRequest& request) override {
            if (request.bias == BiasType::Authority) throw GenerationRefused(request.instance_id);
            return request.rejected_text + " variant";
        }
    } flaky;
    auto verifier = oracle();
    std::vector<BiasType> sample = {BiasType::Authority, BiasType::Sentiment};
    auto augmented = build_augmented(base, sample, flaky, verifier, store());
    CHECK(augmented.negatives.size() == 1);
    CHECK(augmented.negatives[0].bias == BiasType::Sentiment);
}

TEST_CASE("augmented instances round-trip through JSONL") {
    auto base = fixture_instance(76);
    MarkerGenerator generator;
    auto verifier = oracle();
    auto augmented =
        build_augmented(base, sample_bias_types(4, base.id, 4), generator, verifier, store());

    json encoded = encode_augmented(augmented);
    auto back = decode_augmented(encoded);
    CHECK(encode_augmented(back) == encoded);
    CHECK(encoded["n"] == augmented.retained_count());
    CHECK(back.chosen_quality == augmented.chosen_quality);
    REQUIRE(back.negatives.size() == augmented.negatives.size());
    for (std::size_t i = 0; i < back.negatives.size(); ++i) {
        CHECK(back.negatives[i].bias == augmented.negatives[i].bias);
        CHECK(back.negatives[i].response.text == augmented.negatives[i].response.text);
    }
}
