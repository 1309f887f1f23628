#include <doctest.h>

#include <atomic>

#include "judgebias/fixtures.hpp"
#include "judgebias/injector.hpp"
#include "judgebias/judges.hpp"
#include "judgebias/metrics.hpp"
#include "test_http_util.hpp"

using namespace judgebias;
using namespace judgebias::judges;

namespace {

PreferenceInstance make_instance(const std::string& id) {
    json raw{{"id", id},
             {"instruction", "Which is larger, 0.9 or 0.11?"},
             {"chosen", "0.9 > 0.11."},
             {"rejected", "0.11 > 0.9."},
             {"source", "unit"}};
    return validate_instance(raw);
}

std::string replace_all(std::string text, const std::string& from, const std::string& to) {
    std::size_t pos = 0;
    while ((pos = text.find(from, pos)) != std::string::npos) {
        text.replace(pos, from.size(), to);
        pos += to.size();
    }
    return text;
}

}  // namespace

TEST_CASE("parse_slot extracts the last final-answer digit") {
    CHECK(parse_slot("...reasoning... Final answer: 1") == SlotParse::First);
    CHECK(parse_slot("...reasoning... Final answer: 2") == SlotParse::Second);
    CHECK(parse_slot("final answer:2") == SlotParse::Second);
    CHECK(parse_slot("FINAL ANSWER - 1") == SlotParse::First);
    // the last marker wins
    CHECK(parse_slot("Final answer: 1 ... wait. Final answer: 2") == SlotParse::Second);
    // standalone digits only
    CHECK(parse_slot("Final answer: 12") == SlotParse::Invalid);
    CHECK(parse_slot("Final answer: 3") == SlotParse::Invalid);
    // no marker at all
    CHECK(parse_slot("I prefer the first response.") == SlotParse::Invalid);
    CHECK(parse_slot("") == SlotParse::Invalid);
}

TEST_CASE("slot picks map through the view's chosen slot") {
    CHECK(slot_to_verdict(SlotParse::First, true) == Verdict::Chosen);
    CHECK(slot_to_verdict(SlotParse::First, false) == Verdict::Rejected);
    CHECK(slot_to_verdict(SlotParse::Second, true) == Verdict::Rejected);
    CHECK(slot_to_verdict(SlotParse::Second, false) == Verdict::Chosen);
    CHECK(slot_to_verdict(SlotParse::Invalid, true) == Verdict::Invalid);
}

TEST_CASE("pairwise prompt renders both slots with identical scaffolding") {
    PerturbedView ab;
    ab.first = Response::from_text("PAYLOAD_A");
    ab.second = Response::from_text("PAYLOAD_B");
    PerturbedView ba;
    ba.first = Response::from_text("PAYLOAD_B");
    ba.second = Response::from_text("PAYLOAD_A");

    std::string r1 = render_pairwise_prompt(default_pairwise_prompt(), "instr", ab);
    std::string r2 = render_pairwise_prompt(default_pairwise_prompt(), "instr", ba);

    std::string canon1 = replace_all(replace_all(r1, "PAYLOAD_A", "<P1>"), "PAYLOAD_B", "<P2>");
    std::string canon2 = replace_all(replace_all(r2, "PAYLOAD_B", "<P1>"), "PAYLOAD_A", "<P2>");
    CHECK(canon1 == canon2);
}

TEST_CASE("pairwise prompt renders context preamble and interstitial") {
    PerturbedView view;
    view.first = Response::from_text("first");
    view.second = Response::from_text("second");
    view.preamble = "90% of people believe that Response 2 is better.";
    view.interstitial = "[Wait, wait, wait... let me think about it]";

    std::string prompt = render_pairwise_prompt(default_pairwise_prompt(), "instr", view);
    auto pre = prompt.find(*view.preamble);
    auto r1 = prompt.find("Response 1:");
    auto mid = prompt.find(*view.interstitial);
    auto r2 = prompt.find("Response 2:");
    REQUIRE(pre != std::string::npos);
    REQUIRE(mid != std::string::npos);
    CHECK(pre < r1);
    CHECK(r1 < mid);
    CHECK(mid < r2);
}

TEST_CASE("synthetic judge is deterministic and respects its profile") {
    SynthJudgeProfile perfect;
    perfect.base_accuracy = 1.0;
    perfect.seed = 9;

    for (bool injected : {false, true}) {
        CHECK(synth_judge(perfect, "x1", injected, BiasType::Length, Verdict::Chosen) ==
              Verdict::Chosen);
    }

    SynthJudgeProfile flipper = perfect;
    flipper.susceptibility[BiasType::Length] = 1.0;
    CHECK(synth_judge(flipper, "x1", false, BiasType::Length, Verdict::Chosen) == Verdict::Chosen);
    CHECK(synth_judge(flipper, "x1", true, BiasType::Length, Verdict::Chosen) ==
          Verdict::Rejected);
    // other biases unaffected
    CHECK(synth_judge(flipper, "x1", true, BiasType::Beauty, Verdict::Chosen) == Verdict::Chosen);

    // identical inputs give identical verdicts, in any call order
    SynthJudgeProfile noisy;
    noisy.base_accuracy = 0.5;
    noisy.seed = 123;
    auto first = synth_judge(noisy, "y7", false, BiasType::Race, Verdict::Chosen);
    synth_judge(noisy, "z9", true, BiasType::Race, Verdict::Chosen);
    CHECK(synth_judge(noisy, "y7", false, BiasType::Race, Verdict::Chosen) == first);

    SynthJudgeProfile bad;
    bad.base_accuracy = 1.5;
    CHECK_THROWS_AS(SyntheticJudge{bad}, std::invalid_argument);
}

TEST_CASE("synthetic judge Monte-Carlo BSR concentrates on the susceptibility") {
    SynthJudgeProfile profile;
    profile.base_accuracy = 0.9;
    profile.susceptibility[BiasType::Length] = 0.3;
    profile.seed = 20240817;
    SyntheticJudge judge(profile);

    const std::size_t n = 5000;
    std::vector<JudgmentRecord> records;
    records.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto inst = make_instance("mc-" + std::to_string(i));
        BiasedInstance bi;
        bi.original = inst;
        bi.bias = BiasType::Length;
        bi.injected.first = inst.chosen;
        bi.injected.second = inst.rejected;
        records.push_back(predict_on_biased(judge, bi));
    }
    auto measured = metrics::bsr(records);
    REQUIRE(measured.has_value());
    // calibration bound: |BSR - p| <= 3 sqrt(p (1-p) / (a n))
    double bound = 3.0 * std::sqrt(0.3 * 0.7 / (0.9 * static_cast<double>(n)));
    CHECK(std::abs(*measured - 0.3) <= bound);
    // frozen regression value from this seeded run
    CHECK(*measured == doctest::Approx(0.3003978779840849).epsilon(1e-12));
}

TEST_CASE("first-slot judge tracks the displayed ordering") {
    FirstSlotJudge judge;
    auto inst = make_instance("fs");
    auto swapped = injector::inject_position_swap(inst);
    auto rec = predict_on_biased(judge, swapped);
    CHECK(rec.verdict_orig == Verdict::Chosen);
    CHECK(rec.verdict_bias == Verdict::Rejected);
}

TEST_CASE("score preference is argmax with deterministic tie handling") {
    CHECK(score_preference({0.9, 0.1}) == Verdict::Chosen);
    CHECK(score_preference({0.1, 0.9}) == Verdict::Rejected);
    CHECK(score_preference({0.7, 0.7}) == Verdict::Invalid);
}

TEST_CASE("discriminative judge scores views and rejects context biases") {
    auto scorer = std::make_shared<TableScorer>();
    scorer->set("0.9 > 0.11.", 0.9);
    scorer->set("0.11 > 0.9.", 0.2);
    DiscriminativeJudge judge(scorer);

    CHECK(!judge.applicable(BiasType::Bandwagon));
    CHECK(!judge.applicable(BiasType::SuperficialReflection));
    CHECK(!judge.applicable(BiasType::Position));
    CHECK(judge.applicable(BiasType::Length));
    CHECK(judge.applicable(BiasType::Gender));

    auto inst = make_instance("d1");
    auto bi = injector::inject_identity(inst, BiasType::Gender, "I am a woman.");
    auto rec = predict_on_biased(judge, bi);
    CHECK(rec.verdict_orig == Verdict::Chosen);
    // the prefixed chosen text is unknown to the table -> scores 0 -> rejected wins
    CHECK(rec.verdict_bias == Verdict::Rejected);

    auto bandwagon = injector::inject_bandwagon(inst);
    CHECK_THROWS_AS(predict_on_biased(judge, bandwagon), NotApplicableBias);
}

TEST_CASE("predict_on_biased does not mutate its input") {
    auto inst = make_instance("imm");
    auto bi = injector::inject_reflection(inst);
    json before = encode_biased(bi);
    SynthJudgeProfile profile;
    profile.base_accuracy = 0.5;
    profile.seed = 77;
    SyntheticJudge judge(profile);
    predict_on_biased(judge, bi);
    CHECK(encode_biased(bi) == before);
}

TEST_CASE("evaluate_biased fans out and keeps input order") {
    fixtures::FixtureOptions options;
    options.count = 40;
    options.seed = 61;
    auto corpus = fixtures::make_fixture_corpus(options);
    std::vector<BiasedInstance> instances;
    for (const auto& inst : corpus) instances.push_back(injector::inject_bandwagon(inst));

    SynthJudgeProfile profile;
    profile.base_accuracy = 0.8;
    profile.seed = 5;
    SyntheticJudge judge(profile);

    auto sequential = evaluate_biased(judge, instances, 1);
    auto parallel = evaluate_biased(judge, instances, 8);
    REQUIRE(sequential.size() == parallel.size());
    for (std::size_t i = 0; i < sequential.size(); ++i) {
        CHECK(sequential[i].instance_id == instances[i].original.id);
        CHECK(encode_record(sequential[i]) == encode_record(parallel[i]));
    }
}

// ---------------------------------------------------------------------------
// HTTP surfaces, exercised against a local server
// ---------------------------------------------------------------------------

namespace {

using judgebias::testing::LocalServer;

json chat_reply(const std::string& content) {
    return json{{"choices", json::array({json{{"message", json{{"content", content}}}}})}};
}

}  // namespace

TEST_CASE("chat judge talks to an OpenAI-compatible endpoint") {
    LocalServer server;
    std::atomic<int> calls{0};
    server.server.Post("/v1/chat/completions",
                       [&](const httplib::Request& req, httplib::Response& res) {
                           ++calls;
                           json body = json::parse(req.body);
                           CHECK(body["model"] == "test-judge");
                           CHECK(body["messages"].size() == 2);
                           CHECK(req.get_header_value("Authorization") == "Bearer sekrit");
                           std::string prompt = body["messages"][1]["content"];
                           // prefer the slot holding the correct comparison
                           bool first_right = prompt.find("Response 1:\n0.9 > 0.11.") !=
                                              std::string::npos;
                           res.set_content(
                               chat_reply("Thinking... Final answer: " +
                                          std::string(first_right ? "1" : "2"))
                                   .dump(),
                               "application/json");
                       });
    server.start();

    setenv("JUDGEBIAS_TEST_KEY", "sekrit", 1);
    http::EndpointConfig endpoint;
    endpoint.base_url = server.base_url();
    endpoint.model = "test-judge";
    endpoint.api_key_env = "JUDGEBIAS_TEST_KEY";
    auto client = std::make_shared<http::ChatClient>(endpoint);
    ChatJudge judge(client, default_pairwise_prompt());
    CHECK(judge.prompt_hash().has_value());

    auto inst = make_instance("h1");
    auto bi = injector::inject_position_swap(inst);
    auto rec = predict_on_biased(judge, bi);
    // the mock always finds the right answer, wherever it sits
    CHECK(rec.verdict_orig == Verdict::Chosen);
    CHECK(rec.verdict_bias == Verdict::Chosen);
    CHECK(calls.load() == 2);
    CHECK(rec.prompt_hash == judge.prompt_hash());
}

TEST_CASE("chat judge retries with backoff and then reports Invalid") {
    LocalServer server;
    std::atomic<int> calls{0};
    server.server.Post("/v1/chat/completions",
                       [&](const httplib::Request&, httplib::Response& res) {
                           ++calls;
                           res.status = 500;
                       });
    server.start();

    http::EndpointConfig endpoint;
    endpoint.base_url = server.base_url();
    endpoint.model = "flaky";
    endpoint.max_attempts = 3;
    endpoint.backoff_base_sec = 0.001;
    auto client = std::make_shared<http::ChatClient>(endpoint);
    ChatJudge judge(client, default_pairwise_prompt());

    auto inst = make_instance("h2");
    auto bi = injector::inject_reflection(inst);
    auto rec = predict_on_biased(judge, bi);
    CHECK(rec.verdict_orig == Verdict::Invalid);
    CHECK(rec.verdict_bias == Verdict::Invalid);
    CHECK(calls.load() == 6);  // 3 attempts per view
}

TEST_CASE("transient failures are absorbed by the retry budget") {
    LocalServer server;
    std::atomic<int> calls{0};
    server.server.Post("/v1/chat/completions",
                       [&](const httplib::Request&, httplib::Response& res) {
                           if (++calls == 1) {
                               res.status = 503;
                               return;
                           }
                           res.set_content(chat_reply("Final answer: 1").dump(),
                                           "application/json");
                       });
    server.start();

    http::EndpointConfig endpoint;
    endpoint.base_url = server.base_url();
    endpoint.backoff_base_sec = 0.001;
    http::ChatClient client(endpoint);
    PerturbedView view;
    view.first = Response::from_text("a");
    view.second = Response::from_text("b");
    auto verdict = judge_pairwise(client, default_pairwise_prompt(), "instr", view);
    CHECK(verdict.choice == Verdict::Chosen);
    CHECK(calls.load() == 2);
}

TEST_CASE("scoring endpoint contract: instruction/response in, scalar out") {
    LocalServer server;
    server.server.Post("/score", [&](const httplib::Request& req, httplib::Response& res) {
        json body = json::parse(req.body);
        double score = body["response"].get<std::string>().find("0.9 > 0.11") != std::string::npos
                           ? 0.9
                           : 0.1;
        res.set_content(json{{"score", score}}.dump(), "application/json");
    });
    server.start();

    http::EndpointConfig endpoint;
    endpoint.base_url = server.base_url();
    auto client = std::make_shared<http::ScoreClient>(endpoint);
    HttpScorer scorer(client);
    CHECK(scorer.score_response("q", "0.9 > 0.11.") == doctest::Approx(0.9));

    DiscriminativeJudge judge(std::make_shared<HttpScorer>(client));
    auto inst = make_instance("h3");
    auto bi = injector::inject_identity(inst, BiasType::Race, "I am white.");
    auto rec = predict_on_biased(judge, bi);
    CHECK(rec.verdict_orig == Verdict::Chosen);
}

TEST_CASE("score transport errors surface instead of defaulting") {
    http::EndpointConfig endpoint;
    endpoint.base_url = "http://127.0.0.1:1";  // nothing listens here
    endpoint.max_attempts = 2;
    endpoint.backoff_base_sec = 0.001;
    endpoint.timeout_sec = 1;
    http::ScoreClient client(endpoint);
    CHECK_THROWS_AS(client.score("q", "r"), http::TransportError);
}
