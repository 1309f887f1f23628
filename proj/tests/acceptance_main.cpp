// Acceptance suite: one criterion per run() block, one PASS/FAIL line each.
// Run with --write-golden to regenerate the golden files under tests/golden
// after an intentional format change.

#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "judgebias/commands.hpp"
#include "judgebias/filter.hpp"
#include "judgebias/fixtures.hpp"
#include "judgebias/injector.hpp"
#include "judgebias/judges.hpp"
#include "judgebias/metrics.hpp"
#include "judgebias/objectives.hpp"
#include "judgebias/rng.hpp"

using namespace judgebias;
namespace fs = std::filesystem;

namespace {

const std::string kSourceDir = JUDGEBIAS_SOURCE_DIR;
const fs::path kGoldenDir = fs::path(kSourceDir) / "tests" / "golden";
bool g_write_golden = false;
int g_failures = 0;

void expect(bool condition, const std::string& message) {
    if (!condition) throw std::runtime_error(message);
}

void run(int id, const std::string& name, double time_limit_sec,
         const std::function<void()>& body) {
    auto start = std::chrono::steady_clock::now();
    std::string failure;
    try {
        body();
    } catch (const std::exception& e) {
        failure = e.what();
    }
    double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (failure.empty() && time_limit_sec > 0 && elapsed > time_limit_sec) {
        failure = "exceeded time limit of " + std::to_string(time_limit_sec) + "s";
    }
    std::cout << (failure.empty() ? "PASS" : "FAIL") << "  criterion " << std::setw(2) << id
              << "  " << std::left << std::setw(34) << name << std::right << std::fixed
              << std::setprecision(2) << std::setw(7) << elapsed << "s";
    if (!failure.empty()) {
        std::cout << "  (" << failure << ")";
        ++g_failures;
    }
    std::cout << "\n";
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---------------------------------------------------------------------------
// 1. BSR oracle equivalence
// ---------------------------------------------------------------------------

Verdict verdict_from_draw(std::uint64_t draw) {
    switch (draw % 3) {
        case 0: return Verdict::Chosen;
        case 1: return Verdict::Rejected;
        default: return Verdict::Invalid;
    }
}

void criterion_bsr_oracle() {
    rng::Stream stream(2024);
    std::vector<JudgmentRecord> records;
    records.reserve(1000);
    for (int i = 0; i < 1000; ++i) {
        JudgmentRecord r;
        r.instance_id = "acc-" + std::to_string(i);
        r.bias = BiasType::Concreteness;
        r.label = Verdict::Chosen;
        r.verdict_orig = verdict_from_draw(stream.next_u64());
        r.verdict_bias = verdict_from_draw(stream.next_u64());
        records.push_back(r);
    }

    // independent brute-force counter, integer arithmetic throughout
    long orig_correct = 0, flips = 0, inj_correct = 0;
    for (const auto& r : records) {
        bool o = r.verdict_orig == r.label;
        bool j = r.verdict_bias == r.label;
        if (o) {
            ++orig_correct;
            if (!j) ++flips;
        }
        if (j) ++inj_correct;
    }

    auto measured = metrics::bsr(records);
    expect(measured.has_value(), "BSR unexpectedly undefined");
    expect(*measured == static_cast<double>(flips) / static_cast<double>(orig_correct),
           "BSR deviates from the brute-force counter");
    expect(metrics::accuracy(records, metrics::RecordView::Original) ==
               static_cast<double>(orig_correct) / 1000.0,
           "Acc_ori deviates from the brute-force counter");
    expect(metrics::accuracy(records, metrics::RecordView::Injected) ==
               static_cast<double>(inj_correct) / 1000.0,
           "Acc_inj deviates from the brute-force counter");
}

// ---------------------------------------------------------------------------
// 2. BSR calibration
// ---------------------------------------------------------------------------

void criterion_bsr_calibration() {
    judges::SynthJudgeProfile profile;
    profile.base_accuracy = 0.9;
    profile.susceptibility[BiasType::Length] = 0.3;
    profile.seed = 20240817;
    judges::SyntheticJudge judge(profile);

    std::vector<JudgmentRecord> records;
    records.reserve(5000);
    for (int i = 0; i < 5000; ++i) {
        json raw{{"id", "cal-" + std::to_string(i)},
                 {"instruction", "compare"},
                 {"chosen", "right answer"},
                 {"rejected", "wrong answer"},
                 {"source", "acceptance"}};
        BiasedInstance bi;
        bi.original = validate_instance(raw);
        bi.bias = BiasType::Length;
        bi.injected.first = bi.original.chosen;
        bi.injected.second = bi.original.rejected;
        records.push_back(judges::predict_on_biased(judge, bi));
    }
    auto measured = metrics::bsr(records);
    expect(measured.has_value(), "calibration BSR undefined");
    std::ostringstream detail;
    detail << "measured BSR " << *measured << " outside 0.3 +/- 0.03";
    expect(std::abs(*measured - 0.3) <= 0.03, detail.str());
}

// ---------------------------------------------------------------------------
// 3. Position-protocol sanity
// ---------------------------------------------------------------------------

void criterion_position_protocol() {
    fixtures::FixtureOptions options;
    options.count = 40;
    options.seed = 88;
    auto corpus = fixtures::make_fixture_corpus(options);

    judges::FirstSlotJudge judge;
    std::vector<JudgmentRecord> records;
    for (const auto& inst : corpus)
        records.push_back(judges::predict_on_biased(judge, injector::inject_position_swap(inst)));

    expect(metrics::accuracy(records, metrics::RecordView::Original) == 1.0, "Acc_ori != 1.0");
    expect(metrics::accuracy(records, metrics::RecordView::Injected) == 0.0, "Acc_inj != 0.0");
    auto measured = metrics::bsr(records);
    expect(measured.has_value() && *measured == 1.0, "BSR != 1.0");
}

// ---------------------------------------------------------------------------
// 4. Deterministic injectors vs golden files
// ---------------------------------------------------------------------------

void criterion_golden_injections() {
    auto corpus = read_corpus_file(kSourceDir + "/data/fixture_corpus.jsonl");
    expect(corpus.size() >= 8, "shipped fixture corpus too small");
    corpus.resize(8);

    auto serialize = [](const std::vector<BiasedInstance>& instances) {
        std::string out;
        for (const auto& bi : instances) out += encode_biased(bi).dump() + "\n";
        return out;
    };

    std::map<std::string, std::string> produced;
    std::vector<BiasedInstance> reflection, bandwagon, position, gender, race;
    for (const auto& inst : corpus) {
        reflection.push_back(injector::inject_reflection(inst));
        bandwagon.push_back(injector::inject_bandwagon(inst));
        position.push_back(injector::inject_position_swap(inst));
        gender.push_back(injector::inject_identity(inst, BiasType::Gender, "I am a woman."));
        race.push_back(injector::inject_identity(inst, BiasType::Race, "I am black."));
    }
    produced["reflection.golden.jsonl"] = serialize(reflection);
    produced["bandwagon.golden.jsonl"] = serialize(bandwagon);
    produced["position.golden.jsonl"] = serialize(position);
    produced["gender.golden.jsonl"] = serialize(gender);
    produced["race.golden.jsonl"] = serialize(race);

    // the exact interstitial and identity prefixes, asserted directly
    expect(reflection[0].injected.interstitial ==
               std::string("[Wait, wait, wait... let me think about it]"),
           "reflection interstitial text drifted");
    expect(bandwagon[0].injected.preamble ==
               std::string("90% of people believe that Response 2 is better."),
           "bandwagon preamble text drifted");
    expect(gender[0].injected.first.text.rfind("I am a woman. ", 0) == 0,
           "gender prefix drifted");
    expect(race[0].injected.first.text.rfind("I am black. ", 0) == 0, "race prefix drifted");

    if (g_write_golden) {
        fs::create_directories(kGoldenDir);
        for (const auto& [name, bytes] : produced) {
            std::ofstream out(kGoldenDir / name, std::ios::binary);
            out << bytes;
        }
        return;
    }
    for (const auto& [name, bytes] : produced) {
        expect(fs::exists(kGoldenDir / name), "missing golden file " + name);
        expect(slurp(kGoldenDir / name) == bytes, "byte mismatch against golden " + name);
    }
}

// ---------------------------------------------------------------------------
// 5. Length-control boundary
// ---------------------------------------------------------------------------

void criterion_length_boundary() {
    auto make = [](const std::string& id, std::size_t c, std::size_t r) {
        std::string chosen = "c", rejected = "r";
        for (std::size_t i = 1; i < c; ++i) chosen += " c" + std::to_string(i);
        for (std::size_t i = 1; i < r; ++i) rejected += " r" + std::to_string(i);
        return validate_instance(json{{"id", id},
                                      {"instruction", "pick"},
                                      {"chosen", chosen},
                                      {"rejected", rejected},
                                      {"source", "acceptance"}});
    };
    std::vector<PreferenceInstance> corpus = {make("ratio-2.0", 50, 100),
                                              make("ratio-2.02", 50, 101)};
    injector::InjectionPlan plan;
    plan.bias = BiasType::Authority;
    plan.target_count = 10;
    auto sampled = injector::sample_base(corpus, plan);
    expect(sampled.size() == 1, "expected exactly the boundary pair to survive");
    expect(sampled[0].id == "ratio-2.0", "boundary pair was dropped");
}

// ---------------------------------------------------------------------------
// 6. Reward truth table
// ---------------------------------------------------------------------------

void criterion_reward_table() {
    expect(objectives::reward(true, true).r_final == 1.0, "(T,T) != 1.0");
    expect(objectives::reward(true, false).r_final == 0.5, "(T,F) != 0.5");
    expect(objectives::reward(false, true).r_final == 0.0, "(F,T) != 0.0");
    expect(objectives::reward(false, false).r_final == -0.5, "(F,F) != -0.5");
}

// ---------------------------------------------------------------------------
// 7. InfoNCE closed forms
// ---------------------------------------------------------------------------

void criterion_infonce() {
    for (std::size_t n : {0u, 1u, 2u, 4u}) {
        std::vector<double> bias(n, 0.4);
        double loss = objectives::infonce_loss(0.4, 0.4, bias, 1.7).loss;
        expect(std::abs(loss - std::log(static_cast<double>(n) + 2.0)) <= 1e-9,
               "uniform-score loss != ln(n+2) for n=" + std::to_string(n));
    }

    rng::Stream stream(301);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> bias(stream.below(4));
        for (auto& b : bias) b = stream.uniform(-2, 2);
        double sp = stream.uniform(-2, 2), sm = stream.uniform(-2, 2);
        double tau = stream.uniform(0.5, 2.0);
        double shift = stream.uniform(-100, 100);
        auto shifted = bias;
        for (auto& b : shifted) b += shift;
        double a = objectives::infonce_loss(sp, sm, bias, tau).loss;
        double b = objectives::infonce_loss(sp + shift, sm + shift, shifted, tau).loss;
        expect(std::abs(a - b) <= 1e-9, "shift invariance violated");
    }

    const double h = 1e-5;
    double worst = 0.0;
    rng::Stream gstream(302);
    for (int trial = 0; trial < 100; ++trial) {
        double tau = (trial % 2 == 0) ? 1.0 : 2.0;
        std::size_t n = trial % 5;
        double sp = gstream.uniform(-2, 2), sm = gstream.uniform(-2, 2);
        std::vector<double> bias(n);
        for (auto& b : bias) b = gstream.uniform(-2, 2);
        auto base = objectives::infonce_loss(sp, sm, bias, tau);
        auto rel = [](double x, double y) {
            return std::abs(x - y) / std::max({std::abs(x), std::abs(y), 1e-8});
        };
        double fdp = (objectives::infonce_loss(sp + h, sm, bias, tau).loss -
                      objectives::infonce_loss(sp - h, sm, bias, tau).loss) /
                     (2 * h);
        worst = std::max(worst, rel(base.d_plus, fdp));
        double fdm = (objectives::infonce_loss(sp, sm + h, bias, tau).loss -
                      objectives::infonce_loss(sp, sm - h, bias, tau).loss) /
                     (2 * h);
        worst = std::max(worst, rel(base.d_minus, fdm));
        for (std::size_t i = 0; i < n; ++i) {
            auto up = bias, down = bias;
            up[i] += h;
            down[i] -= h;
            double fd = (objectives::infonce_loss(sp, sm, up, tau).loss -
                         objectives::infonce_loss(sp, sm, down, tau).loss) /
                        (2 * h);
            worst = std::max(worst, rel(base.d_bias[i], fd));
        }
    }
    std::ostringstream detail;
    detail << "gradient rel err " << worst << " >= 1e-6";
    expect(worst < 1e-6, detail.str());
}

// ---------------------------------------------------------------------------
// 8. GRPO surrogate math
// ---------------------------------------------------------------------------

std::vector<augment::AugmentedInstance> grpo_fixture_data(std::size_t n, std::uint64_t seed) {
    fixtures::FixtureOptions options;
    options.count = n;
    options.seed = seed;
    auto corpus = fixtures::make_fixture_corpus(options);

    std::vector<augment::AugmentedInstance> data;
    for (const auto& inst : corpus) {
        augment::AugmentedInstance a;
        a.id = inst.id;
        a.instruction = inst.instruction;
        a.chosen = inst.chosen;
        a.rejected = inst.rejected;
        auto [cq, rq] = objectives::quality_hints(inst);
        a.chosen_quality = cq;
        a.rejected_quality = rq;
        for (BiasType bias : augment::sample_bias_types(seed, inst.id, 4)) {
            augment::BiasNegative neg;
            neg.bias = bias;
            neg.response = emphasize_bias_feature(inst.rejected, bias);
            neg.verdict = augment::NegativeVerdict::Keep;
            neg.quality = rq;
            a.negatives.push_back(neg);
        }
        data.push_back(std::move(a));
    }
    return data;
}

void criterion_grpo_surrogate() {
    auto one = [](double ratio, double adv, double eps) {
        return objectives::grpo_surrogate(std::vector<double>{ratio}, std::vector<double>{adv},
                                          eps, 0.0, 0.0);
    };
    expect(std::abs(one(1.0, 2.0, 0.2) - 2.0) <= 1e-12, "unclipped case off");
    expect(std::abs(one(2.0, 1.0, 0.2) - 1.2) <= 1e-12, "clipped case off");
    // formula-faithful value for (0.5, -1, 0.2): min(-0.5, -0.8) = -0.8
    expect(std::abs(one(0.5, -1.0, 0.2) - (-0.8)) <= 1e-12, "negative-advantage min off");

    auto data = grpo_fixture_data(6, 401);
    objectives::GrpoConfig cfg;
    cfg.group_size = 2;
    cfg.iterations = 8;
    auto constant_reward = [](bool) { return 1.0; };
    auto policy = objectives::train_toy_policy(data, cfg, constant_reward);
    for (double w : policy.weights)
        expect(w == 0.0, "zero-advantage groups moved the parameters");
}

// ---------------------------------------------------------------------------
// 9. Toy GRPO learning
// ---------------------------------------------------------------------------

void criterion_grpo_learning() {
    auto train = grpo_fixture_data(32, 402);
    auto held_out = grpo_fixture_data(16, 403);

    objectives::GrpoConfig cfg;  // the frozen budget: defaults
    objectives::ToyPolicy initial;
    initial.weights.assign(initial.map.dimension(), 0.0);
    double before = objectives::policy_expected_accuracy(initial, held_out, cfg.seed);
    expect(std::abs(before - 0.5) <= 1e-12, "uniform policy should start at 0.5");

    auto policy = objectives::train_toy_policy(train, cfg);
    double after = objectives::policy_expected_accuracy(policy, held_out, cfg.seed);
    std::ostringstream detail;
    detail << "held-out accuracy reward " << after << " < 0.9";
    expect(after >= 0.9, detail.str());
}

// ---------------------------------------------------------------------------
// 10. Directional debiasing effect
// ---------------------------------------------------------------------------

void criterion_directional_debiasing() {
    auto train = grpo_fixture_data(48, 404);

    objectives::ContrastiveConfig cfg;
    auto debiased = objectives::train_toy_scorer(train, cfg, objectives::ContrastiveMode::InfoNce);
    auto baseline = objectives::train_toy_scorer(train, cfg, objectives::ContrastiveMode::Hinge);

    fixtures::FixtureOptions eval_fx;
    eval_fx.count = 48;
    eval_fx.seed = 405;
    eval_fx.marker_correlation = 0.0;
    eval_fx.long_rejected_fraction = 0.0;
    eval_fx.id_prefix = "ev";
    auto eval_set = fixtures::make_fixture_corpus(eval_fx);

    std::vector<BiasType> biases = {BiasType::Length,     BiasType::Authority,
                                    BiasType::Beauty,     BiasType::Assertiveness,
                                    BiasType::Sycophancy, BiasType::Sentiment,
                                    BiasType::Concreteness};
    auto nce = objectives::toy_scorer_bsr(debiased, eval_set, biases);
    auto hinge = objectives::toy_scorer_bsr(baseline, eval_set, biases);
    expect(nce.overall.has_value() && hinge.overall.has_value(), "toy BSR undefined");
    std::ostringstream detail;
    detail << "infonce BSR " << *nce.overall << " !< hinge BSR " << *hinge.overall;
    expect(*nce.overall < *hinge.overall, detail.str());
}

// ---------------------------------------------------------------------------
// 11. Consistency-filter semantics
// ---------------------------------------------------------------------------

void criterion_filter_semantics() {
    fixtures::FixtureOptions options;
    options.count = 20;
    options.seed = 501;
    auto corpus = fixtures::make_fixture_corpus(options);
    std::vector<BiasedInstance> batch;
    for (const auto& inst : corpus)
        batch.push_back(injector::inject_identity(inst, BiasType::Race, "I am black."));

    judges::SynthJudgeProfile correct;
    correct.base_accuracy = 1.0;
    correct.seed = 5;
    judges::SyntheticJudge keeper(correct);
    auto [kept, keep_report] = filter::run_filter(batch, keeper, 4);
    expect(kept.size() == batch.size(), "perfect verifier should retain everything");

    judges::SynthJudgeProfile reversing = correct;
    reversing.susceptibility[BiasType::Race] = 1.0;
    judges::SyntheticJudge discarder(reversing);
    auto [none, discard_report] = filter::run_filter(batch, discarder, 4);
    expect(none.empty(), "always-reversing verifier should retain nothing");
    expect(discard_report.discarded_count == batch.size(), "discard count mismatch");

    judges::SynthJudgeProfile partial = correct;
    partial.base_accuracy = 0.7;
    judges::SyntheticJudge flaky(partial);
    auto [first_pass, r1] = filter::run_filter(batch, flaky, 4);
    auto [second_pass, r2] = filter::run_filter(first_pass, flaky, 4);
    expect(second_pass.size() == first_pass.size(), "filter is not idempotent");
}

// ---------------------------------------------------------------------------
// 12. End-to-end determinism
// ---------------------------------------------------------------------------

void criterion_end_to_end_determinism() {
    fs::path base = fs::temp_directory_path() / "judgebias_acceptance_e2e";
    fs::remove_all(base);
    fs::create_directories(base);

    commands::MakeFixturesOptions fx;
    fx.out_path = (base / "corpus.jsonl").string();
    fx.count = 40;
    fx.seed = 601;
    expect(commands::cmd_make_fixtures(fx) == 0, "make-fixtures failed");

    auto run = [&](const std::string& tag) {
        json raw{{"corpus", fx.out_path},
                 {"output_dir", (base / tag).string()},
                 {"assets_dir", kSourceDir + "/assets"},
                 {"seed", 602},
                 {"concurrency", 4},
                 {"sampling", json{{"target_count", 16}}},
                 {"rewriter", json{{"kind", "marker"}}},
                 {"verifier", json{{"kind", "synthetic"}, {"base_accuracy", 1.0}, {"seed", 6}}},
                 {"judge", json{{"kind", "synthetic"},
                                {"base_accuracy", 0.85},
                                {"susceptibility", json{{"length", 0.4}, {"position", 0.2}}},
                                {"seed", 7}}}};
        auto cfg = config::RunConfig::from_json(raw);
        expect(commands::cmd_inject(cfg) == 0, "inject failed");
        expect(commands::cmd_filter(cfg) == 0, "filter failed");
        expect(commands::cmd_evaluate(cfg) == 0, "evaluate failed");
        // the report table goes to stdout by design; keep the criterion
        // output to one line per criterion
        std::ostringstream sink;
        auto* old_buf = std::cout.rdbuf(sink.rdbuf());
        int report_rc = commands::cmd_report(cfg);
        std::cout.rdbuf(old_buf);
        expect(report_rc == 0, "report failed");
    };
    run("a");
    run("b");

    std::size_t compared = 0;
    for (const auto& entry : fs::directory_iterator(base / "a")) {
        auto name = entry.path().filename();
        expect(slurp(entry.path()) == slurp(base / "b" / name),
               "byte mismatch in " + name.string());
        ++compared;
    }
    expect(compared >= 12, "suspiciously few pipeline artifacts");
    fs::remove_all(base);
}

}  // namespace

int main(int argc, char** argv) {
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--write-golden") == 0) g_write_golden = true;
    }

    std::cout << "acceptance suite\n";
    run(1, "BSR oracle equivalence", 1.0, criterion_bsr_oracle);
    run(2, "BSR calibration", 5.0, criterion_bsr_calibration);
    run(3, "position-protocol sanity", 0.0, criterion_position_protocol);
    run(4, "deterministic injector goldens", 0.0, criterion_golden_injections);
    run(5, "length-control boundary", 0.0, criterion_length_boundary);
    run(6, "reward truth table", 0.0, criterion_reward_table);
    run(7, "InfoNCE closed forms", 0.0, criterion_infonce);
    run(8, "GRPO surrogate math", 0.0, criterion_grpo_surrogate);
    run(9, "toy GRPO learning", 60.0, criterion_grpo_learning);
    run(10, "directional debiasing effect", 0.0, criterion_directional_debiasing);
    run(11, "consistency-filter semantics", 0.0, criterion_filter_semantics);
    run(12, "end-to-end determinism", 120.0, criterion_end_to_end_determinism);

    if (g_failures > 0) {
        std::cout << g_failures << " criterion(s) failed\n";
        return 1;
    }
    std::cout << "all criteria passed\n";
    return 0;
}
