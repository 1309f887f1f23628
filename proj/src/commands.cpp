#include "judgebias/commands.hpp"

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "judgebias/filter.hpp"
#include "judgebias/fixtures.hpp"
#include "judgebias/metrics.hpp"
#include "judgebias/objectives.hpp"
#include "judgebias/rng.hpp"

namespace judgebias::commands {

namespace fs = std::filesystem;

namespace {

void write_json_file(const fs::path& path, const json& value) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    out << value.dump(2) << "\n";
}

void write_text_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    out << text;
}

fs::path ensure_output_dir(const config::RunConfig& cfg) {
    fs::path dir(cfg.output_dir);
    fs::create_directories(dir);
    return dir;
}

json base_manifest(const config::RunConfig& cfg, const char* command) {
    return json{{"command", command}, {"config_hash", cfg.hash}, {"seed", cfg.seed}};
}

json hashes_to_json(const std::map<std::string, std::string>& hashes) {
    json out = json::object();
    for (const auto& [name, hash] : hashes) out[name] = hash;
    return out;
}

std::vector<PreferenceInstance> load_corpus(const config::RunConfig& cfg) {
    if (cfg.corpus_path.empty()) throw config::UsageError("config is missing \"corpus\"");
    if (!fs::exists(cfg.corpus_path))
        throw config::UsageError("corpus file does not exist: " + cfg.corpus_path);
    return read_corpus_file(cfg.corpus_path);
}

std::string biased_file_name(BiasType bias) { return std::string(bias_slug(bias)) + ".biased.jsonl"; }
std::string filtered_file_name(BiasType bias) {
    return std::string(bias_slug(bias)) + ".filtered.biased.jsonl";
}
std::string records_file_name(BiasType bias) {
    return std::string(bias_slug(bias)) + ".records.jsonl";
}

}  // namespace

// ---------------------------------------------------------------------------
// make-fixtures
// ---------------------------------------------------------------------------

int cmd_make_fixtures(const MakeFixturesOptions& options) {
    fixtures::FixtureOptions fx;
    fx.count = options.count;
    fx.seed = options.seed;
    fx.marker_correlation = options.marker_correlation;
    auto corpus = fixtures::make_fixture_corpus(fx);

    fs::path out_path(options.out_path);
    if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + options.out_path);
    write_corpus(out, corpus);
    std::cerr << "[make-fixtures] wrote " << corpus.size() << " instances to " << options.out_path
              << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// inject
// ---------------------------------------------------------------------------

int cmd_inject(const config::RunConfig& cfg) {
    auto corpus = load_corpus(cfg);
    auto dir = ensure_output_dir(cfg);
    assets::AssetStore store(cfg.assets_dir);
    auto rewriter = config::make_rewriter(cfg.section("rewriter"));

    json per_bias = json::array();
    for (BiasType bias : cfg.biases) {
        injector::InjectionPlan plan;
        plan.bias = bias;
        plan.target_count = cfg.target_count;
        plan.seed = cfg.seed;
        plan.max_len_ratio = cfg.max_len_ratio;

        auto sampled = injector::sample_base(corpus, plan);
        auto [instances, report] =
            injector::run_injection(sampled, plan, *rewriter, store, cfg.concurrency);
        std::string file = biased_file_name(bias);
        write_biased_file((dir / file).string(), instances);

        std::cerr << "[inject] " << bias_slug(bias) << ": sampled " << report.sampled
                  << ", injected " << report.injected << ", skipped " << report.skipped << "\n";

        json entry{{"bias", std::string(bias_slug(bias))},
                   {"sampled", report.sampled},
                   {"injected", report.injected},
                   {"skipped", report.skipped},
                   {"file", file}};
        if (!report.skipped_ids.empty()) {
            json skipped = json::array();
            for (const auto& id : report.skipped_ids) skipped.push_back(id);
            entry["skipped_ids"] = skipped;
        }
        per_bias.push_back(entry);
    }

    json manifest = base_manifest(cfg, "inject");
    manifest["per_bias"] = per_bias;
    manifest["asset_hashes"] = hashes_to_json(store.loaded_hashes());
    write_json_file(dir / "inject.manifest.json", manifest);
    return 0;
}

// ---------------------------------------------------------------------------
// filter
// ---------------------------------------------------------------------------

int cmd_filter(const config::RunConfig& cfg) {
    auto dir = ensure_output_dir(cfg);
    assets::AssetStore store(cfg.assets_dir);
    auto verifier = config::make_judge(cfg.section("verifier"), store);

    json per_bias = json::array();
    for (BiasType bias : cfg.biases) {
        fs::path in_path = dir / biased_file_name(bias);
        if (!fs::exists(in_path))
            throw std::runtime_error("filter: missing upstream artifact " + in_path.string());
        auto instances = read_biased_file(in_path.string());

        auto [retained, report] = filter::run_filter(instances, *verifier, cfg.concurrency);
        std::string out_file = filtered_file_name(bias);
        write_biased_file((dir / out_file).string(), retained);

        json report_json = report.to_json();
        report_json["config_hash"] = cfg.hash;
        write_json_file(dir / (std::string(bias_slug(bias)) + ".filter-report.json"), report_json);

        std::cerr << "[filter] " << bias_slug(bias) << ": " << report.retained_count << "/"
                  << report.input_count << " retained"
                  << (report.bypassed ? " (bypassed)" : "") << "\n";
        per_bias.push_back(json{{"bias", std::string(bias_slug(bias))},
                                {"retained", report.retained_count},
                                {"input", report.input_count},
                                {"file", out_file}});
    }

    json manifest = base_manifest(cfg, "filter");
    manifest["per_bias"] = per_bias;
    manifest["asset_hashes"] = hashes_to_json(store.loaded_hashes());
    write_json_file(dir / "filter.manifest.json", manifest);
    return 0;
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

int cmd_evaluate(const config::RunConfig& cfg) {
    auto dir = ensure_output_dir(cfg);
    assets::AssetStore store(cfg.assets_dir);
    auto judge = config::make_judge(cfg.section("judge"), store);

    json per_bias = json::array();
    json not_applicable = json::array();
    for (BiasType bias : cfg.biases) {
        if (!judge->applicable(bias)) {
            not_applicable.push_back(std::string(bias_slug(bias)));
            std::cerr << "[evaluate] " << bias_slug(bias) << ": not applicable to this judge\n";
            continue;
        }
        fs::path in_path = dir / filtered_file_name(bias);
        if (!fs::exists(in_path)) in_path = dir / biased_file_name(bias);
        if (!fs::exists(in_path))
            throw std::runtime_error("evaluate: missing upstream artifact for bias " +
                                     std::string(bias_slug(bias)));
        auto instances = read_biased_file(in_path.string());

        auto records = judges::evaluate_biased(*judge, instances, cfg.concurrency);
        std::string out_file = records_file_name(bias);
        write_records_file((dir / out_file).string(), records);

        std::cerr << "[evaluate] " << bias_slug(bias) << ": " << records.size() << " records\n";
        per_bias.push_back(json{{"bias", std::string(bias_slug(bias))},
                                {"records", records.size()},
                                {"input", in_path.filename().string()},
                                {"file", out_file}});
    }

    json manifest = base_manifest(cfg, "evaluate");
    manifest["per_bias"] = per_bias;
    manifest["not_applicable"] = not_applicable;
    manifest["asset_hashes"] = hashes_to_json(store.loaded_hashes());
    write_json_file(dir / "evaluate.manifest.json", manifest);
    return 0;
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

int cmd_report(const config::RunConfig& cfg, const std::vector<std::string>& record_files) {
    auto dir = ensure_output_dir(cfg);

    std::vector<std::string> files = record_files;
    if (files.empty()) {
        for (BiasType bias : kAllBiasTypes) {
            fs::path p = dir / records_file_name(bias);
            if (fs::exists(p)) files.push_back(p.string());
        }
    }
    if (files.empty()) throw std::runtime_error("report: no record files found");

    std::vector<JudgmentRecord> records;
    for (const auto& file : files) {
        auto batch = read_records_file(file);
        records.insert(records.end(), batch.begin(), batch.end());
    }

    std::vector<BiasType> not_applicable;
    fs::path eval_manifest = dir / "evaluate.manifest.json";
    if (fs::exists(eval_manifest)) {
        std::ifstream in(eval_manifest);
        json manifest;
        in >> manifest;
        for (const auto& slug : manifest.value("not_applicable", json::array())) {
            if (auto bias = bias_from_slug(slug.get<std::string>())) not_applicable.push_back(*bias);
        }
    }

    auto summary = metrics::summarize(records);
    bool pooled = cfg.section("report").value("pooled", false);
    if (pooled) summary.overall_bsr = summary.pooled_bsr;

    std::string table = metrics::render_table(summary, not_applicable);
    json report_json{{"config_hash", cfg.hash},
                     {"overall_mode", pooled ? "pooled" : "unweighted_mean"},
                     {"summary", metrics::summary_to_json(summary, not_applicable)}};
    write_json_file(dir / "report.json", report_json);
    write_text_file(dir / "report.txt", table);
    std::cout << table;
    return 0;
}

// ---------------------------------------------------------------------------
// augment
// ---------------------------------------------------------------------------

int cmd_augment(const config::RunConfig& cfg) {
    auto corpus = load_corpus(cfg);
    auto dir = ensure_output_dir(cfg);
    assets::AssetStore store(cfg.assets_dir);

    const json& section = cfg.section("augment");
    auto generator = config::make_generator(
        section.contains("generator") ? section["generator"] : json::object());
    const json& verifier_spec =
        section.contains("verifier") ? section["verifier"] : cfg.section("verifier");
    auto verifier = config::make_judge(verifier_spec, store);
    std::size_t negatives_per_instance = section.value("negatives_per_instance", std::size_t{4});
    if (negatives_per_instance < 1)
        throw config::UsageError("augment.negatives_per_instance must be at least 1");

    std::vector<augment::AugmentedInstance> augmented(corpus.size());
    std::atomic<std::size_t> next{0};
    int workers = std::clamp<int>(cfg.concurrency, 1, static_cast<int>(corpus.size()));
    std::vector<std::thread> pool;
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            while (!failed.load()) {
                std::size_t i = next.fetch_add(1);
                if (i >= corpus.size()) break;
                try {
                    auto sample =
                        augment::sample_bias_types(cfg.seed, corpus[i].id, negatives_per_instance);
                    augmented[i] =
                        augment::build_augmented(corpus[i], sample, *generator, *verifier, store);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!failed.exchange(true)) error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failed && error) std::rethrow_exception(error);

    augment::write_augmented_file((dir / "augmented.jsonl").string(), augmented);

    std::size_t excluded = 0, retained_total = 0;
    for (const auto& inst : augmented) {
        retained_total += inst.retained_count();
        if (inst.excluded_from_training()) ++excluded;
    }
    std::cerr << "[augment] " << augmented.size() << " instances, " << retained_total
              << " retained negatives, " << excluded << " excluded (n=0)\n";

    json manifest = base_manifest(cfg, "augment");
    manifest["instances"] = augmented.size();
    manifest["retained_negatives"] = retained_total;
    manifest["excluded_instances"] = excluded;
    manifest["negatives_per_instance"] = negatives_per_instance;
    manifest["asset_hashes"] = hashes_to_json(store.loaded_hashes());
    manifest["file"] = "augmented.jsonl";
    write_json_file(dir / "augment.manifest.json", manifest);
    return 0;
}

// ---------------------------------------------------------------------------
// train-toy
// ---------------------------------------------------------------------------

namespace {

double scorer_ranking_accuracy(const objectives::ToyScorer& scorer,
                               const std::vector<augment::AugmentedInstance>& data) {
    std::size_t total = 0, correct = 0;
    for (const auto& inst : data) {
        double s_plus = scorer.score(inst.chosen, inst.chosen_quality.value_or(0.5));
        for (const auto& n : inst.negatives) {
            if (n.verdict != augment::NegativeVerdict::Keep) continue;
            ++total;
            if (s_plus > scorer.score(n.response, n.quality.value_or(0.5))) ++correct;
        }
    }
    return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
}

const std::vector<BiasType>& superficial_biases() {
    static const std::vector<BiasType> biases = {
        BiasType::Length,     BiasType::Authority, BiasType::Beauty, BiasType::Assertiveness,
        BiasType::Sycophancy, BiasType::Sentiment, BiasType::Concreteness,
    };
    return biases;
}

}  // namespace

int cmd_train_toy(const config::RunConfig& cfg) {
    auto dir = ensure_output_dir(cfg);
    const json& section = cfg.section("train");
    std::string data_path = section.value("data", (dir / "augmented.jsonl").string());
    if (!fs::exists(data_path))
        throw std::runtime_error("train-toy: missing augmented data at " + data_path);
    auto data = augment::read_augmented_file(data_path);

    std::string kind = section.value("kind", std::string("scorer"));
    json manifest = base_manifest(cfg, "train-toy");
    manifest["kind"] = kind;
    manifest["data"] = fs::path(data_path).filename().string();

    if (kind == "scorer") {
        objectives::ContrastiveConfig tcfg;
        tcfg.temperature = section.value("temperature", tcfg.temperature);
        tcfg.margin = section.value("margin", tcfg.margin);
        tcfg.negative_count = section.value("negative_count", tcfg.negative_count);
        tcfg.learning_rate = section.value("learning_rate", tcfg.learning_rate);
        tcfg.iterations = section.value("iterations", tcfg.iterations);
        tcfg.seed = section.value("train_seed", cfg.seed);

        std::string mode_name = section.value("mode", std::string("infonce"));
        objectives::ContrastiveMode mode;
        if (mode_name == "infonce") mode = objectives::ContrastiveMode::InfoNce;
        else if (mode_name == "hinge") mode = objectives::ContrastiveMode::Hinge;
        else throw config::UsageError("unknown train mode: " + mode_name);

        auto scorer = objectives::train_toy_scorer(data, tcfg, mode);
        write_json_file(dir / "toy_scorer.json", scorer.to_json());

        fixtures::FixtureOptions eval_fx;
        eval_fx.count = 48;
        eval_fx.seed = cfg.seed + 1000;
        eval_fx.marker_correlation = 0.0;  // plain pairs; only the injected feature moves
        eval_fx.long_rejected_fraction = 0.0;
        eval_fx.id_prefix = "ev";
        auto eval_set = fixtures::make_fixture_corpus(eval_fx);
        auto bsr_result = objectives::toy_scorer_bsr(scorer, eval_set, superficial_biases());

        json per_bias = json::object();
        for (const auto& [bias, value] : bsr_result.per_bias)
            per_bias[std::string(bias_slug(bias))] = value ? json(*value) : json(nullptr);

        manifest["mode"] = mode_name;
        manifest["hyperparameters"] = json{{"temperature", tcfg.temperature},
                                           {"margin", tcfg.margin},
                                           {"negative_count", tcfg.negative_count},
                                           {"learning_rate", tcfg.learning_rate},
                                           {"iterations", tcfg.iterations},
                                           {"seed", tcfg.seed}};
        manifest["asset_hashes"] =
            json{{"feature_map", assets::content_hash(scorer.map.to_json().dump())}};
        manifest["final_metrics"] =
            json{{"ranking_accuracy", scorer_ranking_accuracy(scorer, data)},
                 {"toy_bsr_overall", bsr_result.overall ? json(*bsr_result.overall) : json(nullptr)},
                 {"toy_bsr_per_bias", per_bias},
                 {"eval_acc_ori", bsr_result.acc_ori}};
        manifest["artifact"] = "toy_scorer.json";
        std::cerr << "[train-toy] scorer (" << mode_name << "): ranking accuracy "
                  << scorer_ranking_accuracy(scorer, data) << ", toy BSR "
                  << (bsr_result.overall ? std::to_string(*bsr_result.overall) : "undef") << "\n";
    } else if (kind == "policy") {
        objectives::GrpoConfig gcfg;
        gcfg.group_size = section.value("group_size", gcfg.group_size);
        gcfg.clip_eps = section.value("clip_eps", gcfg.clip_eps);
        gcfg.kl_coeff = section.value("kl_coeff", gcfg.kl_coeff);
        gcfg.std_floor = section.value("std_floor", gcfg.std_floor);
        gcfg.learning_rate = section.value("learning_rate", gcfg.learning_rate);
        gcfg.iterations = section.value("iterations", gcfg.iterations);
        gcfg.inner_steps = section.value("inner_steps", gcfg.inner_steps);
        gcfg.seed = section.value("train_seed", cfg.seed);

        auto policy = objectives::train_toy_policy(data, gcfg);
        write_json_file(dir / "toy_policy.json", policy.to_json());

        double acc = objectives::policy_expected_accuracy(policy, data, gcfg.seed);
        manifest["hyperparameters"] = json{{"group_size", gcfg.group_size},
                                           {"clip_eps", gcfg.clip_eps},
                                           {"kl_coeff", gcfg.kl_coeff},
                                           {"std_floor", gcfg.std_floor},
                                           {"learning_rate", gcfg.learning_rate},
                                           {"iterations", gcfg.iterations},
                                           {"inner_steps", gcfg.inner_steps},
                                           {"seed", gcfg.seed}};
        manifest["asset_hashes"] =
            json{{"feature_map", assets::content_hash(policy.map.to_json().dump())}};
        manifest["final_metrics"] = json{{"expected_accuracy", acc}};
        manifest["artifact"] = "toy_policy.json";
        std::cerr << "[train-toy] policy: expected accuracy " << acc << "\n";
    } else {
        throw config::UsageError("unknown train kind: " + kind);
    }

    write_json_file(dir / "train.manifest.json", manifest);
    return 0;
}

// ---------------------------------------------------------------------------
// gradcheck
// ---------------------------------------------------------------------------

namespace {

struct GradCheck {
    double max_rel_err = 0.0;
    std::size_t draws = 0;
};

double rel_err(double analytic, double numeric) {
    double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
    return std::abs(analytic - numeric) / scale;
}

GradCheck check_infonce(std::uint64_t seed, std::size_t draws) {
    GradCheck result;
    result.draws = draws;
    const double h = 1e-5;
    const std::size_t sizes[] = {0, 1, 2, 4, 8};
    const double taus[] = {1.0, 2.0, 0.5};

    rng::Stream stream(seed);
    for (std::size_t d = 0; d < draws; ++d) {
        std::size_t n = sizes[d % 5];
        double tau = taus[d % 3];
        double span = tau < 1.0 ? 1.0 : 2.0;  // keep softmax mass away from underflow
        double s_plus = stream.uniform(-span, span);
        double s_minus = stream.uniform(-span, span);
        std::vector<double> s_bias(n);
        for (auto& s : s_bias) s = stream.uniform(-span, span);

        auto loss_at = [&](double sp, double sm, const std::vector<double>& sb) {
            return objectives::infonce_loss(sp, sm, sb, tau).loss;
        };
        auto base = objectives::infonce_loss(s_plus, s_minus, s_bias, tau);

        double fd_plus = (loss_at(s_plus + h, s_minus, s_bias) -
                          loss_at(s_plus - h, s_minus, s_bias)) /
                         (2 * h);
        result.max_rel_err = std::max(result.max_rel_err, rel_err(base.d_plus, fd_plus));

        double fd_minus = (loss_at(s_plus, s_minus + h, s_bias) -
                           loss_at(s_plus, s_minus - h, s_bias)) /
                          (2 * h);
        result.max_rel_err = std::max(result.max_rel_err, rel_err(base.d_minus, fd_minus));

        for (std::size_t i = 0; i < n; ++i) {
            std::vector<double> up = s_bias, down = s_bias;
            up[i] += h;
            down[i] -= h;
            double fd = (loss_at(s_plus, s_minus, up) - loss_at(s_plus, s_minus, down)) / (2 * h);
            result.max_rel_err = std::max(result.max_rel_err, rel_err(base.d_bias[i], fd));
        }
    }
    return result;
}

GradCheck check_hinge(std::uint64_t seed, std::size_t draws) {
    GradCheck result;
    result.draws = draws;
    const double h = 1e-5;
    rng::Stream stream(seed);
    for (std::size_t d = 0; d < draws; ++d) {
        double margin = stream.uniform(0.5, 2.0);
        // Stay inside the active region, clear of the kink.
        double diff = stream.uniform(-2.0, margin - 0.1);
        double s_minus = stream.uniform(-1.0, 1.0);
        double s_plus = s_minus + diff;

        auto base = objectives::hinge_loss(s_plus, s_minus, margin);
        double fd_plus = (objectives::hinge_loss(s_plus + h, s_minus, margin).loss -
                          objectives::hinge_loss(s_plus - h, s_minus, margin).loss) /
                         (2 * h);
        double fd_minus = (objectives::hinge_loss(s_plus, s_minus + h, margin).loss -
                           objectives::hinge_loss(s_plus, s_minus - h, margin).loss) /
                          (2 * h);
        result.max_rel_err = std::max(result.max_rel_err, rel_err(base.d_plus, fd_plus));
        result.max_rel_err = std::max(result.max_rel_err, rel_err(base.d_minus, fd_minus));
    }
    return result;
}

}  // namespace

int cmd_gradcheck(std::ostream& out) {
    constexpr double kTolerance = 1e-6;
    bool ok = true;

    auto infonce = check_infonce(11, 120);
    out << "gradcheck infonce:  " << infonce.draws << " draws, max rel err " << infonce.max_rel_err
        << (infonce.max_rel_err < kTolerance ? "  PASS" : "  FAIL") << "\n";
    ok = ok && infonce.max_rel_err < kTolerance;

    auto hinge = check_hinge(13, 120);
    out << "gradcheck hinge:    " << hinge.draws << " draws, max rel err " << hinge.max_rel_err
        << (hinge.max_rel_err < kTolerance ? "  PASS" : "  FAIL") << "\n";
    ok = ok && hinge.max_rel_err < kTolerance;

    return ok ? 0 : 1;
}

}  // namespace judgebias::commands
