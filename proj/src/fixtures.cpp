#include "judgebias/fixtures.hpp"

#include <array>
#include <cmath>
#include <cstdio>

#include "judgebias/rng.hpp"

namespace judgebias::fixtures {

namespace {

struct Task {
    std::string instruction;
    std::string good;
    std::string bad;
};

std::string fmt1(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

Task make_task(rng::Stream& stream) {
    switch (stream.below(4)) {
        case 0: {
            // Decimal comparison in the spirit of the 0.9-vs-0.11 classic.
            double a = 0.1 + 0.01 * static_cast<double>(stream.below(80));
            double b = a + 0.05 + 0.01 * static_cast<double>(stream.below(60));
            if (stream.below(2) == 0) std::swap(a, b);
            std::string bigger = a > b ? fmt1(a) : fmt1(b);
            std::string smaller = a > b ? fmt1(b) : fmt1(a);
            return {"Which number is larger, " + fmt1(a) + " or " + fmt1(b) + "?",
                    bigger + " is larger than " + smaller + ".",
                    smaller + " is larger than " + bigger + "."};
        }
        case 1: {
            long a = 11 + static_cast<long>(stream.below(880));
            long b = 13 + static_cast<long>(stream.below(870));
            long wrong = a + b + 1 + static_cast<long>(stream.below(17));
            return {"What is " + std::to_string(a) + " plus " + std::to_string(b) + "?",
                    "The sum of " + std::to_string(a) + " and " + std::to_string(b) + " is " +
                        std::to_string(a + b) + ".",
                    "The sum of " + std::to_string(a) + " and " + std::to_string(b) + " is " +
                        std::to_string(wrong) + "."};
        }
        case 2: {
            static const std::array<std::array<const char*, 3>, 6> facts = {{
                {"France", "Paris", "Lyon"},
                {"Japan", "Tokyo", "Osaka"},
                {"Canada", "Ottawa", "Toronto"},
                {"Australia", "Canberra", "Sydney"},
                {"Brazil", "Brasilia", "Rio de Janeiro"},
                {"Egypt", "Cairo", "Alexandria"},
            }};
            const auto& f = facts[stream.below(facts.size())];
            return {std::string("What is the capital of ") + f[0] + "?",
                    std::string("The capital of ") + f[0] + " is " + f[1] + ".",
                    std::string("The capital of ") + f[0] + " is " + f[2] + "."};
        }
        default: {
            long km = 2 + static_cast<long>(stream.below(98));
            return {"How many meters are in " + std::to_string(km) + " kilometers?",
                    std::to_string(km) + " kilometers equal " + std::to_string(km * 1000) +
                        " meters.",
                    std::to_string(km) + " kilometers equal " + std::to_string(km * 100) +
                        " meters."};
        }
    }
}

const std::vector<BiasType>& style_marker_biases() {
    static const std::vector<BiasType> biases = {
        BiasType::Authority,  BiasType::Beauty,    BiasType::Assertiveness,
        BiasType::Sycophancy, BiasType::Sentiment, BiasType::Concreteness,
    };
    return biases;
}

}  // namespace

std::vector<PreferenceInstance> make_fixture_corpus(const FixtureOptions& options) {
    rng::Stream stream(rng::splitmix64(options.seed) ^ rng::fnv1a64(options.id_prefix));
    std::vector<PreferenceInstance> corpus;
    corpus.reserve(options.count);

    for (std::size_t i = 0; i < options.count; ++i) {
        Task task = make_task(stream);

        PreferenceInstance inst;
        char idbuf[32];
        std::snprintf(idbuf, sizeof(idbuf), "%s-%04zu", options.id_prefix.c_str(), i);
        inst.id = idbuf;
        inst.instruction = task.instruction;
        inst.source = "fixture";

        std::string chosen_text = task.good;
        std::string rejected_text = task.bad;

        // Latent task quality; the gap never closes below 0.1 so the
        // preference stays well defined.
        double chosen_quality = stream.uniform(0.55, 0.95);
        double rejected_quality = stream.uniform(0.05, 0.45);

        // Spurious style: good answers often cite, format, or elaborate, so
        // surface cues correlate with the label without causing it.
        if (stream.u01() < options.marker_correlation) {
            const auto& pool = style_marker_biases();
            std::size_t n_markers = 1 + stream.below(3);
            for (std::size_t m = 0; m < n_markers; ++m)
                chosen_text += " " + marker_token(pool[stream.below(pool.size())]);
            if (stream.u01() < 0.5) {
                std::size_t pad = 4 + stream.below(12);
                for (std::size_t p = 0; p < pad; ++p) chosen_text += " indeed";
            }
        }

        if (stream.u01() < options.long_rejected_fraction) {
            // Overlong rejected responses exercise the sampling length control.
            std::size_t pad = 3 * count_length_units(chosen_text) + 4;
            for (std::size_t p = 0; p < pad; ++p) rejected_text += " moreover";
        }

        inst.chosen = Response::from_text(chosen_text);
        inst.rejected = Response::from_text(rejected_text);
        inst.extra["meta"] = json{{"chosen_quality", chosen_quality},
                                  {"rejected_quality", rejected_quality}};
        corpus.push_back(std::move(inst));
    }
    return corpus;
}

}  // namespace judgebias::fixtures
