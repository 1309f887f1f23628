// Synthetic fixture corpus: small factual tasks with a known preference and
// latent quality metadata, plus controlled style cues spuriously correlated
// with the chosen response. Used by tests, the bundled pipelines, and the toy
// trainers.
#pragma once

#include <cstdint>
#include <vector>

#include "judgebias/core.hpp"

namespace judgebias::fixtures {

struct FixtureOptions {
    std::size_t count = 64;
    std::uint64_t seed = 7;
    // Probability that a chosen response carries spurious style markers
    // (and occasionally extra verbosity). Zero yields plain evaluation sets.
    double marker_correlation = 0.6;
    // Fraction of pairs given a rejected/chosen length ratio above 2.0, to
    // exercise the sampling length control.
    double long_rejected_fraction = 0.1;
    std::string id_prefix = "fx";
};

std::vector<PreferenceInstance> make_fixture_corpus(const FixtureOptions& options);

}  // namespace judgebias::fixtures
