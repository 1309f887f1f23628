// Pipeline stages behind the CLI: inject -> filter -> evaluate -> report,
// plus augment, the toy trainers, and the gradient-check gate. Each command
// is re-runnable and idempotent given identical inputs; every output file
// carries the config hash and the hashes of the prompt/template assets it
// used.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "judgebias/config.hpp"

namespace judgebias::commands {

struct MakeFixturesOptions {
    std::string out_path = "data/fixture_corpus.jsonl";
    std::size_t count = 64;
    std::uint64_t seed = 7;
    double marker_correlation = 0.6;
};

int cmd_make_fixtures(const MakeFixturesOptions& options);

int cmd_inject(const config::RunConfig& cfg);
int cmd_filter(const config::RunConfig& cfg);
int cmd_evaluate(const config::RunConfig& cfg);
int cmd_augment(const config::RunConfig& cfg);
int cmd_train_toy(const config::RunConfig& cfg);

// Renders the summary table from record files; with an empty list, every
// *.records.jsonl in the output directory is used.
int cmd_report(const config::RunConfig& cfg, const std::vector<std::string>& record_files = {});

// Verifies the analytic gradients of the contrastive losses against central
// finite differences; prints one line per check and returns nonzero on any
// mismatch.
int cmd_gradcheck(std::ostream& out);

}  // namespace judgebias::commands
