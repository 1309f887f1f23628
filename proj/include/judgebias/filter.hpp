// Consistency filtering: a bias-injected instance is retained only if a
// verifier judge still prefers the original chosen response over the injected
// pair. Applies to counterfactually rewritten and identity-injected
// instances; context and presentation instances bypass the filter unchanged.
#pragma once

#include <string>
#include <vector>

#include "judgebias/core.hpp"
#include "judgebias/judges.hpp"

namespace judgebias::filter {

enum class FilterOutcome { Keep, Discard, Invalid };

struct FilterReport {
    BiasType bias = BiasType::Length;
    std::size_t input_count = 0;
    std::size_t retained_count = 0;
    std::size_t discarded_count = 0;
    std::size_t invalid_count = 0;
    std::vector<std::string> retained_ids;  // input order
    bool bypassed = false;                  // context/presentation pass-through
    // The verifier always sees the injected pair in its stored order with the
    // chosen response first (except position instances, which bypass).
    std::string ordering = "chosen-first";

    json to_json() const;
};

// Keep iff the verifier's preference over the injected pair equals the
// original human label; Discard iff it reverses; Invalid iff the verdict is
// unparseable (transport retries happen inside the judge). Invalid discards
// the instance from the benchmark but is counted separately.
FilterOutcome verify_consistency(const BiasedInstance& bi, judges::Judge& verifier);

// Filters a single-bias batch with bounded parallelism. The retained set
// preserves input order. Context/presentation batches are returned unchanged
// with bypassed=true.
std::pair<std::vector<BiasedInstance>, FilterReport> run_filter(
    const std::vector<BiasedInstance>& instances, judges::Judge& verifier, int concurrency = 4);

}  // namespace judgebias::filter
