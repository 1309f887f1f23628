#include "judgebias/filter.hpp"

#include <atomic>
#include <mutex>
#include <thread>

#include "judgebias/metrics.hpp"

namespace judgebias::filter {

json FilterReport::to_json() const {
    json retained = json::array();
    for (const auto& id : retained_ids) retained.push_back(id);
    return json{{"bias", std::string(bias_slug(bias))},
                {"input_count", input_count},
                {"retained_count", retained_count},
                {"discarded_count", discarded_count},
                {"invalid_count", invalid_count},
                {"retained_ids", retained},
                {"bypassed", bypassed},
                {"ordering", ordering}};
}

FilterOutcome verify_consistency(const BiasedInstance& bi, judges::Judge& verifier) {
    BiasCategory category = classify_bias(bi.bias);
    if (category == BiasCategory::Context || category == BiasCategory::Presentation)
        return FilterOutcome::Keep;

    judges::JudgeInput input;
    input.instance_id = bi.original.id;
    input.bias = bi.bias;
    input.injected_view = true;
    input.instruction = bi.original.instruction;
    input.view = &bi.injected;

    switch (verifier.evaluate(input).choice) {
        case Verdict::Chosen: return FilterOutcome::Keep;
        case Verdict::Rejected: return FilterOutcome::Discard;
        case Verdict::Invalid: return FilterOutcome::Invalid;
    }
    return FilterOutcome::Invalid;
}

std::pair<std::vector<BiasedInstance>, FilterReport> run_filter(
    const std::vector<BiasedInstance>& instances, judges::Judge& verifier, int concurrency) {
    FilterReport report;
    report.input_count = instances.size();
    if (instances.empty()) return {{}, report};

    report.bias = instances.front().bias;
    for (const auto& bi : instances) {
        if (bi.bias != report.bias) throw metrics::MixedBiasTypes{};
    }

    BiasCategory category = classify_bias(report.bias);
    if (category == BiasCategory::Context || category == BiasCategory::Presentation) {
        report.bypassed = true;
        report.retained_count = instances.size();
        for (const auto& bi : instances) report.retained_ids.push_back(bi.original.id);
        return {instances, report};
    }

    std::vector<FilterOutcome> outcomes(instances.size(), FilterOutcome::Invalid);
    int workers = std::clamp<int>(concurrency, 1, static_cast<int>(instances.size()));
    if (workers > 1) {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next.fetch_add(1); i < instances.size();
                     i = next.fetch_add(1)) {
                    outcomes[i] = verify_consistency(instances[i], verifier);
                }
            });
        }
        for (auto& t : pool) t.join();
    } else {
        for (std::size_t i = 0; i < instances.size(); ++i)
            outcomes[i] = verify_consistency(instances[i], verifier);
    }

    std::vector<BiasedInstance> retained;
    for (std::size_t i = 0; i < instances.size(); ++i) {
        switch (outcomes[i]) {
            case FilterOutcome::Keep:
                retained.push_back(instances[i]);
                report.retained_ids.push_back(instances[i].original.id);
                ++report.retained_count;
                break;
            case FilterOutcome::Discard: ++report.discarded_count; break;
            case FilterOutcome::Invalid: ++report.invalid_count; break;
        }
    }
    return {std::move(retained), std::move(report)};
}

}  // namespace judgebias::filter
