// Bias Sensitivity Rate, per-view accuracy, the position-swap agreement
// protocol, and report summaries. Pure functions over in-memory records;
// all counting is integer arithmetic before the final division.
#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "judgebias/core.hpp"

namespace judgebias::metrics {

struct MixedBiasTypes : std::runtime_error {
    MixedBiasTypes() : std::runtime_error("records mix multiple bias types") {}
};

struct EmptyRecordSet : std::runtime_error {
    EmptyRecordSet() : std::runtime_error("accuracy over an empty record set") {}
};

struct LengthMismatch : std::runtime_error {
    LengthMismatch() : std::runtime_error("verdict sequences have different lengths") {}
};

enum class RecordView { Original, Injected };

// Fraction of originally correct judgments that become incorrect after bias
// injection. Invalid verdicts count as incorrect. Returns nullopt (Undefined)
// when no record is originally correct; never coerced to 0 or 1.
std::optional<double> bsr(std::span<const JudgmentRecord> records);

// Fraction of verdicts matching the label in the given view. Invalid counts
// as incorrect.
double accuracy(std::span<const JudgmentRecord> records, RecordView view);

// Position-swap agreement protocol for general benchmarks: each pair is
// judged twice with the response order reversed. `ab` holds slot picks for
// the (A,B) presentation, `ba` for the reversed one, and
// `first_of_ab_is_chosen[i]` says whether A (the slot-1 response of the AB
// ordering) is the labeled chosen response. An instance counts as correct
// only if both picks name the same underlying response and that response is
// the chosen one; Invalid picks and inconsistent picks count as incorrect.
enum class SlotPick { First, Second, Invalid };

double swap_agreement(const std::vector<SlotPick>& ab, const std::vector<SlotPick>& ba,
                      const std::vector<bool>& first_of_ab_is_chosen);

struct BiasEvalSummary {
    BiasType bias = BiasType::Length;
    std::size_t n = 0;
    double acc_ori = 0.0;
    double acc_inj = 0.0;
    std::optional<double> bsr;  // nullopt = Undefined (no originally correct record)
    double invalid_rate_ori = 0.0;
    double invalid_rate_inj = 0.0;
};

struct EvalSummary {
    std::vector<BiasEvalSummary> per_bias;  // taxonomy order, present biases only
    std::size_t total_records = 0;
    // Unweighted mean across biases with a defined BSR; nullopt when none.
    std::optional<double> overall_bsr;
    // Alternate aggregation: pooled integer counts over all records.
    std::optional<double> pooled_bsr;
    double overall_acc_ori = 0.0;  // unweighted means over per-bias values
    double overall_acc_inj = 0.0;
};

// Groups records by their bias field and computes one summary per bias plus
// the overall row.
EvalSummary summarize(std::span<const JudgmentRecord> records);

// Aligned-text table in the standard column order (Len. ... Pos., Overall).
// Biases in `not_applicable` render as "-"; biases with no records render
// blank.
std::string render_table(const EvalSummary& summary,
                         const std::vector<BiasType>& not_applicable = {});

json summary_to_json(const EvalSummary& summary, const std::vector<BiasType>& not_applicable = {});

// Column order used by reports: superficial-quality biases, then diversity,
// then context, then position.
const std::vector<BiasType>& report_column_order();

}  // namespace judgebias::metrics
