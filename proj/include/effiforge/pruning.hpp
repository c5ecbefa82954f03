#pragma once

#include <string>
#include <vector>

#include "effiforge/model.hpp"

namespace effiforge {

/// Why a task was discarded, or KEPT. Rules are checked in the fixed order
/// FEASIBILITY -> IMPACTFULNESS -> DIVERSITY and the first failure is
/// recorded, so the per-rule counts are mutually exclusive. NO_SUITE is
/// decided upstream, for tasks whose problem never produced a stress suite.
enum class PruneRule { NO_SUITE, FEASIBILITY, IMPACTFULNESS, DIVERSITY, KEPT };

std::string rule_name(PruneRule rule);

struct PruneDecision {
    TranslationTask task;
    bool kept = false;
    PruneRule rule = PruneRule::KEPT;
};

/// Feasibility: at least one verified correct translation exists.
bool check_feasibility(const ReferencePool& pool);

/// Impactfulness: some member's stress profile exceeds the time threshold or
/// the memory threshold (strictly).
bool check_impactfulness(const ReferencePool& pool, const PruneConfig& cfg);

/// Diversity: coefficient of variation of member times or memories reaches
/// eps_div. CV uses the sample (n-1) standard deviation unless
/// cfg.population_cv is set, and is 0 for a single member or a zero mean.
bool check_diversity(const ReferencePool& pool, const PruneConfig& cfg);

/// Per-metric coefficient of variation of a pool's member profiles.
double pool_cv(const ReferencePool& pool, MetricKind metric, const PruneConfig& cfg);

/// Applies the three filters in order to every pool.
std::vector<PruneDecision> prune_tasks(const std::vector<ReferencePool>& pools,
                                       const PruneConfig& cfg);

/// Mutually exclusive decision counts, in rule order.
struct PruneCounts {
    int no_suite = 0;
    int feasibility = 0;
    int impactfulness = 0;
    int diversity = 0;
    int kept = 0;
};

PruneCounts count_decisions(const std::vector<PruneDecision>& decisions);

}  // namespace effiforge
