#include "effiforge/pruning.hpp"

#include <stdexcept>

#include "effiforge/util.hpp"

namespace effiforge {

std::string rule_name(PruneRule rule) {
    switch (rule) {
        case PruneRule::NO_SUITE: return "NO_SUITE";
        case PruneRule::FEASIBILITY: return "FEASIBILITY";
        case PruneRule::IMPACTFULNESS: return "IMPACTFULNESS";
        case PruneRule::DIVERSITY: return "DIVERSITY";
        case PruneRule::KEPT: return "KEPT";
    }
    throw std::logic_error("unreachable: bad PruneRule");
}

bool check_feasibility(const ReferencePool& pool) { return !pool.members.empty(); }

bool check_impactfulness(const ReferencePool& pool, const PruneConfig& cfg) {
    for (const PoolMember& m : pool.members)
        if (m.profile.wall_time > cfg.eps_time || m.profile.peak_memory > cfg.eps_mem)
            return true;
    return false;
}

double pool_cv(const ReferencePool& pool, MetricKind metric, const PruneConfig& cfg) {
    std::vector<double> values;
    values.reserve(pool.members.size());
    for (const PoolMember& m : pool.members)
        values.push_back(metric == MetricKind::TIME ? m.profile.wall_time
                                                    : m.profile.peak_memory);
    if (values.empty()) return 0.0;
    const double m = mean(values);
    if (m == 0.0) return 0.0;  // degenerate spectrum, treated as no variation
    const double s = cfg.population_cv ? population_stddev(values) : sample_stddev(values);
    return s / m;
}

bool check_diversity(const ReferencePool& pool, const PruneConfig& cfg) {
    return pool_cv(pool, MetricKind::TIME, cfg) >= cfg.eps_div ||
           pool_cv(pool, MetricKind::MEM, cfg) >= cfg.eps_div;
}

std::vector<PruneDecision> prune_tasks(const std::vector<ReferencePool>& pools,
                                       const PruneConfig& cfg) {
    std::vector<PruneDecision> decisions;
    decisions.reserve(pools.size());
    for (const ReferencePool& pool : pools) {
        PruneDecision d;
        d.task = pool.task;
        if (!check_feasibility(pool)) {
            d.rule = PruneRule::FEASIBILITY;
        } else if (!check_impactfulness(pool, cfg)) {
            d.rule = PruneRule::IMPACTFULNESS;
        } else if (!check_diversity(pool, cfg)) {
            d.rule = PruneRule::DIVERSITY;
        } else {
            d.rule = PruneRule::KEPT;
            d.kept = true;
        }
        decisions.push_back(std::move(d));
    }
    return decisions;
}

PruneCounts count_decisions(const std::vector<PruneDecision>& decisions) {
    PruneCounts c;
    for (const PruneDecision& d : decisions) {
        switch (d.rule) {
            case PruneRule::NO_SUITE: ++c.no_suite; break;
            case PruneRule::FEASIBILITY: ++c.feasibility; break;
            case PruneRule::IMPACTFULNESS: ++c.impactfulness; break;
            case PruneRule::DIVERSITY: ++c.diversity; break;
            case PruneRule::KEPT: ++c.kept; break;
        }
    }
    return c;
}

}  // namespace effiforge
