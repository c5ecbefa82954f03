#include "effiforge/validation.hpp"

#include <stdexcept>

#include "effiforge/util.hpp"
#include "json.hpp"

namespace effiforge {

std::string rejection_name(RejectionKind kind) {
    switch (kind) {
        case RejectionKind::INTEGRITY: return "INTEGRITY";
        case RejectionKind::CONSISTENCY: return "CONSISTENCY";
    }
    throw std::logic_error("unreachable: bad RejectionKind");
}

ValidationResult validate_test(Runner& runner,
                               const std::map<SubjectLanguage, CompiledHandle>& refs,
                               const TestInput& input, const Limits& limits) {
    for (SubjectLanguage lang : kAllLanguages) {
        auto it = refs.find(lang);
        if (it == refs.end() || !it->second.ok())
            throw std::invalid_argument("validate_test: no compiled reference for " +
                                        lang_name(lang));
    }

    // All three always run, even after an early failure: the per-language
    // statuses make rejection logs diagnosable.
    std::map<SubjectLanguage, RunStatus> statuses;
    std::map<SubjectLanguage, std::string> outputs;
    bool integrity_ok = true;
    for (SubjectLanguage lang : kAllLanguages) {
        ExecutionOutcome o = runner.execute(refs.at(lang), input, limits);
        statuses[lang] = o.status;
        if (o.status != RunStatus::OK) integrity_ok = false;
        else outputs[lang] = normalize_output(o.stdout_bytes);
    }

    ValidationResult result;
    if (!integrity_ok) {
        Rejection r;
        r.kind = RejectionKind::INTEGRITY;
        r.test_id = input.id;
        r.statuses = std::move(statuses);
        for (const auto& [lang, status] : r.statuses)
            if (status != RunStatus::OK)
                r.detail += (r.detail.empty() ? "" : ", ") + lang_name(lang) + ": " +
                            status_name(status);
        result.rejection = std::move(r);
        return result;
    }

    const std::string& consensus = outputs.begin()->second;
    for (const auto& [lang, out] : outputs) {
        if (out != consensus) {
            Rejection r;
            r.kind = RejectionKind::CONSISTENCY;
            r.test_id = input.id;
            r.statuses = std::move(statuses);
            r.outputs = std::move(outputs);
            r.detail = "reference implementations disagree on output";
            result.rejection = std::move(r);
            return result;
        }
    }

    TestCase test;
    test.input = input;
    test.expected_output = consensus;
    result.test = std::move(test);
    return result;
}

std::string rejection_to_jsonl(const Rejection& rejection) {
    using nlohmann::json;
    json statuses = json::object();
    for (const auto& [lang, status] : rejection.statuses)
        statuses[lang_name(lang)] = status_name(status);
    json outputs = json::object();
    for (const auto& [lang, out] : rejection.outputs)
        outputs[lang_name(lang)] = out.size() > 256 ? out.substr(0, 256) + "..." : out;
    json j{{"test_id", rejection.test_id},
           {"reason", rejection_name(rejection.kind)},
           {"statuses", std::move(statuses)},
           {"detail", rejection.detail}};
    if (!outputs.empty()) j["outputs"] = std::move(outputs);
    return j.dump();
}

}  // namespace effiforge
