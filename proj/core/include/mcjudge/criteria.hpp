#pragma once

// Relevance criteria and the three chat prompt shapes built from them:
// per-criterion grading, grade aggregation, and direct (single-prompt) grading.

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mcjudge {

struct Criterion {
    std::string key;           ///< stable identifier, e.g. "exactness"
    std::string display_name;  ///< inserted as the criterion name, e.g. "Exactness"
    std::string description;   ///< question form; normalised when inlined into a prompt
    std::string code;          ///< one-letter abbreviation used for subsets ("E", "T", "C", "F")

    bool operator==(const Criterion&) const = default;
};

/// criterion key -> grade 0..3
using CriterionGrades = std::map<std::string, int, std::less<>>;

/// Ordered, non-empty list of criteria with unique keys (and unique codes where given).
/// Order is significant: it fixes the order of grade lines in aggregation prompts.
class CriteriaSet {
public:
    explicit CriteriaSet(std::vector<Criterion> criteria);

    const std::vector<Criterion>& criteria() const { return criteria_; }
    std::size_t size() const { return criteria_.size(); }
    auto begin() const { return criteria_.begin(); }
    auto end() const { return criteria_.end(); }

    const Criterion* find(std::string_view key) const;
    const Criterion& at(std::string_view key) const;  ///< throws SpecError
    bool contains(std::string_view key) const { return find(key) != nullptr; }

    std::vector<std::string> keys() const;

    /// Criteria whose keys appear in `keys`, in this set's order. Throws SpecError for unknown keys.
    CriteriaSet subset(const std::vector<std::string>& keys) const;

    /// Resolves "E,T,C,F", "TCF", "exactness,coverage", or a single key/code.
    CriteriaSet select(std::string_view spec) const;

    bool operator==(const CriteriaSet&) const = default;

private:
    std::vector<Criterion> criteria_;
};

/// Exactness, Topicality, Coverage, Contextual Fit.
CriteriaSet default_criteria();

/// JSON: { "criteria": [ {"key", "display_name", "description", "code"?}, ... ] }
CriteriaSet parse_criteria_json(std::string_view text);
CriteriaSet load_criteria_file(const std::string& path);

struct PromptPair {
    std::string system_message;
    std::string user_message;

    bool operator==(const PromptPair&) const = default;
};

/// Description as it appears after "indicating": trailing '?' removed, first letter lower-cased.
std::string inline_description(std::string_view description);

std::string_view criterion_system_message();
std::string_view relevance_system_message();

PromptPair render_criterion_prompt(const Criterion& criterion, std::string_view query, std::string_view passage);

/// One "<Display Name>: <grade>" line per criterion of `active`, in its order.
/// `grades` must hold exactly the keys of `active`.
PromptPair render_aggregation_prompt(std::string_view query, std::string_view passage, const CriteriaSet& active,
                                     const CriterionGrades& grades);

PromptPair render_direct_prompt(std::string_view query, std::string_view passage);

enum class PromptKind { criterion, aggregation, direct };

/// What a rendered prompt was built from. Inverse of the render functions.
struct PromptFields {
    PromptKind kind = PromptKind::direct;
    std::string criterion_key;  ///< criterion prompts only
    std::string query;
    std::string passage;
    CriterionGrades grades;     ///< aggregation prompts only
};

/// Recognises prompts produced by the render functions for criteria in `criteria`.
/// Returns nullopt for anything else.
std::optional<PromptFields> parse_rendered_prompt(const PromptPair& prompt, const CriteriaSet& criteria);

}  // namespace mcjudge
