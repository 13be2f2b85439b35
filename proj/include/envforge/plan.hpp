#pragma once

#include <compare>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "envforge/gateway.hpp"
#include "envforge/proposal.hpp"

namespace envforge {

// Task identifier "X.Y.Z" (phase.module.task). Ordering is lexicographic on
// the three components, which in a well-formed plan coincides with document
// order.
struct TaskId {
    int phase = 0;
    int module = 0;
    int task = 0;

    auto operator<=>(const TaskId&) const = default;

    std::string str() const;
    static TaskId parse(const std::string& text);  // throws ParseError
    static std::optional<TaskId> try_parse(const std::string& text);
};

struct NamedTest {
    std::string name;
    std::string description;
    bool operator==(const NamedTest&) const = default;
};

struct TaskSpec {
    TaskId id;
    std::string title;
    std::string description;
    std::vector<TaskId> dependencies;
    int difficulty = 0;  // 1..5
    std::vector<NamedTest> code_tests;
    std::vector<NamedTest> visual_tests;  // parsed, never executed
    bool tests_na = false;                // document explicitly marks N/A

    bool has_tests() const { return !code_tests.empty() || !visual_tests.empty(); }
    bool operator==(const TaskSpec&) const = default;
};

struct PlanModule {
    int number = 0;  // Y in "Module X.Y"
    std::string name;
    std::vector<TaskSpec> tasks;
    bool operator==(const PlanModule&) const = default;
};

struct Phase {
    int number = 0;
    std::string name;
    std::string goal;
    std::vector<PlanModule> modules;
    bool operator==(const Phase&) const = default;
};

struct TaskPlan {
    std::string project_description;
    std::string project_instruction;
    std::vector<Phase> phases;

    const TaskSpec* find(const TaskId& id) const;
    std::vector<const TaskSpec*> all_tasks() const;  // document order
    bool operator==(const TaskPlan&) const = default;
};

// Parses the exact plan heading grammar (## Phase, ### Module, #### Task,
// bold field labels). Unknown trailing sections are ignored; a warning is
// recorded for each. Missing required fields and malformed ids throw
// ParseError naming the task and field.
TaskPlan parse_plan(const std::string& text, ParseWarnings* warnings = nullptr);

// Inverse writer producing the canonical on-disk tasks.md form.
// parse_plan(render_plan(p)) == p for every plan that parses.
std::string render_plan(const TaskPlan& plan);

// Renders one task's "#### Task ..." block (used in checklist prompts).
std::string render_task_block(const TaskSpec& task);

// Phase count <= 5, dense numbering, dependency existence, no forward
// dependencies, acyclicity, and tests-or-N/A per task.
ValidationReport validate_plan(const TaskPlan& plan);

// Dependency-respecting total order, ties broken by lexicographic TaskId.
// Throws StateError on a cycle (unreachable after validate_plan passes).
std::vector<TaskId> topological_order(const TaskPlan& plan);

struct PlanPromptConfig {
    std::filesystem::path templates_dir;  // <dir>/plan/{system,user,continue}.txt
    std::string model_id;
    int continuation_budget = 3;
    int max_output_tokens = 16384;
    double temperature = 0.0;
};

class PlanEngine {
public:
    PlanEngine(LlmGateway& gateway, PlanPromptConfig config);

    // Renders the plan templates for the proposal, applies the continuation
    // protocol while the closing </tasks> tag is missing, and returns the
    // text between <tasks> and </tasks>.
    std::string generate_plan(const ProjectProposal& proposal);

private:
    LlmGateway& gateway_;
    PlanPromptConfig config_;
};

}  // namespace envforge
