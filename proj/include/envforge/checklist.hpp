#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "envforge/gateway.hpp"
#include "envforge/plan.hpp"

namespace envforge {

struct ChecklistCase {
    std::string name;
    std::string purpose;
    std::vector<std::string> happy;       // normal / happy path scenarios
    std::vector<std::string> edge;        // edge cases and boundaries
    std::vector<std::string> error;       // error handling / exceptions
    std::vector<std::string> assertions;  // at least one per case

    bool operator==(const ChecklistCase&) const = default;
};

struct TestChecklist {
    TaskId task_id;
    std::vector<ChecklistCase> cases;

    bool operator==(const TestChecklist&) const = default;
};

// Parses "## Test Case N: Name" documents with **Purpose:**, scenario
// groups (happy / edge / error, matched by keyword) and an Assertions list.
// Throws ParseError when no case is found or a case has no assertions.
TestChecklist parse_checklist(const TaskId& task_id, const std::string& text);

// Canonical writer; parse_checklist(render_checklist(c)) == c.
std::string render_checklist(const TestChecklist& checklist);

struct ChecklistPromptConfig {
    std::filesystem::path templates_dir;  // <dir>/checklist/{system,user}.txt
    std::string model_id;
    int max_output_tokens = 8192;
    double temperature = 0.0;
};

class ChecklistEngine {
public:
    ChecklistEngine(LlmGateway& gateway, ChecklistPromptConfig config);

    // Prompts for the unit-test checklist of one task. Every previous
    // checklist is included verbatim in the payload so later checklists can
    // avoid duplication. Precondition: the task exists and is not N/A.
    TestChecklist generate_checklist(const TaskPlan& plan, const TaskId& task_id,
                                     const std::vector<TestChecklist>& previous);

    // Exposed for the append-only payload property test.
    std::string build_user_prompt(const TaskPlan& plan, const TaskId& task_id,
                                  const std::vector<TestChecklist>& previous) const;

private:
    LlmGateway& gateway_;
    ChecklistPromptConfig config_;
};

}  // namespace envforge
