#include "envforge/checklist.hpp"

#include <regex>

#include "envforge/errors.hpp"
#include "envforge/util.hpp"

namespace envforge {

namespace {

const std::regex kCaseRe(R"(^##\s+Test Case\s+(\d+)\s*:\s*(.*?)\s*$)");
const std::regex kPurposeRe(R"(^\s*\*\*Purpose:\*\*\s*(.*?)\s*$)");
// Bold group label, optionally numbered: "1. **Happy Path Cases:**"
const std::regex kGroupRe(R"(^\s*(?:\d+\.\s*)?\*\*(.+?):?\*\*\s*$)");
const std::regex kBulletRe(R"(^\s*-\s+(.*?)\s*$)");
const std::regex kSectionRe(R"(^###\s+(.*?)\s*$)");

enum class Group { none, happy, edge, error, assertions };

Group classify_group(const std::string& label) {
    std::string l = util::to_lower(label);
    if (l.find("happy") != std::string::npos || l.find("normal") != std::string::npos)
        return Group::happy;
    if (l.find("edge") != std::string::npos || l.find("boundar") != std::string::npos)
        return Group::edge;
    if (l.find("error") != std::string::npos ||
        l.find("exception") != std::string::npos)
        return Group::error;
    if (l.find("assertion") != std::string::npos) return Group::assertions;
    return Group::none;
}

}  // namespace

TestChecklist parse_checklist(const TaskId& task_id, const std::string& text) {
    TestChecklist checklist;
    checklist.task_id = task_id;

    ChecklistCase* current = nullptr;
    Group group = Group::none;
    bool in_purpose = false;

    for (const auto& raw : util::split_lines(util::normalize_newlines(text))) {
        const std::string line = util::trim_right(raw);
        std::smatch m;
        if (std::regex_match(line, m, kCaseRe)) {
            checklist.cases.push_back(ChecklistCase{});
            current = &checklist.cases.back();
            current->name = m[2];
            group = Group::none;
            in_purpose = false;
            continue;
        }
        if (!current) continue;

        if (std::regex_match(line, m, kPurposeRe)) {
            current->purpose = m[1];
            in_purpose = current->purpose.empty();
            group = Group::none;
            continue;
        }
        if (std::regex_match(line, m, kSectionRe)) {
            // "### Test Scenarios" / "### Assertions"
            group = classify_group(m[1]);
            in_purpose = false;
            continue;
        }
        if (std::regex_match(line, m, kGroupRe)) {
            Group g = classify_group(m[1]);
            if (g != Group::none) group = g;
            in_purpose = false;
            continue;
        }
        if (std::regex_match(line, m, kBulletRe)) {
            const std::string item = m[1];
            switch (group) {
                case Group::happy: current->happy.push_back(item); break;
                case Group::edge: current->edge.push_back(item); break;
                case Group::error: current->error.push_back(item); break;
                case Group::assertions: current->assertions.push_back(item); break;
                case Group::none: break;  // stray bullet outside any group
            }
            continue;
        }
        if (in_purpose && !line.empty()) {
            if (!current->purpose.empty()) current->purpose += ' ';
            current->purpose += util::trim(line);
            continue;
        }
        if (line.empty()) in_purpose = in_purpose && current->purpose.empty();
    }

    if (checklist.cases.empty())
        throw ParseError("checklist for task " + task_id.str() +
                         ": no test cases found");
    for (const auto& c : checklist.cases) {
        if (c.assertions.empty())
            throw ParseError("checklist for task " + task_id.str() + ": case \"" +
                             c.name + "\" has no assertions");
    }
    return checklist;
}

std::string render_checklist(const TestChecklist& checklist) {
    std::string out;
    for (size_t i = 0; i < checklist.cases.size(); ++i) {
        const auto& c = checklist.cases[i];
        if (i) out += "\n---\n\n";
        out += "## Test Case " + std::to_string(i + 1) + ": " + c.name + "\n\n";
        out += "**Purpose:** " + c.purpose + "\n\n";
        out += "### Test Scenarios\n\n";
        out += "1. **Happy Path Cases:**\n";
        for (const auto& s : c.happy) out += "   - " + s + "\n";
        out += "\n2. **Edge Cases / Boundaries:**\n";
        for (const auto& s : c.edge) out += "   - " + s + "\n";
        out += "\n3. **Error Handling:**\n";
        for (const auto& s : c.error) out += "   - " + s + "\n";
        out += "\n### Assertions\n\n";
        for (const auto& a : c.assertions) out += "- " + a + "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// ChecklistEngine
// ---------------------------------------------------------------------------

ChecklistEngine::ChecklistEngine(LlmGateway& gateway, ChecklistPromptConfig config)
    : gateway_(gateway), config_(std::move(config)) {}

std::string ChecklistEngine::build_user_prompt(
    const TaskPlan& plan, const TaskId& task_id,
    const std::vector<TestChecklist>& previous) const {
    const auto dir = config_.templates_dir / "checklist";
    const std::string user_tmpl = util::read_text_file(dir / "user.txt");

    // Every prior checklist goes into the payload verbatim, oldest first.
    std::string previous_text;
    for (const auto& prev : previous) {
        previous_text += "Unit tests for Task " + prev.task_id.str() + ":\n\n";
        previous_text += render_checklist(prev);
        previous_text += "\n";
    }
    if (previous_text.empty()) previous_text = "(none yet)\n";

    const TaskSpec* task = plan.find(task_id);
    if (!task)
        throw StateError("checklist requested for unknown task " + task_id.str());

    return util::render_template(
        user_tmpl, {{"project_description", plan.project_description},
                    {"tasks_prompt", render_plan(plan)},
                    {"previous_unit_tests", previous_text},
                    {"unit_test_prompt", render_task_block(*task)}});
}

TestChecklist ChecklistEngine::generate_checklist(
    const TaskPlan& plan, const TaskId& task_id,
    const std::vector<TestChecklist>& previous) {
    const TaskSpec* task = plan.find(task_id);
    if (!task)
        throw StateError("checklist requested for unknown task " + task_id.str());
    if (task->tests_na)
        throw StateError("task " + task_id.str() +
                         " is marked N/A and takes no checklist");

    const auto dir = config_.templates_dir / "checklist";
    CompletionRequest request;
    request.model_id = config_.model_id;
    request.max_output_tokens = config_.max_output_tokens;
    request.temperature = config_.temperature;
    request.messages = {{Role::system, util::read_text_file(dir / "system.txt")},
                        {Role::user, build_user_prompt(plan, task_id, previous)}};

    const CompletionResponse response = gateway_.complete(request);
    return parse_checklist(task_id, response.content);
}

}  // namespace envforge
