#include "envforge/plan.hpp"

#include <algorithm>
#include <map>
#include <queue>
#include <regex>
#include <set>

#include "envforge/errors.hpp"
#include "envforge/util.hpp"

namespace envforge {

// ---------------------------------------------------------------------------
// TaskId
// ---------------------------------------------------------------------------

std::string TaskId::str() const {
    return std::to_string(phase) + "." + std::to_string(module) + "." +
           std::to_string(task);
}

std::optional<TaskId> TaskId::try_parse(const std::string& text) {
    static const std::regex re(R"(^\s*(\d+)\.(\d+)\.(\d+)\s*$)");
    std::smatch m;
    if (!std::regex_match(text, m, re)) return std::nullopt;
    TaskId id{std::stoi(m[1]), std::stoi(m[2]), std::stoi(m[3])};
    if (id.phase < 1 || id.module < 1 || id.task < 1) return std::nullopt;
    return id;
}

TaskId TaskId::parse(const std::string& text) {
    auto id = try_parse(text);
    if (!id) throw ParseError("malformed task id: \"" + util::trim(text) + "\"");
    return *id;
}

const TaskSpec* TaskPlan::find(const TaskId& id) const {
    for (const auto& ph : phases)
        for (const auto& mod : ph.modules)
            for (const auto& t : mod.tasks)
                if (t.id == id) return &t;
    return nullptr;
}

std::vector<const TaskSpec*> TaskPlan::all_tasks() const {
    std::vector<const TaskSpec*> out;
    for (const auto& ph : phases)
        for (const auto& mod : ph.modules)
            for (const auto& t : mod.tasks) out.push_back(&t);
    return out;
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

namespace {

const std::regex kPhaseRe(R"(^##\s+Phase\s+(\d+)\s*:\s*(.*?)\s*$)");
const std::regex kModuleRe(R"(^###\s+Module\s+(\d+)\.(\d+)\s*:\s*(.*?)\s*$)");
const std::regex kTaskRe(R"(^####\s+Task\s+([0-9.]+)\s*:\s*(.*?)\s*$)");
const std::regex kGoalRe(R"(^\s*\*\*Goal:\*\*\s*(.*?)\s*$)");
// "- **Label:** value"; indentation decides nesting.
const std::regex kBoldItemRe(R"(^(\s*)-\s+\*\*(.+?):?\*\*:?\s*(.*?)\s*$)");
const std::regex kDifficultyRe(R"(^\s*(\d+)\s*(?:/\s*5)?\s*$)");

bool is_na(const std::string& value) {
    std::string v = util::to_lower(util::trim(value));
    return v == "n/a" || v == "n/a." || v == "na" || v == "none";
}

struct TaskAccumulator {
    TaskSpec task;
    bool has_description = false;
    bool has_dependencies = false;
    bool has_difficulty = false;
    bool na_marked = false;
    std::vector<std::string> description_lines;

    enum class ListContext { none, unit_tests, code_tests, visual_tests };
    ListContext context = ListContext::none;
    // Description continuation is only active directly after the label.
    bool in_description = false;
};

void finish_task(TaskAccumulator& acc, PlanModule& module) {
    const std::string where = "task " + acc.task.id.str();
    if (!acc.has_description)
        throw ParseError(where + ": missing required field Description");
    if (!acc.has_dependencies)
        throw ParseError(where + ": missing required field Dependencies");
    if (!acc.has_difficulty)
        throw ParseError(where + ": missing required field Difficulty");
    std::string desc;
    for (size_t i = 0; i < acc.description_lines.size(); ++i) {
        if (i) desc += '\n';
        desc += acc.description_lines[i];
    }
    acc.task.description = util::trim(desc);
    acc.task.tests_na = acc.na_marked && !acc.task.has_tests();
    module.tasks.push_back(std::move(acc.task));
}

std::vector<TaskId> parse_dependency_list(const std::string& value,
                                          const std::string& where) {
    std::vector<TaskId> deps;
    std::string v = util::trim(value);
    if (v.empty())
        throw ParseError(where + ": field Dependencies is empty (use None)");
    if (is_na(v)) return deps;
    size_t pos = 0;
    while (pos <= v.size()) {
        size_t comma = v.find(',', pos);
        std::string item = v.substr(
            pos, comma == std::string::npos ? std::string::npos : comma - pos);
        if (!util::trim(item).empty()) {
            auto id = TaskId::try_parse(item);
            if (!id)
                throw ParseError(where + ": malformed dependency id \"" +
                                 util::trim(item) + "\"");
            deps.push_back(*id);
        }
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return deps;
}

int parse_difficulty(const std::string& value, const std::string& where) {
    std::smatch m;
    std::string v = util::trim(value);
    if (!std::regex_match(v, m, kDifficultyRe))
        throw ParseError(where + ": malformed Difficulty \"" + v + "\"");
    int rating = std::stoi(m[1]);
    if (rating < 1 || rating > 5)
        throw ParseError(where + ": Difficulty " + std::to_string(rating) +
                         "/5 outside 1..5");
    return rating;
}

}  // namespace

TaskPlan parse_plan(const std::string& text, ParseWarnings* warnings) {
    TaskPlan plan;
    enum class Section { preamble, description, instruction, docs, trailing };
    Section section = Section::preamble;

    std::vector<std::string> desc_lines, instr_lines;
    Phase* phase = nullptr;
    PlanModule* module = nullptr;
    std::optional<TaskAccumulator> acc;

    auto close_task = [&]() {
        if (acc) {
            finish_task(*acc, *module);
            acc.reset();
        }
    };

    const auto lines = util::split_lines(util::normalize_newlines(text));
    for (const auto& raw : lines) {
        const std::string line = util::trim_right(raw);

        // Level-1 headings switch top-level sections.
        if (line.rfind("# ", 0) == 0) {
            std::string title = util::trim(line.substr(2));
            close_task();
            if (title == "Project Description") {
                section = Section::description;
            } else if (title == "Project Instruction") {
                section = Section::instruction;
            } else if (title == "Detailed Documentation") {
                section = Section::docs;
            } else {
                if (warnings)
                    warnings->warnings.push_back("ignored trailing section: " + title);
                section = Section::trailing;
            }
            continue;
        }
        if (section == Section::trailing) continue;
        if (section == Section::description) {
            desc_lines.push_back(line);
            continue;
        }
        if (section == Section::instruction) {
            instr_lines.push_back(line);
            continue;
        }
        if (section != Section::docs) continue;

        std::smatch m;
        if (std::regex_match(line, m, kPhaseRe)) {
            close_task();
            plan.phases.push_back(Phase{std::stoi(m[1]), m[2], "", {}});
            phase = &plan.phases.back();
            module = nullptr;
            continue;
        }
        if (std::regex_match(line, m, kModuleRe)) {
            close_task();
            if (!phase) throw ParseError("module heading before any phase: " + line);
            int declared_phase = std::stoi(m[1]);
            if (declared_phase != phase->number)
                throw ParseError("module " + std::string(m[1]) + "." +
                                 std::string(m[2]) + " listed under phase " +
                                 std::to_string(phase->number));
            phase->modules.push_back(PlanModule{std::stoi(m[2]), m[3], {}});
            module = &phase->modules.back();
            continue;
        }
        if (std::regex_match(line, m, kTaskRe)) {
            close_task();
            if (!module) throw ParseError("task heading before any module: " + line);
            TaskId id = TaskId::parse(m[1]);
            if (id.phase != phase->number || id.module != module->number)
                throw ParseError("task " + id.str() + " listed under module " +
                                 std::to_string(phase->number) + "." +
                                 std::to_string(module->number));
            acc.emplace();
            acc->task.id = id;
            acc->task.title = m[2];
            continue;
        }
        if (std::regex_match(line, m, kGoalRe)) {
            if (phase && !acc) {
                phase->goal = m[1];
                continue;
            }
        }

        if (!acc) continue;  // prose between headings

        const std::string where = "task " + acc->task.id.str();
        if (std::regex_match(line, m, kBoldItemRe)) {
            const std::string label = m[2];
            const std::string value = m[3];
            acc->in_description = false;
            if (label == "Description") {
                acc->has_description = true;
                acc->description_lines.push_back(value);
                acc->in_description = true;
                acc->context = TaskAccumulator::ListContext::none;
            } else if (label == "Dependencies") {
                acc->has_dependencies = true;
                acc->task.dependencies = parse_dependency_list(value, where);
                acc->context = TaskAccumulator::ListContext::none;
            } else if (label == "Difficulty") {
                acc->has_difficulty = true;
                acc->task.difficulty = parse_difficulty(value, where);
                acc->context = TaskAccumulator::ListContext::none;
            } else if (label == "Unit Tests") {
                acc->context = TaskAccumulator::ListContext::unit_tests;
                if (is_na(value)) acc->na_marked = true;
            } else if (label == "Code Tests") {
                if (acc->context == TaskAccumulator::ListContext::none)
                    throw ParseError(where + ": Code Tests outside Unit Tests");
                acc->context = TaskAccumulator::ListContext::code_tests;
                if (is_na(value)) acc->na_marked = true;
            } else if (label == "Visual Tests") {
                if (acc->context == TaskAccumulator::ListContext::none)
                    throw ParseError(where + ": Visual Tests outside Unit Tests");
                acc->context = TaskAccumulator::ListContext::visual_tests;
                if (is_na(value)) acc->na_marked = true;
            } else {
                // A named test entry inside a Code/Visual Tests list.
                if (acc->context == TaskAccumulator::ListContext::code_tests)
                    acc->task.code_tests.push_back(NamedTest{label, value});
                else if (acc->context == TaskAccumulator::ListContext::visual_tests)
                    acc->task.visual_tests.push_back(NamedTest{label, value});
                else if (warnings)
                    warnings->warnings.push_back(where + ": ignored field " + label);
            }
            continue;
        }

        // Plain text: continuation of a multi-line description.
        if (acc->in_description) {
            if (line.empty()) {
                acc->in_description = false;
            } else {
                acc->description_lines.push_back(line);
            }
        }
    }
    close_task();

    plan.project_description = util::trim(util::join_lines(desc_lines));
    plan.project_instruction = util::trim(util::join_lines(instr_lines));
    return plan;
}

// ---------------------------------------------------------------------------
// Renderer (inverse writer)
// ---------------------------------------------------------------------------

std::string render_task_block(const TaskSpec& task) {
    std::string out;
    out += "#### Task " + task.id.str() + ": " + task.title + "\n\n";
    out += "- **Description:** " + task.description + "\n";
    out += "- **Dependencies:** ";
    if (task.dependencies.empty()) {
        out += "None";
    } else {
        for (size_t i = 0; i < task.dependencies.size(); ++i) {
            if (i) out += ", ";
            out += task.dependencies[i].str();
        }
    }
    out += "\n";
    out += "- **Difficulty:** " + std::to_string(task.difficulty) + "/5\n";
    if (task.tests_na) {
        out += "- **Unit Tests:** N/A\n";
    } else {
        out += "- **Unit Tests:**\n";
        if (!task.code_tests.empty()) {
            out += "  - **Code Tests:**\n";
            for (const auto& t : task.code_tests)
                out += "    - **" + t.name + ":** " + t.description + "\n";
        }
        if (!task.visual_tests.empty()) {
            out += "  - **Visual Tests:**\n";
            for (const auto& t : task.visual_tests)
                out += "    - **" + t.name + ":** " + t.description + "\n";
        }
    }
    return out;
}

std::string render_plan(const TaskPlan& plan) {
    std::string out;
    out += "# Project Description\n\n" + plan.project_description + "\n\n";
    out += "# Project Instruction\n\n" + plan.project_instruction + "\n\n";
    out += "# Detailed Documentation\n";
    for (const auto& ph : plan.phases) {
        out += "\n## Phase " + std::to_string(ph.number) + ": " + ph.name + "\n\n";
        out += "**Goal:** " + ph.goal + "\n";
        for (const auto& mod : ph.modules) {
            out += "\n### Module " + std::to_string(ph.number) + "." +
                   std::to_string(mod.number) + ": " + mod.name + "\n";
            for (const auto& t : mod.tasks) {
                out += "\n" + render_task_block(t);
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Validation + ordering
// ---------------------------------------------------------------------------

ValidationReport validate_plan(const TaskPlan& plan) {
    ValidationReport report;
    if (plan.phases.size() > 5)
        report.violations.push_back("phase-count: " +
                                    std::to_string(plan.phases.size()) +
                                    " phases exceeds the maximum of 5");

    // Dense, position-consistent numbering.
    for (size_t pi = 0; pi < plan.phases.size(); ++pi) {
        const auto& ph = plan.phases[pi];
        if (ph.number != static_cast<int>(pi) + 1)
            report.violations.push_back("numbering: phase " +
                                        std::to_string(ph.number) +
                                        " is at position " + std::to_string(pi + 1));
        for (size_t mi = 0; mi < ph.modules.size(); ++mi) {
            const auto& mod = ph.modules[mi];
            if (mod.number != static_cast<int>(mi) + 1)
                report.violations.push_back(
                    "numbering: module " + std::to_string(ph.number) + "." +
                    std::to_string(mod.number) + " is at position " +
                    std::to_string(mi + 1));
            for (size_t ti = 0; ti < mod.tasks.size(); ++ti) {
                const auto& t = mod.tasks[ti];
                TaskId expected{ph.number, mod.number, static_cast<int>(ti) + 1};
                if (t.id != expected)
                    report.violations.push_back("numbering: task " + t.id.str() +
                                                " at position of " + expected.str());
            }
        }
    }

    auto tasks = plan.all_tasks();
    std::map<TaskId, size_t> position;
    for (size_t i = 0; i < tasks.size(); ++i) position[tasks[i]->id] = i;

    for (size_t i = 0; i < tasks.size(); ++i) {
        const auto& t = *tasks[i];
        for (const auto& dep : t.dependencies) {
            auto it = position.find(dep);
            if (it == position.end()) {
                report.violations.push_back("dependency: task " + t.id.str() +
                                            " depends on missing task " + dep.str());
            } else if (it->second >= i) {
                report.violations.push_back("dependency: task " + t.id.str() +
                                            " depends on later task " + dep.str());
            }
        }
        if (!t.has_tests() && !t.tests_na)
            report.violations.push_back("tests: task " + t.id.str() +
                                        " has no tests and no explicit N/A");
    }

    // Cycle detection over the dependency graph (only edges between known ids).
    enum class Mark { unvisited, active, done };
    std::map<TaskId, Mark> mark;
    std::map<TaskId, std::vector<TaskId>> deps;
    for (const auto* t : tasks) {
        mark[t->id] = Mark::unvisited;
        for (const auto& d : t->dependencies)
            if (position.count(d)) deps[t->id].push_back(d);
    }
    std::vector<TaskId> stack;
    std::function<bool(const TaskId&)> visit = [&](const TaskId& id) -> bool {
        if (mark[id] == Mark::done) return false;
        if (mark[id] == Mark::active) {
            std::string chain;
            auto it = std::find(stack.begin(), stack.end(), id);
            for (; it != stack.end(); ++it) chain += it->str() + " -> ";
            report.violations.push_back("cycle: " + chain + id.str());
            return true;
        }
        mark[id] = Mark::active;
        stack.push_back(id);
        for (const auto& d : deps[id])
            if (visit(d)) break;  // one report per cycle is enough
        stack.pop_back();
        mark[id] = Mark::done;
        return false;
    };
    for (const auto* t : tasks) visit(t->id);

    return report;
}

std::vector<TaskId> topological_order(const TaskPlan& plan) {
    auto tasks = plan.all_tasks();
    std::map<TaskId, int> indegree;
    std::map<TaskId, std::vector<TaskId>> dependents;
    for (const auto* t : tasks) indegree[t->id] = 0;
    for (const auto* t : tasks) {
        for (const auto& dep : t->dependencies) {
            if (!indegree.count(dep))
                throw StateError("topological_order: unknown dependency " +
                                 dep.str() + " of " + t->id.str());
            dependents[dep].push_back(t->id);
            ++indegree[t->id];
        }
    }
    std::priority_queue<TaskId, std::vector<TaskId>, std::greater<TaskId>> ready;
    for (const auto& [id, deg] : indegree)
        if (deg == 0) ready.push(id);

    std::vector<TaskId> order;
    while (!ready.empty()) {
        TaskId id = ready.top();
        ready.pop();
        order.push_back(id);
        for (const auto& next : dependents[id])
            if (--indegree[next] == 0) ready.push(next);
    }
    if (order.size() != tasks.size())
        throw StateError("topological_order: dependency cycle");
    return order;
}

// ---------------------------------------------------------------------------
// PlanEngine
// ---------------------------------------------------------------------------

PlanEngine::PlanEngine(LlmGateway& gateway, PlanPromptConfig config)
    : gateway_(gateway), config_(std::move(config)) {}

std::string PlanEngine::generate_plan(const ProjectProposal& proposal) {
    const auto dir = config_.templates_dir / "plan";
    const std::string system_text = util::read_text_file(dir / "system.txt");
    const std::string user_tmpl = util::read_text_file(dir / "user.txt");
    const std::map<std::string, std::string> vars{
        {"project_description", proposal.description},
        {"constraints", proposal.constraints}};

    CompletionRequest request;
    request.model_id = config_.model_id;
    request.max_output_tokens = config_.max_output_tokens;
    request.temperature = config_.temperature;
    request.messages = {{Role::system, system_text},
                        {Role::user, util::render_template(user_tmpl, vars)}};

    std::string document = gateway_.complete(request).content;

    int attempts = 0;
    while (document.find("</tasks>") == std::string::npos &&
           attempts < config_.continuation_budget) {
        ++attempts;
        const std::string cont_tmpl = util::read_text_file(dir / "continue.txt");
        std::map<std::string, std::string> cont_vars = vars;
        cont_vars["response"] = document;
        CompletionRequest cont = request;
        cont.messages = {{Role::system, system_text},
                         {Role::user, util::render_template(cont_tmpl, cont_vars)}};
        document += gateway_.complete(cont).content;
    }

    size_t open = document.find("<tasks>");
    size_t close = document.find("</tasks>");
    if (open == std::string::npos || close == std::string::npos || close < open)
        throw ParseError("plan generation unterminated after " +
                         std::to_string(attempts) +
                         " continuation attempts (no closed <tasks> block)");
    return util::trim(document.substr(open + 7, close - open - 7));
}

}  // namespace envforge
