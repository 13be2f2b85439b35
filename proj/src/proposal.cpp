#include "envforge/proposal.hpp"

#include <regex>

#include "envforge/errors.hpp"
#include "envforge/util.hpp"

namespace envforge {

namespace {

// First <tag>...</tag> span after `from`. Case-sensitive, non-nested.
struct TagHit {
    size_t begin = std::string::npos;  // position of '<'
    size_t content_begin = 0;
    size_t content_end = 0;
};

TagHit find_tag(const std::string& text, const std::string& tag, size_t from) {
    const std::string open = "<" + tag + ">";
    const std::string close = "</" + tag + ">";
    TagHit hit;
    size_t o = text.find(open, from);
    if (o == std::string::npos) return hit;
    size_t c = text.find(close, o + open.size());
    if (c == std::string::npos) return hit;
    hit.begin = o;
    hit.content_begin = o + open.size();
    hit.content_end = c;
    return hit;
}

std::string extract_tag(const std::string& block, const std::string& tag,
                        const std::string& block_label, ParseWarnings* warnings) {
    TagHit hit = find_tag(block, tag, 0);
    if (hit.begin == std::string::npos)
        throw ParseError(block_label + ": missing tag <" + tag + ">");
    // First-match-wins when a model duplicates a tag.
    if (warnings) {
        TagHit second = find_tag(block, tag, hit.content_end);
        if (second.begin != std::string::npos)
            warnings->warnings.push_back(block_label + ": duplicate tag <" + tag +
                                         ">, keeping the first");
    }
    return util::trim(block.substr(hit.content_begin,
                                   hit.content_end - hit.content_begin));
}

}  // namespace

std::vector<ProjectProposal> parse_proposals(const std::string& text,
                                             ParseWarnings* warnings) {
    // Block starts: "Project N:" lines, else every <proposed_project> tag.
    std::vector<size_t> starts;
    static const std::regex header(R"(^\s*(?:\*\*)?Project\s+\d+\s*:)");
    size_t line_start = 0;
    const auto lines = util::split_lines(text);
    for (const auto& line : lines) {
        if (std::regex_search(line, header)) starts.push_back(line_start);
        line_start += line.size() + 1;
    }
    if (starts.empty()) {
        size_t pos = 0;
        while ((pos = text.find("<proposed_project>", pos)) != std::string::npos) {
            starts.push_back(pos);
            ++pos;
        }
    }
    if (starts.empty())
        throw ParseError("no proposal blocks found in model output");

    std::vector<ProjectProposal> out;
    for (size_t i = 0; i < starts.size(); ++i) {
        size_t end = (i + 1 < starts.size()) ? starts[i + 1] : text.size();
        std::string block = text.substr(starts[i], end - starts[i]);
        std::string label = "proposal block " + std::to_string(i + 1);
        ProjectProposal p;
        p.description = extract_tag(block, "proposed_project", label, warnings);
        p.repo_name = extract_tag(block, "repo_name", label, warnings);
        p.language = extract_tag(block, "programming_language", label, warnings);
        p.constraints = extract_tag(block, "constraints", label, warnings);
        out.push_back(std::move(p));
    }
    return out;
}

std::string serialize_proposals(const std::vector<ProjectProposal>& proposals) {
    std::string out;
    for (size_t i = 0; i < proposals.size(); ++i) {
        const auto& p = proposals[i];
        out += "Project " + std::to_string(i + 1) + ":\n";
        out += "<proposed_project>" + p.description + "</proposed_project>\n";
        out += "<repo_name>" + p.repo_name + "</repo_name>\n";
        out += "<programming_language>" + p.language + "</programming_language>\n";
        out += "<constraints>" + p.constraints + "</constraints>\n";
        if (i + 1 < proposals.size()) out += "\n";
    }
    return out;
}

bool is_repo_slug(const std::string& name) {
    static const std::regex slug(R"(^[a-z0-9]+(-[a-z0-9]+)*$)");
    return std::regex_match(name, slug);
}

namespace {

bool is_word_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0;
}

// Case-insensitive phrase match requiring non-word characters (or the text
// edge) on both sides, so "GUI" does not fire inside "guide".
bool contains_phrase(const std::string& text, const std::string& phrase) {
    if (phrase.empty()) return false;
    std::string t = util::to_lower(text);
    std::string p = util::to_lower(phrase);
    size_t pos = 0;
    while ((pos = t.find(p, pos)) != std::string::npos) {
        bool left_ok = pos == 0 || !is_word_char(t[pos - 1]);
        size_t after = pos + p.size();
        bool right_ok = after >= t.size() || !is_word_char(t[after]);
        if (left_ok && right_ok) return true;
        ++pos;
    }
    return false;
}

}  // namespace

std::vector<std::string> default_banned_phrases() {
    return {"GUI", "web interface", "graphical user interface", "web dashboard",
            "web app", "webpage"};
}

ValidationReport validate_proposal(const ProjectProposal& p,
                                   const std::vector<std::string>& banned_phrases) {
    ValidationReport report;
    if (p.description.empty()) report.violations.push_back("description is empty");
    if (p.language.empty()) report.violations.push_back("language is empty");
    if (p.constraints.empty()) report.violations.push_back("constraints are empty");
    if (p.repo_name.empty())
        report.violations.push_back("repo_name is empty");
    else if (!is_repo_slug(p.repo_name))
        report.violations.push_back("repo_name is not slug form: " + p.repo_name);
    for (const auto& phrase : banned_phrases) {
        if (contains_phrase(p.description, phrase))
            report.violations.push_back("banned phrase in description: " + phrase);
    }
    return report;
}

// ---------------------------------------------------------------------------
// ProposalEngine
// ---------------------------------------------------------------------------

ProposalEngine::ProposalEngine(LlmGateway& gateway, ProposalPromptConfig config)
    : gateway_(gateway), config_(std::move(config)) {
    if (config_.model_ids.empty())
        throw ConfigError("proposal engine needs at least one model id");
}

ProposalBatch ProposalEngine::propose_projects(int count) {
    if (count < 1) throw ConfigError("proposal count must be >= 1");

    const auto dir = config_.templates_dir / "proposal";
    const std::string system_tmpl = util::read_text_file(dir / "system.txt");
    const std::string user_tmpl = util::read_text_file(dir / "user.txt");
    const std::map<std::string, std::string> vars{
        {"num_projects", std::to_string(count)}};

    const std::string model =
        config_.model_ids[config_.batch_index % config_.model_ids.size()];

    CompletionRequest request;
    request.model_id = model;
    request.max_output_tokens = config_.max_output_tokens;
    request.temperature = config_.temperature;
    request.messages = {{Role::system, util::render_template(system_tmpl, vars)},
                        {Role::user, util::render_template(user_tmpl, vars)}};

    CompletionResponse response = gateway_.complete(request);
    std::string document = response.content;
    std::string final_key = transcript_key(request);

    int attempts = 0;
    while (response.finish_reason == FinishReason::length &&
           attempts < config_.continuation_budget) {
        ++attempts;
        const std::string cont_tmpl = util::read_text_file(dir / "continue.txt");
        CompletionRequest cont = request;
        cont.messages = {{Role::system, util::render_template(system_tmpl, vars)},
                         {Role::user, util::render_template(
                                          cont_tmpl, {{"num_projects",
                                                       std::to_string(count)},
                                                      {"response", document}})}};
        response = gateway_.complete(cont);
        document += response.content;
        final_key = transcript_key(cont);
    }
    if (response.finish_reason == FinishReason::length)
        throw ParseError("proposal generation still truncated after " +
                         std::to_string(attempts) + " continuation attempts");

    ProposalBatch batch;
    try {
        batch.proposals = parse_proposals(document);
    } catch (const ParseError& e) {
        throw ParseError(std::string("proposal generation failed: ") + e.what() +
                         "\n--- raw output ---\n" + document);
    }
    if (static_cast<int>(batch.proposals.size()) != count)
        throw ParseError("requested " + std::to_string(count) + " proposals, parsed " +
                         std::to_string(batch.proposals.size()) +
                         "\n--- raw output ---\n" + document);
    batch.source_transcript = final_key;
    return batch;
}

}  // namespace envforge
