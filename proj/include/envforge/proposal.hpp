#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "envforge/gateway.hpp"

namespace envforge {

struct ProjectProposal {
    std::string description;   // <proposed_project>
    std::string repo_name;     // <repo_name>, slug form
    std::string language;      // <programming_language>
    std::string constraints;   // <constraints>

    bool operator==(const ProjectProposal&) const = default;
};

struct ProposalBatch {
    std::vector<ProjectProposal> proposals;
    std::string source_transcript;  // transcript key of the final request
};

struct ValidationReport {
    std::vector<std::string> violations;
    bool ok() const { return violations.empty(); }
};

struct ParseWarnings {
    std::vector<std::string> warnings;
};

// Extracts every proposal block in document order. Blocks are introduced by
// "Project N:" lines; when no such line exists each <proposed_project> tag
// starts a block. Surrounding prose is tolerated. Throws ParseError when a
// block misses one of the four tags (naming it) or when no block is found.
std::vector<ProjectProposal> parse_proposals(const std::string& text,
                                             ParseWarnings* warnings = nullptr);

// Inverse writer: canonical "Project N:" blocks with the four tags.
// parse(serialize(x)) == x field-for-field.
std::string serialize_proposals(const std::vector<ProjectProposal>& proposals);

bool is_repo_slug(const std::string& name);

// Slug form, non-empty fields, and a banned-phrase screen over the
// description (case-insensitive, word-boundary aware).
ValidationReport validate_proposal(const ProjectProposal& p,
                                   const std::vector<std::string>& banned_phrases);

std::vector<std::string> default_banned_phrases();

struct ProposalPromptConfig {
    std::filesystem::path templates_dir;  // <dir>/proposal/{system,user,continue}.txt
    std::vector<std::string> model_ids;   // ensemble, cycled round-robin per batch
    int batch_index = 0;
    int continuation_budget = 3;
    int max_output_tokens = 8192;
    double temperature = 0.0;
};

class ProposalEngine {
public:
    ProposalEngine(LlmGateway& gateway, ProposalPromptConfig config);

    // Renders the proposal templates with the requested count, runs the
    // continuation protocol while the backend reports truncation, then
    // parses and validates. count must be >= 1.
    ProposalBatch propose_projects(int count);

private:
    LlmGateway& gateway_;
    ProposalPromptConfig config_;
};

}  // namespace envforge
