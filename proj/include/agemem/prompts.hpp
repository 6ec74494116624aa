#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace agemem::prompts {

// Agent system prompt with the [TOOLS] placeholder still in place.
const std::string& system_prompt_template();

// The six tool schemas in canonical order: the STM tools (Summary_context,
// Filter_context, Retrieve_memory) followed by the LTM tools (Add_memory,
// Update_memory, Delete_memory). Field order is part of the contract.
const nlohmann::ordered_json& tool_schemas();

// tool_schemas() serialized with two-space indentation.
std::string canonical_tool_schemas_json();

// System prompt with [TOOLS] substituted. Deterministic.
std::string render_system_prompt();

const std::vector<std::string>& tool_names();
bool is_tool_name(const std::string& name);

const std::string& summarizer_prompt_template();
std::string render_summarizer_prompt(const std::string& conversation_text);

std::string render_answer_judge_prompt(const std::string& question, const std::string& ground_truth,
                                       const std::string& agent_answer);

// Memory Quality judge prompt. Each fact list expands to one "- <fact>" line
// per item ("- (none)" when empty).
std::string render_memory_quality_prompt(const std::string& question, const std::string& answer,
                                         const std::vector<std::string>& expected_facts,
                                         const std::vector<std::string>& predicted_facts);

}  // namespace agemem::prompts
