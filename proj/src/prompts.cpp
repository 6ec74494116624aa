#include "agemem/prompts.hpp"

#include <algorithm>

namespace agemem::prompts {

namespace {

// Several template lines end in two spaces (markdown hard breaks); they are
// significant and must survive editors and reformatters.
const char kSystemPromptTemplate[] =
    "You are an intelligent assistant that solves complex problems by managing context and memory with tools when needed.\n"
    "\n"
    "## Available Tools:[TOOLS]\n"
    "\n"
    "## Problem-Solving Workflow\n"
    "You must follow a structured reasoning and action process for every task:\n"
    "1. **Think & Plan**  \n"
    "   Always start with a <think>...</think> block.  \n"
    "   Inside it, explain your reasoning, plan your next step, and decide whether you need to call a tool or provide a final answer.\n"
    "2. **Tool Calls**  \n"
    "   If you decide to use one or more tools, follow your <think> block with a <tool_call>...</tool_call> block.  \n"
    "   - You may call **one or multiple tools** in a single step.  \n"
    "   - List multiple tool calls as elements of a JSON array.  \n"
    "   - Each tool call must include \"name\" and \"arguments\".  \n"
    "   - Example:\n"
    "     <tool_call>[{\"name\": \"Retrieve_memory\", \"arguments\": {\"query\": \"math problem solving strategies\", \"top_k\": 3}}, {\"name\": \"Add_memory\", \"arguments\": {\"content\": \"Strategy summary for reuse\", \"memory_type\": \"problem_solving\"}}]</tool_call>\n"
    "3. **Final Answer**  \n"
    "   When you no longer need tools and are ready to present your final output, follow your last <think> block with an <answer>...</answer> block containing the full response.\n"
    "4. **Mutual Exclusivity Rule**  \n"
    "   After **each <think> block**, you must choose exactly **one** of the following:\n"
    "   - a \"<tool_call>\" block (if you need tools), **or**\n"
    "   - an \"<answer>\" block (if you are ready to respond).  \n"
    "   You must **never** include both \"<tool_call>\" and \"<answer>\" immediately after the same \"<think>\" block.\n"
    "5. **Iterative Solving**  \n"
    "   You may repeat this sequence as needed:  \n"
    "   \"<think>\" -> \"<tool_call>\" -> \"<think>\" -> \"<tool_call>\" ... -> \"<think>\" -> \"<answer>\"  \n"
    "   until the problem is completely solved.\n"
    "\n"
    "## Response Format (Strict)\n"
    "Your full output must follow these rules:\n"
    "- Every reasoning step must appear inside <think> tags.  \n"
    "- Every tool usage must appear inside one <tool_call> tag (even if it includes multiple tool invocations).  \n"
    "- The final solution must be wrapped in <answer> tags.  \n"
    "- No text should appear outside these tags.\n"
    "\n"
    "## Guidelines\n"
    "- Always start with reasoning (<think>).\n"
    "- After each reasoning step, decide: call tool(s) or answer.\n"
    "- You can call multiple tools within one <tool_call> JSON array.\n"
    "- Be concise, logical, and explicit in reasoning.\n"
    "- Manage memory actively: retrieve, add, update, summarize, filter, or delete as needed.\n"
    "- Use <answer> only once when the final solution is ready.\n"
    "\n"
    "Let's start!";

const char kSummarizerPromptTemplate[] =
    "You are a conversation summarization assistant. \n"
    "Your goal is to compress the given conversation span into a concise summary that preserves all important information, intentions, decisions, and unresolved questions. \n"
    "The summary will later be used to replace the original conversation in the context, so make sure nothing essential is lost.\n"
    "\n"
    "Instructions:\n"
    "1. Read the provided conversation rounds carefully.\n"
    "2. Identify the main topics, actions, results, and open issues.\n"
    "3. Write a clear, factual summary in natural language.\n"
    "4. Do NOT include greetings, filler text, or redundant phrasing.\n"
    "\n"
    "Input:\n"
    "- Conversation content: [CONVERSATION_TEXT]\n"
    "\n"
    "Output:\n"
    "- A concise yet comprehensive summary of the above conversation span.\n"
    "\n"
    "Let's start the conversation summarization.";

const char kAnswerJudgePromptTemplate[] =
    "You are an expert judge evaluating the correctness of answers to questions. \n"
    "Given the following information:\n"
    "- Question: [QUESTION]\n"
    "- Ground-truth Answer: [GROUND_TRUTH]\n"
    "- Agent's Answer: [AGENT_ANSWER]\n"
    "\n"
    "Please evaluate the generated answer on a scale of 0.0 to 1.0:\n"
    "- 1.0: Perfect match or equivalent correct answer\n"
    "- 0.8-0.9: Mostly correct with minor differences\n"
    "- 0.6-0.7: Partially correct or close approximation\n"
    "- 0.4-0.5: Some correct elements but significant errors\n"
    "- 0.2-0.3: Mostly incorrect with few correct elements\n"
    "- 0.0-0.1: Completely incorrect or irrelevant\n"
    "\n"
    "Respond with only a number between 0.0 and 1.0 (e.g., \"0.85\").";

const char kMemoryQualityPromptTemplate[] =
    "You are an expert judge evaluating the quality of supporting facts for question answering.\n"
    "\n"
    "Question: [QUESTION]\n"
    "Answer: [ANSWER]\n"
    "\n"
    "Ground Truth Supporting Facts (the facts that should be identified):\n"
    "Expected Supporting Facts:\n"
    "- [FACT_1]\n"
    "- [FACT_2]\n"
    "...\n"
    "\n"
    "Model Predicted Supporting Facts (the facts identified by the model and stored in the long-term memory):\n"
    "Predicted Supporting Facts:\n"
    "- [PREDICTED_FACT_1]\n"
    "- [PREDICTED_FACT_2]\n"
    "...\n"
    "\n"
    "Please evaluate how well the predicted supporting facts match the ground truth expected facts:\n"
    "1. Are all expected facts covered by the predictions?\n"
    "2. Are the predicted facts actually relevant to answering the question?\n"
    "3. Are there any irrelevant facts in the predictions?\n"
    "\n"
    "Score on a scale of 0.0 to 1.0:\n"
    "- 1.0: Perfect match - all expected facts are correctly identified, no irrelevant facts\n"
    "- 0.8-0.9: Mostly correct with minor omissions or one irrelevant fact\n"
    "- 0.6-0.7: Partially correct - some relevant facts identified but missing important ones\n"
    "- 0.4-0.5: Some correct elements but significant errors or omissions\n"
    "- 0.2-0.3: Mostly incorrect with few correct elements\n"
    "- 0.0-0.1: Completely incorrect or irrelevant\n"
    "\n"
    "Respond with only a number between 0.0 and 1.0 (e.g., \"0.85\").";

std::string replace_all(std::string text, const std::string& needle, const std::string& value) {
    std::size_t pos = 0;
    while ((pos = text.find(needle, pos)) != std::string::npos) {
        text.replace(pos, needle.size(), value);
        pos += value.size();
    }
    return text;
}

std::string fact_lines(const std::vector<std::string>& facts) {
    if (facts.empty()) {
        return "- (none)";
    }
    std::string out;
    for (std::size_t i = 0; i < facts.size(); ++i) {
        if (i > 0) {
            out += '\n';
        }
        out += "- " + facts[i];
    }
    return out;
}

nlohmann::ordered_json make_tool_schemas() {
    using json = nlohmann::ordered_json;
    json tools = json::array();

    tools.push_back({
        {"name", "Summary_context"},
        {"description", "Summarizes conversation rounds to reduce tokens while preserving key information."},
        {"parameters",
         {{"properties",
           {{"span",
             {{"description",
               "The range of conversation rounds to summarize. Can be 'all' for entire context, or a "
               "number (e.g., '5') for the last N rounds. A system, user, assistant and 'tool' message "
               "are considered as one round."},
              {"type", "string"}}}}},
          {"required", json::array({"span"})}}},
    });

    tools.push_back({
        {"name", "Filter_context"},
        {"description",
         "Filters out irrelevant or outdated content from the conversation context to improve "
         "task-solving efficiency. "},
        {"parameters",
         {{"properties",
           {{"criteria",
             {{"description",
               "The criteria for content removal. Can be keywords, phrases, or descriptions of content "
               "types to remove (e.g., 'the birthday of John', 'the age of Mary')."},
              {"type", "string"}}}}},
          {"required", json::array({"criteria"})}}},
    });

    tools.push_back({
        {"name", "Retrieve_memory"},
        {"description", "Retrieves relevant memories and adds them to current context."},
        {"parameters",
         {{"properties",
           {{"query",
             {{"description",
               "The search query to find relevant memories. Should describe what kind of information or "
               "context is needed."},
              {"type", "string"}}},
            {"top_k",
             {{"description", "The maximum number of memories to retrieve. Defaults to 3."},
              {"type", "integer"}}},
            {"metadata_filter",
             {{"description",
               "Optional metadata filters to narrow down memory search (e.g., {'type': 'user_info', "
               "'domain': 'math'})."},
              {"type", "object"}}}}},
          {"required", json::array({"query"})}}},
    });

    tools.push_back({
        {"name", "Add_memory"},
        {"description", "Adds new information to external memory store for future reference."},
        {"parameters",
         {{"properties",
           {{"content", {{"description", "The content to store in memory."}, {"type", "string"}}},
            {"metadata",
             {{"description", "Optional metadata tags to categorize and filter the memory."},
              {"type", "object"}}},
            {"memory_type", {{"description", "The type of memory being stored."}, {"type", "string"}}}}},
          {"required", json::array({"content"})}}},
    });

    tools.push_back({
        {"name", "Update_memory"},
        {"description", "Updates existing memory. Requires memory_id from prior retrieval."},
        {"parameters",
         {{"properties",
           {{"memory_id",
             {{"description",
               "The unique identifier of the memory to update. Must be obtained from a previous memory "
               "retrieval operation."},
              {"type", "string"}}},
            {"content",
             {{"description", "The new content to replace the existing memory content."},
              {"type", "string"}}},
            {"metadata", {{"description", "Updated metadata for the memory."}, {"type", "object"}}}}},
          {"required", json::array({"memory_id", "content"})}}},
    });

    tools.push_back({
        {"name", "Delete_memory"},
        {"description", "Removes memory from store. Requires confirmation."},
        {"parameters",
         {{"properties",
           {{"memory_id",
             {{"description",
               "The unique identifier of the memory to delete. Must be obtained from a previous memory "
               "retrieval operation."},
              {"type", "string"}}},
            {"confirmation",
             {{"description", "Confirmation that this memory should be permanently deleted."},
              {"type", "boolean"}}}}},
          {"required", json::array({"memory_id", "confirmation"})}}},
    });

    return tools;
}

}  // namespace

const std::string& system_prompt_template() {
    static const std::string tpl = kSystemPromptTemplate;
    return tpl;
}

const nlohmann::ordered_json& tool_schemas() {
    static const nlohmann::ordered_json schemas = make_tool_schemas();
    return schemas;
}

std::string canonical_tool_schemas_json() {
    return tool_schemas().dump(2);
}

std::string render_system_prompt() {
    return replace_all(system_prompt_template(), "[TOOLS]", canonical_tool_schemas_json());
}

const std::vector<std::string>& tool_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> out;
        for (const auto& schema : tool_schemas()) {
            out.push_back(schema.at("name").get<std::string>());
        }
        return out;
    }();
    return names;
}

bool is_tool_name(const std::string& name) {
    const auto& names = tool_names();
    return std::find(names.begin(), names.end(), name) != names.end();
}

const std::string& summarizer_prompt_template() {
    static const std::string tpl = kSummarizerPromptTemplate;
    return tpl;
}

std::string render_summarizer_prompt(const std::string& conversation_text) {
    return replace_all(summarizer_prompt_template(), "[CONVERSATION_TEXT]", conversation_text);
}

std::string render_answer_judge_prompt(const std::string& question, const std::string& ground_truth,
                                       const std::string& agent_answer) {
    std::string out = kAnswerJudgePromptTemplate;
    out = replace_all(out, "[QUESTION]", question);
    out = replace_all(out, "[GROUND_TRUTH]", ground_truth);
    out = replace_all(out, "[AGENT_ANSWER]", agent_answer);
    return out;
}

std::string render_memory_quality_prompt(const std::string& question, const std::string& answer,
                                         const std::vector<std::string>& expected_facts,
                                         const std::vector<std::string>& predicted_facts) {
    std::string out = kMemoryQualityPromptTemplate;
    out = replace_all(out, "- [FACT_1]\n- [FACT_2]\n...", fact_lines(expected_facts));
    out = replace_all(out, "- [PREDICTED_FACT_1]\n- [PREDICTED_FACT_2]\n...", fact_lines(predicted_facts));
    out = replace_all(out, "[QUESTION]", question);
    out = replace_all(out, "[ANSWER]", answer);
    return out;
}

}  // namespace agemem::prompts
