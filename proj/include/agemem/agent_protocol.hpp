#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "agemem/constants.hpp"
#include "agemem/ltm_store.hpp"
#include "agemem/stm_context.hpp"

namespace agemem {

struct ToolCall {
    std::string name;
    nlohmann::ordered_json arguments;  // always an object; schema defaults applied
};

enum class TurnKind { kToolCalls, kAnswer };

struct AgentTurn {
    std::string think;  // content of the final think block
    TurnKind kind = TurnKind::kToolCalls;
    std::vector<ToolCall> tool_calls;  // kToolCalls (may be empty)
    std::string answer;                // kAnswer
    bool wrapped_lone_object = false;  // a bare object was tolerated and wrapped
};

enum class ParseErrorKind {
    kMutualExclusivity,  // tool_call and answer after the same think
    kNoAction,           // neither present (or no think block at all)
    kBadToolJson,        // malformed JSON inside tool_call
    kToolValidation,     // unknown tool or bad/missing argument
};

struct ParseError {
    ParseErrorKind kind;
    std::string message;
    std::string field;  // set for kToolValidation
};

struct ParseResult {
    std::optional<AgentTurn> turn;
    std::optional<ParseError> error;
    bool ok() const { return turn.has_value(); }
};

// Parses a raw policy output into a turn: the last <think> block and the
// single action that follows it. Tool-call JSON must be an array of
// {"name", "arguments"} objects; a lone object is tolerated and wrapped.
ParseResult parse_turn(const std::string& raw);

// Validates one call against the published schemas, filling declared defaults
// (Retrieve_memory top_k = 3). Returns an error naming the offending field.
std::optional<ParseError> validate_tool_call(ToolCall& call);

// "all" -> nullopt, decimal string (or integer) >= 1 -> that value.
Expected<std::optional<int>> parse_span(const nlohmann::ordered_json& span);

struct ToolEvent {
    std::string tool;
    bool ok = false;
    int usage_at_call = 0;  // context usage when the call executed
    std::string error;      // set when !ok
};

// Everything the reward computation needs from the tool trace.
struct DispatchRecord {
    std::map<std::string, int> calls;   // dispatched calls per tool name
    std::map<std::string, int> errors;  // failed calls per tool name
    std::vector<ToolEvent> events;
    std::vector<std::string> added_contents;   // successful Add_memory payloads
    std::vector<MemoryEntry> agent_retrieved;  // Retrieve_memory results, deduped by id
    bool maintenance_performed = false;        // successful Update_memory or Delete_memory
};

// Executes parsed calls in order against the store/context, appending one
// tool-role result message per call (retrieved entries are inserted as
// additional "retrieved" messages). Individual failures do not abort the batch.
class ToolDispatcher {
public:
    ToolDispatcher(MemoryStore& store, ContextState& ctx, Summarizer summarizer,
                   double filter_threshold = kDefaultFilterThreshold);

    std::vector<Message> dispatch(const std::vector<ToolCall>& calls);

    DispatchRecord& record() { return record_; }
    const DispatchRecord& record() const { return record_; }

private:
    Message run_call(const ToolCall& call);

    MemoryStore& store_;
    ContextState& ctx_;
    Summarizer summarizer_;
    double filter_threshold_;
    DispatchRecord record_;
};

}  // namespace agemem
