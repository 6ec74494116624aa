#include "agemem/agent_protocol.hpp"

#include <algorithm>
#include <cctype>

#include "agemem/prompts.hpp"

namespace agemem {

namespace {

using ordered_json = nlohmann::ordered_json;

std::optional<std::string> extract_block(const std::string& text, const std::string& open,
                                         const std::string& close, std::size_t from,
                                         std::size_t* block_start = nullptr) {
    const std::size_t start = text.find(open, from);
    if (start == std::string::npos) {
        return std::nullopt;
    }
    if (block_start) {
        *block_start = start;
    }
    const std::size_t body = start + open.size();
    const std::size_t end = text.find(close, body);
    if (end == std::string::npos) {
        // Tolerate a missing closing tag (truncated generations); take the rest.
        return text.substr(body);
    }
    return text.substr(body, end - body);
}

struct FieldSpec {
    const char* name;
    const char* type;  // "string" | "integer" | "object" | "boolean"
};

struct SchemaSpec {
    const char* name;
    std::vector<FieldSpec> fields;
    std::vector<const char*> required;
};

const std::vector<SchemaSpec>& schema_specs() {
    static const std::vector<SchemaSpec> specs = {
        {"Summary_context", {{"span", "string"}}, {"span"}},
        {"Filter_context", {{"criteria", "string"}}, {"criteria"}},
        {"Retrieve_memory",
         {{"query", "string"}, {"top_k", "integer"}, {"metadata_filter", "object"}},
         {"query"}},
        {"Add_memory",
         {{"content", "string"}, {"metadata", "object"}, {"memory_type", "string"}},
         {"content"}},
        {"Update_memory",
         {{"memory_id", "string"}, {"content", "string"}, {"metadata", "object"}},
         {"memory_id", "content"}},
        {"Delete_memory", {{"memory_id", "string"}, {"confirmation", "boolean"}}, {"memory_id", "confirmation"}},
    };
    return specs;
}

bool type_matches(const ordered_json& value, const std::string& type) {
    if (type == "string") return value.is_string();
    if (type == "integer") {
        if (value.is_number_integer()) return true;
        // tolerate integral floats (3.0)
        return value.is_number_float() && value.get<double>() == static_cast<long long>(value.get<double>());
    }
    if (type == "object") return value.is_object();
    if (type == "boolean") return value.is_boolean();
    return false;
}

std::map<std::string, std::string> to_string_map(const ordered_json& object) {
    std::map<std::string, std::string> out;
    for (auto it = object.begin(); it != object.end(); ++it) {
        if (it.value().is_string()) {
            out[it.key()] = it.value().get<std::string>();
        } else {
            out[it.key()] = it.value().dump();
        }
    }
    return out;
}

}  // namespace

std::optional<ParseError> validate_tool_call(ToolCall& call) {
    const SchemaSpec* spec = nullptr;
    for (const SchemaSpec& s : schema_specs()) {
        if (call.name == s.name) {
            spec = &s;
            break;
        }
    }
    if (!spec) {
        return ParseError{ParseErrorKind::kToolValidation, "unknown tool name: " + call.name, "name"};
    }
    if (!call.arguments.is_object()) {
        return ParseError{ParseErrorKind::kToolValidation, "arguments must be an object", "arguments"};
    }
    for (const char* req : spec->required) {
        if (!call.arguments.contains(req)) {
            return ParseError{ParseErrorKind::kToolValidation,
                              std::string("missing required argument: ") + req, req};
        }
    }
    for (const FieldSpec& field : spec->fields) {
        if (!call.arguments.contains(field.name)) {
            continue;
        }
        // span drifts between string and number in practice; both are accepted
        if (call.name == "Summary_context" && std::string(field.name) == "span" &&
            call.arguments[field.name].is_number_integer()) {
            call.arguments[field.name] = std::to_string(call.arguments[field.name].get<long long>());
            continue;
        }
        if (!type_matches(call.arguments[field.name], field.type)) {
            return ParseError{ParseErrorKind::kToolValidation,
                              std::string("argument has wrong type: ") + field.name, field.name};
        }
    }
    if (call.name == "Retrieve_memory" && !call.arguments.contains("top_k")) {
        call.arguments["top_k"] = kDefaultRetrieveTopK;
    }
    return std::nullopt;
}

ParseResult parse_turn(const std::string& raw) {
    ParseResult result;

    const std::size_t last_think = raw.rfind("<think>");
    if (last_think == std::string::npos) {
        result.error = ParseError{ParseErrorKind::kNoAction, "no action", ""};
        return result;
    }
    auto think = extract_block(raw, "<think>", "</think>", last_think);

    // Only the region after the last think block is authoritative.
    std::size_t tail_at = raw.find("</think>", last_think);
    tail_at = (tail_at == std::string::npos) ? raw.size() : tail_at + std::string("</think>").size();

    std::size_t tool_at = std::string::npos;
    auto tool_body = extract_block(raw, "<tool_call>", "</tool_call>", tail_at, &tool_at);
    std::size_t answer_at = std::string::npos;
    auto answer_body = extract_block(raw, "<answer>", "</answer>", tail_at, &answer_at);

    if (tool_body && answer_body) {
        result.error = ParseError{ParseErrorKind::kMutualExclusivity, "mutual exclusivity", ""};
        return result;
    }
    if (!tool_body && !answer_body) {
        result.error = ParseError{ParseErrorKind::kNoAction, "no action", ""};
        return result;
    }

    AgentTurn turn;
    turn.think = think.value_or("");

    if (answer_body) {
        turn.kind = TurnKind::kAnswer;
        turn.answer = *answer_body;
        result.turn = std::move(turn);
        return result;
    }

    ordered_json parsed = ordered_json::parse(*tool_body, nullptr, false);
    if (parsed.is_discarded()) {
        result.error = ParseError{ParseErrorKind::kBadToolJson, "bad tool json", ""};
        return result;
    }
    if (parsed.is_object()) {
        ordered_json wrapped = ordered_json::array();
        wrapped.push_back(std::move(parsed));
        parsed = std::move(wrapped);
        turn.wrapped_lone_object = true;
    }
    if (!parsed.is_array()) {
        result.error = ParseError{ParseErrorKind::kBadToolJson, "bad tool json", ""};
        return result;
    }

    turn.kind = TurnKind::kToolCalls;
    for (auto& element : parsed) {
        if (!element.is_object() || !element.contains("name") || !element["name"].is_string()) {
            result.error = ParseError{ParseErrorKind::kBadToolJson, "bad tool json", ""};
            return result;
        }
        ToolCall call;
        call.name = element["name"].get<std::string>();
        call.arguments = element.contains("arguments") ? element["arguments"] : ordered_json::object();
        if (auto err = validate_tool_call(call)) {
            result.error = std::move(err);
            return result;
        }
        turn.tool_calls.push_back(std::move(call));
    }
    result.turn = std::move(turn);
    return result;
}

Expected<std::optional<int>> parse_span(const ordered_json& span) {
    std::string text;
    if (span.is_string()) {
        text = span.get<std::string>();
    } else if (span.is_number_integer()) {
        text = std::to_string(span.get<long long>());
    } else {
        return Expected<std::optional<int>>::failure("bad span");
    }
    if (text == "all") {
        return std::optional<int>(std::nullopt);
    }
    if (text.empty() || !std::all_of(text.begin(), text.end(),
                                     [](unsigned char c) { return std::isdigit(c); })) {
        return Expected<std::optional<int>>::failure("bad span: " + text);
    }
    const long value = std::strtol(text.c_str(), nullptr, 10);
    if (value < 1) {
        return Expected<std::optional<int>>::failure("bad span: " + text);
    }
    return std::optional<int>(static_cast<int>(value));
}

ToolDispatcher::ToolDispatcher(MemoryStore& store, ContextState& ctx, Summarizer summarizer,
                               double filter_threshold)
    : store_(store), ctx_(ctx), summarizer_(std::move(summarizer)), filter_threshold_(filter_threshold) {}

Message ToolDispatcher::run_call(const ToolCall& call) {
    ToolEvent event;
    event.tool = call.name;
    event.usage_at_call = ctx_.usage();

    std::string text;
    const auto& args = call.arguments;

    if (call.name == "Add_memory") {
        std::map<std::string, std::string> metadata;
        if (args.contains("metadata")) {
            metadata = to_string_map(args["metadata"]);
        }
        std::optional<std::string> memory_type;
        if (args.contains("memory_type")) {
            memory_type = args["memory_type"].get<std::string>();
        }
        auto added = store_.add(args["content"].get<std::string>(), std::move(metadata), std::move(memory_type));
        if (added) {
            event.ok = true;
            record_.added_contents.push_back(args["content"].get<std::string>());
            text = "Added memory " + added.value() + ".";
        } else {
            event.error = added.error();
        }
    } else if (call.name == "Update_memory") {
        std::optional<std::map<std::string, std::string>> metadata;
        if (args.contains("metadata")) {
            metadata = to_string_map(args["metadata"]);
        }
        auto updated = store_.update(args["memory_id"].get<std::string>(),
                                     args["content"].get<std::string>(), std::move(metadata));
        if (updated) {
            event.ok = true;
            record_.maintenance_performed = true;
            text = "Updated memory " + updated.value().id + ".";
        } else {
            event.error = updated.error();
        }
    } else if (call.name == "Delete_memory") {
        auto removed = store_.remove(args["memory_id"].get<std::string>(), args["confirmation"].get<bool>());
        if (removed) {
            event.ok = true;
            record_.maintenance_performed = true;
            text = "Deleted memory " + args["memory_id"].get<std::string>() + ".";
        } else {
            event.error = removed.error();
        }
    } else if (call.name == "Retrieve_memory") {
        const int top_k = static_cast<int>(args["top_k"].get<double>());
        if (top_k < 1) {
            event.error = "top_k must be >= 1";
        } else {
            std::map<std::string, std::string> metadata_filter;
            if (args.contains("metadata_filter")) {
                metadata_filter = to_string_map(args["metadata_filter"]);
            }
            auto results = store_.retrieve(args["query"].get<std::string>(), top_k, metadata_filter);
            std::vector<MemoryEntry> entries;
            entries.reserve(results.size());
            for (auto& r : results) {
                bool seen = false;
                for (const MemoryEntry& prior : record_.agent_retrieved) {
                    if (prior.id == r.entry.id) {
                        seen = true;
                        break;
                    }
                }
                if (!seen) {
                    record_.agent_retrieved.push_back(r.entry);
                }
                entries.push_back(std::move(r.entry));
            }
            const int inserted = ctx_.insert_retrieved(entries);
            event.ok = true;
            text = "Retrieved " + std::to_string(entries.size()) + " memories (" +
                   std::to_string(inserted) + " new in context).";
        }
    } else if (call.name == "Summary_context") {
        auto span = parse_span(args["span"]);
        if (!span) {
            event.error = span.error();
        } else {
            const int replaced = ctx_.summarize(span.value(), summarizer_);
            event.ok = true;
            text = "Summarized " + std::to_string(replaced) + " rounds.";
        }
    } else if (call.name == "Filter_context") {
        const std::string criteria = args["criteria"].get<std::string>();
        if (criteria.empty()) {
            event.error = "empty criteria";
        } else {
            const int removed = ctx_.filter(store_.encoder(), criteria, filter_threshold_);
            event.ok = true;
            text = "Filtered " + std::to_string(removed) + " messages.";
        }
    } else {
        event.error = "unknown tool name: " + call.name;
    }

    record_.calls[call.name] += 1;
    if (!event.ok) {
        record_.errors[call.name] += 1;
        text = "Error: " + event.error;
    }
    record_.events.push_back(event);
    return make_message(Role::kTool, text);
}

std::vector<Message> ToolDispatcher::dispatch(const std::vector<ToolCall>& calls) {
    std::vector<Message> results;
    results.reserve(calls.size());
    for (const ToolCall& call : calls) {
        Message result = run_call(call);
        results.push_back(result);
        ctx_.append(std::move(result));
    }
    return results;
}

}  // namespace agemem
