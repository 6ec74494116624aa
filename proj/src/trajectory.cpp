#include "agemem/trajectory.hpp"

#include <fstream>
#include <sstream>

namespace agemem {

using ordered_json = nlohmann::ordered_json;

ordered_json TaskSpec::to_json() const {
    ordered_json j;
    j["query"] = query;
    j["context_info"] = context_info;
    j["expected_answer"] = expected_answer;
    j["key_tokens"] = key_tokens;
    j["distractors"] = distractors;
    j["n_max"] = n_max;
    return j;
}

Expected<TaskSpec> TaskSpec::from_json(const ordered_json& j) {
    if (!j.is_object()) {
        return Expected<TaskSpec>::failure("task must be a JSON object");
    }
    TaskSpec task;
    try {
        task.query = j.at("query").get<std::string>();
        task.context_info = j.at("context_info").get<std::vector<std::string>>();
        task.expected_answer = j.at("expected_answer").get<std::string>();
        task.key_tokens = j.at("key_tokens").get<std::vector<std::string>>();
        task.distractors = j.at("distractors").get<std::vector<std::string>>();
        task.n_max = j.value("n_max", kDefaultMaxRounds);
    } catch (const ordered_json::exception& e) {
        return Expected<TaskSpec>::failure(std::string("task json: ") + e.what());
    }
    if (task.context_info.empty()) {
        return Expected<TaskSpec>::failure("task json: context_info must be non-empty");
    }
    if (task.n_max < 1) {
        return Expected<TaskSpec>::failure("task json: n_max must be >= 1");
    }
    return task;
}

Expected<TaskSpec> TaskSpec::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        return Expected<TaskSpec>::failure("cannot open " + path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    ordered_json j = ordered_json::parse(buf.str(), nullptr, false);
    if (j.is_discarded()) {
        return Expected<TaskSpec>::failure("invalid JSON in " + path);
    }
    return from_json(j);
}

ordered_json RewardBreakdown::to_json() const {
    ordered_json j;
    j["r_task"] = r_task;
    j["r_compression"] = r_compression;
    j["r_preventive"] = r_preventive;
    j["r_preservation"] = r_preservation;
    j["r_context"] = r_context;
    j["r_storage"] = r_storage;
    j["r_maintenance"] = r_maintenance;
    j["r_relevance"] = r_relevance;
    j["r_memory"] = r_memory;
    j["p_rounds"] = p_rounds;
    j["p_overflow"] = p_overflow;
    j["total"] = total;
    j["flags"] = flags;
    return j;
}

RewardBreakdown RewardBreakdown::from_json(const ordered_json& j) {
    RewardBreakdown b;
    b.r_task = j.value("r_task", 0.0);
    b.r_compression = j.value("r_compression", 0.0);
    b.r_preventive = j.value("r_preventive", 0.0);
    b.r_preservation = j.value("r_preservation", 0.0);
    b.r_context = j.value("r_context", 0.0);
    b.r_storage = j.value("r_storage", 0.0);
    b.r_maintenance = j.value("r_maintenance", 0.0);
    b.r_relevance = j.value("r_relevance", 0.0);
    b.r_memory = j.value("r_memory", 0.0);
    b.p_rounds = j.value("p_rounds", 0.0);
    b.p_overflow = j.value("p_overflow", 0.0);
    b.total = j.value("total", 0.0);
    if (j.contains("flags")) {
        b.flags = j["flags"].get<std::vector<std::string>>();
    }
    return b;
}

namespace {

ordered_json experience_to_json(const Experience& e) {
    ordered_json j;
    j["type"] = "experience";
    j["stage"] = e.stage;
    j["step"] = e.step_index;
    j["context_usage"] = e.context_usage;
    j["store_size"] = e.store_size;
    j["observation_tag"] = e.observation_tag;
    j["action"] = e.action_raw;
    j["action_label"] = e.action_label;
    j["reward"] = e.reward;
    if (e.logp_old.has_value()) {
        j["logp_old"] = *e.logp_old;
    } else {
        j["logp_old"] = nullptr;
    }
    return j;
}

Experience experience_from_json(const ordered_json& j) {
    Experience e;
    e.stage = j.at("stage").get<int>();
    e.step_index = j.at("step").get<int>();
    e.context_usage = j.at("context_usage").get<int>();
    e.store_size = j.at("store_size").get<std::size_t>();
    e.observation_tag = j.at("observation_tag").get<std::string>();
    e.action_raw = j.at("action").get<std::string>();
    e.action_label = j.value("action_label", std::string());
    e.reward = j.at("reward").get<double>();
    if (!j.at("logp_old").is_null()) {
        e.logp_old = j.at("logp_old").get<double>();
    }
    return e;
}

}  // namespace

std::string trace_to_jsonl(const Trajectory& trajectory, const TaskSpec& task) {
    std::ostringstream out;
    for (const Experience& e : trajectory.experiences) {
        out << experience_to_json(e).dump() << '\n';
    }
    ordered_json trailer;
    trailer["type"] = "trailer";
    if (trajectory.answer.has_value()) {
        trailer["answer"] = *trajectory.answer;
    } else {
        trailer["answer"] = nullptr;
    }
    trailer["terminal_reward"] = trajectory.terminal_reward;
    trailer["reward_breakdown"] = trajectory.breakdown.to_json();
    trailer["tool_usage"] = trajectory.tool_usage;
    trailer["auto_retrievals"] = trajectory.auto_retrievals;
    trailer["peak_context_usage"] = trajectory.peak_context_usage;
    trailer["final_context_usage"] = trajectory.final_context_usage;
    trailer["stage_rounds"] = trajectory.stage_rounds;
    trailer["protocol_retries"] = trajectory.protocol_retries;
    trailer["wrapped_tool_objects"] = trajectory.wrapped_tool_objects;
    trailer["violations"] = {{"rounds_exceeded", trajectory.violations.rounds_exceeded},
                             {"overflow", trajectory.violations.overflow}};
    trailer["aborted"] = trajectory.aborted;
    trailer["abort_reason"] = trajectory.abort_reason;
    trailer["added_contents"] = trajectory.added_contents;
    trailer["task"] = {{"query", task.query},
                       {"expected_answer", task.expected_answer},
                       {"key_tokens", task.key_tokens},
                       {"context_info", task.context_info}};
    out << trailer.dump() << '\n';
    return out.str();
}

Expected<TraceFile> trace_from_jsonl(const std::string& text) {
    TraceFile file;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    bool trailer_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        ordered_json j = ordered_json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object() || !j.contains("type")) {
            return Expected<TraceFile>::failure("line " + std::to_string(line_no) + ": invalid trace line");
        }
        const std::string type = j["type"].get<std::string>();
        try {
            if (type == "experience") {
                file.experiences.push_back(experience_from_json(j));
            } else if (type == "trailer") {
                file.trailer = j;
                trailer_seen = true;
            } else {
                return Expected<TraceFile>::failure("line " + std::to_string(line_no) +
                                                    ": unknown line type " + type);
            }
        } catch (const ordered_json::exception& e) {
            return Expected<TraceFile>::failure("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (!trailer_seen) {
        return Expected<TraceFile>::failure("trace has no trailer line");
    }
    return file;
}

}  // namespace agemem
