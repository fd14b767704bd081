#include "spatialkit/bench_scorer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "spatialkit/errors.hpp"

namespace spatialkit::bench {

namespace {

const std::map<std::string, Task> name_to_task = {
    {"depth", Task::depth},       {"mcq", Task::mcq},   {"pair", Task::pair},
    {"reaching", Task::reaching}, {"size", Task::size}, {"counting", Task::counting},
};

// Returns the predicted choice as a string: strings pass through,
// numbers render without trailing zeros so counting answers like 7
// compare against "7".
std::string choice_string(const nlohmann::json& answer) {
    if (answer.is_string()) return answer.get<std::string>();
    if (answer.is_number_integer()) return std::to_string(answer.get<long long>());
    if (answer.is_number()) {
        std::ostringstream os;
        os << answer.get<double>();
        return os.str();
    }
    return answer.dump();
}

std::optional<double> numeric_answer(const nlohmann::json& answer) {
    if (answer.is_number()) return answer.get<double>();
    if (answer.is_string()) {
        try {
            std::size_t used = 0;
            const std::string s = answer.get<std::string>();
            double v = std::stod(s, &used);
            if (used == s.size()) return v;
        } catch (...) {
        }
    }
    return std::nullopt;
}

// Marks the verdict for one choice item and reports whether the answer
// was correct.
bool judge_choice(const Predictions& preds, const KeyItem& item, ItemVerdict& verdict) {
    verdict.id = item.id;
    verdict.task = task_name(item.task);
    auto it = preds.find(item.id);
    if (it == preds.end()) return false;
    verdict.answered = true;
    const std::string answer = choice_string(it->second);
    if (!item.options.empty() &&
        std::find(item.options.begin(), item.options.end(), answer) == item.options.end()) {
        verdict.invalid_choice = true;
        return false;
    }
    verdict.correct = answer == item.truth.get<std::string>();
    return verdict.correct;
}

// pair_id -> indices of its members, preserving key order.
std::map<std::string, std::vector<std::size_t>> group_pairs(const std::vector<KeyItem>& items) {
    std::map<std::string, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < items.size(); ++i)
        if (!items[i].pair_id.empty()) groups[items[i].pair_id].push_back(i);
    return groups;
}

void check_pairs_complete(const std::map<std::string, std::vector<std::size_t>>& groups) {
    for (const auto& [pair_id, members] : groups)
        if (members.size() != 2)
            throw ValidationError("pair id '" + pair_id + "' covers " +
                                  std::to_string(members.size()) + " items, expected 2");
}

}  // namespace

std::string task_name(Task t) {
    for (const auto& [name, task] : name_to_task)
        if (task == t) return name;
    return "unknown";
}

Task task_from_name(const std::string& name) {
    auto it = name_to_task.find(name);
    if (it == name_to_task.end()) throw ValidationError("unknown task '" + name + "'");
    return it->second;
}

void AnswerKey::validate() const {
    std::set<std::string> ids;
    for (const auto& item : items) {
        if (item.id.empty()) throw ValidationError("answer key item with empty id");
        if (!ids.insert(item.id).second)
            throw ValidationError("duplicate item id '" + item.id + "' in answer key");
        if (item.task == Task::depth) {
            if (!item.truth.is_number() || item.truth.get<double>() <= 0)
                throw ValidationError("item '" + item.id + "': depth ground truth must be > 0");
        } else {
            if (!item.truth.is_string())
                throw ValidationError("item '" + item.id + "': choice ground truth must be a string");
            if (!item.options.empty() &&
                std::find(item.options.begin(), item.options.end(),
                          item.truth.get<std::string>()) == item.options.end())
                throw ValidationError("item '" + item.id + "': truth is not among the options");
        }
    }
    // Pair ids must pair up within each task.
    for (const auto& [name, task] : name_to_task) {
        std::vector<KeyItem> filtered;
        for (const auto& item : items)
            if (item.task == task) filtered.push_back(item);
        check_pairs_complete(group_pairs(filtered));
    }
}

AnswerKey AnswerKey::load_json(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open " + path.string());
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
    if (!j.contains("items") || !j.at("items").is_array())
        throw ValidationError(path.string() + ": answer key needs an 'items' array");
    AnswerKey key;
    for (const auto& entry : j.at("items")) {
        KeyItem item;
        item.id = entry.at("id").get<std::string>();
        item.task = task_from_name(entry.at("task").get<std::string>());
        item.truth = entry.at("truth");
        if (entry.contains("options"))
            item.options = entry.at("options").get<std::vector<std::string>>();
        if (entry.contains("pair")) item.pair_id = entry.at("pair").get<std::string>();
        key.items.push_back(std::move(item));
    }
    key.validate();
    return key;
}

Predictions load_predictions_jsonl(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open " + path.string());
    Predictions preds;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
        if (!j.contains("id") || !j.contains("answer"))
            throw ValidationError(path.string() + ":" + std::to_string(lineno) +
                                  ": prediction needs 'id' and 'answer'");
        preds[j.at("id").get<std::string>()] = j.at("answer");
    }
    return preds;
}

TaskResult score_depth(const Predictions& preds, const std::vector<KeyItem>& items) {
    TaskResult result{"depth", 0.0, {}};
    if (items.empty()) return result;
    double total = 0.0;
    for (const auto& item : items) {
        ItemVerdict verdict;
        verdict.id = item.id;
        verdict.task = "depth";
        const double d_gt = item.truth.get<double>();
        if (d_gt <= 0) throw ValidationError("item '" + item.id + "': depth ground truth must be > 0");
        double accuracy = 0.0;
        auto it = preds.find(item.id);
        if (it != preds.end()) {
            verdict.answered = true;
            if (auto d_est = numeric_answer(it->second)) {
                accuracy = std::max(0.0, 1.0 - std::fabs(d_gt - *d_est) / d_gt) * 100.0;
                verdict.correct = *d_est == d_gt;
            }
        }
        verdict.accuracy = accuracy;
        total += accuracy;
        result.verdicts.push_back(std::move(verdict));
    }
    result.score = total / static_cast<double>(items.size());
    return result;
}

TaskResult score_mcq(const Predictions& preds, const std::vector<KeyItem>& items,
                     const std::string& name) {
    TaskResult result{name, 0.0, {}};
    if (items.empty()) return result;
    std::size_t correct = 0;
    for (const auto& item : items) {
        ItemVerdict verdict;
        if (judge_choice(preds, item, verdict)) ++correct;
        result.verdicts.push_back(std::move(verdict));
    }
    result.score = 100.0 * static_cast<double>(correct) / static_cast<double>(items.size());
    return result;
}

TaskResult score_pairs(const Predictions& preds, const std::vector<KeyItem>& items,
                       const std::string& name) {
    TaskResult result{name, 0.0, {}};
    if (items.empty()) return result;
    auto groups = group_pairs(items);
    check_pairs_complete(groups);
    if (groups.empty())
        throw ValidationError("pair scoring needs items grouped by pair id");

    std::vector<bool> item_correct(items.size(), false);
    for (std::size_t i = 0; i < items.size(); ++i) {
        ItemVerdict verdict;
        item_correct[i] = judge_choice(preds, items[i], verdict);
        result.verdicts.push_back(std::move(verdict));
    }
    std::size_t correct_pairs = 0;
    for (const auto& [pair_id, members] : groups)
        if (item_correct[members[0]] && item_correct[members[1]]) ++correct_pairs;
    result.score = 100.0 * static_cast<double>(correct_pairs) / static_cast<double>(groups.size());
    return result;
}

TaskResult score_with_bonus(const Predictions& preds, const std::vector<KeyItem>& items,
                            const std::string& name, double bonus_weight) {
    if (bonus_weight < 0 || bonus_weight > 100)
        throw ValidationError("bonus weight must lie in [0, 100]");
    TaskResult result{name, 0.0, {}};
    if (items.empty()) return result;
    auto groups = group_pairs(items);
    check_pairs_complete(groups);

    std::vector<bool> item_correct(items.size(), false);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < items.size(); ++i) {
        ItemVerdict verdict;
        item_correct[i] = judge_choice(preds, items[i], verdict);
        if (item_correct[i]) ++correct;
        result.verdicts.push_back(std::move(verdict));
    }
    const double choice_ratio = static_cast<double>(correct) / static_cast<double>(items.size());
    double pair_ratio = 0.0;
    if (!groups.empty()) {
        std::size_t correct_pairs = 0;
        for (const auto& [pair_id, members] : groups)
            if (item_correct[members[0]] && item_correct[members[1]]) ++correct_pairs;
        pair_ratio = static_cast<double>(correct_pairs) / static_cast<double>(groups.size());
    }
    result.score = choice_ratio * (100.0 - bonus_weight) + pair_ratio * bonus_weight;
    return result;
}

ScoreReport aggregate(const std::vector<TaskResult>& parts, double bonus_weight) {
    ScoreReport report;
    report.bonus_weight = bonus_weight;
    double total = 0.0;
    std::size_t present = 0;
    for (const auto& part : parts) {
        if (part.verdicts.empty()) continue;
        report.task_scores[part.name] = part.score;
        total += part.score;
        ++present;
        for (const auto& verdict : part.verdicts) {
            if (!verdict.answered) ++report.unanswered;
            report.verdicts.push_back(verdict);
        }
    }
    report.overall = present == 0 ? 0.0 : total / static_cast<double>(present);
    return report;
}

ScoreReport score_all(const Predictions& preds, const AnswerKey& key, double bonus_weight) {
    key.validate();
    std::map<Task, std::vector<KeyItem>> by_task;
    for (const auto& item : key.items) by_task[item.task].push_back(item);

    std::vector<TaskResult> parts;
    for (const auto& [task, items] : by_task) {
        switch (task) {
            case Task::depth: parts.push_back(score_depth(preds, items)); break;
            case Task::mcq: parts.push_back(score_mcq(preds, items, "mcq")); break;
            case Task::counting: parts.push_back(score_mcq(preds, items, "counting")); break;
            case Task::pair: parts.push_back(score_pairs(preds, items, "pair")); break;
            case Task::reaching:
                parts.push_back(score_with_bonus(preds, items, "reaching", bonus_weight));
                break;
            case Task::size:
                parts.push_back(score_with_bonus(preds, items, "size", bonus_weight));
                break;
        }
    }
    return aggregate(parts, bonus_weight);
}

nlohmann::ordered_json ScoreReport::to_json() const {
    nlohmann::ordered_json j;
    j["overall"] = overall;
    j["bonus_weight"] = bonus_weight;
    j["tasks"] = nlohmann::ordered_json::object();
    for (const auto& [name, score] : task_scores) j["tasks"][name] = score;
    j["unanswered"] = unanswered;
    auto verdicts_json = nlohmann::ordered_json::array();
    for (const auto& v : verdicts) {
        nlohmann::ordered_json vj;
        vj["id"] = v.id;
        vj["task"] = v.task;
        vj["answered"] = v.answered;
        vj["correct"] = v.correct;
        if (v.invalid_choice) vj["invalid_choice"] = true;
        if (v.accuracy) vj["accuracy"] = *v.accuracy;
        verdicts_json.push_back(std::move(vj));
    }
    j["verdicts"] = std::move(verdicts_json);
    return j;
}

ScoreReport ScoreReport::from_json(const nlohmann::json& j) {
    ScoreReport report;
    report.overall = j.at("overall").get<double>();
    report.bonus_weight = j.at("bonus_weight").get<double>();
    for (const auto& [name, score] : j.at("tasks").items())
        report.task_scores[name] = score.get<double>();
    report.unanswered = j.at("unanswered").get<std::size_t>();
    for (const auto& vj : j.at("verdicts")) {
        ItemVerdict v;
        v.id = vj.at("id").get<std::string>();
        v.task = vj.at("task").get<std::string>();
        v.answered = vj.at("answered").get<bool>();
        v.correct = vj.at("correct").get<bool>();
        v.invalid_choice = vj.value("invalid_choice", false);
        if (vj.contains("accuracy")) v.accuracy = vj.at("accuracy").get<double>();
        report.verdicts.push_back(std::move(v));
    }
    return report;
}

}  // namespace spatialkit::bench
