#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace spatialkit::bench {

enum class Task { depth, mcq, pair, reaching, size, counting };

std::string task_name(Task t);
Task task_from_name(const std::string& name);

/// One scored item of the answer key. `truth` is a positive number of
/// millimeters for depth items and the expected choice string otherwise.
struct KeyItem {
    std::string id;
    Task task = Task::mcq;
    nlohmann::json truth;
    std::vector<std::string> options;  // optional choice set
    std::string pair_id;               // nonempty groups positive/negative twins
};

struct AnswerKey {
    std::vector<KeyItem> items;

    /// Checks d_gt > 0 on depth items, unique ids, truth inside the
    /// option set, and that every pair id covers exactly two items of
    /// the same task. Throws ValidationError.
    void validate() const;

    static AnswerKey load_json(const std::filesystem::path& path);
};

/// id -> raw predicted answer. Items absent here are unanswered.
using Predictions = std::map<std::string, nlohmann::json>;

/// Reads JSONL lines of {"id": ..., "answer": ...}.
Predictions load_predictions_jsonl(const std::filesystem::path& path);

struct ItemVerdict {
    std::string id;
    std::string task;
    bool answered = false;
    bool correct = false;
    bool invalid_choice = false;          // answered outside the option set
    std::optional<double> accuracy;       // depth items only, in [0, 100]
};

struct TaskResult {
    std::string name;
    double score = 0.0;  // in [0, 100]
    std::vector<ItemVerdict> verdicts;
};

/// Per item: accuracy = max(0, 1 - |d_gt - d_est| / d_gt) * 100; the task
/// score is the mean, with unanswered items scoring 0.
TaskResult score_depth(const Predictions& preds, const std::vector<KeyItem>& items);

/// Correct-selection ratio * 100. Counting items score through this too.
TaskResult score_mcq(const Predictions& preds, const std::vector<KeyItem>& items,
                     const std::string& name = "mcq");

/// A pair counts only when both members are answered correctly;
/// score = 100 * correct pairs / pairs.
TaskResult score_pairs(const Predictions& preds, const std::vector<KeyItem>& items,
                       const std::string& name = "pair");

/// Choice ratio earns (100 - bonus_weight); answering both members of a
/// pair correctly earns the pair-ratio share of bonus_weight on top.
TaskResult score_with_bonus(const Predictions& preds, const std::vector<KeyItem>& items,
                            const std::string& name, double bonus_weight);

struct ScoreReport {
    double overall = 0.0;
    std::map<std::string, double> task_scores;
    std::vector<ItemVerdict> verdicts;
    std::size_t unanswered = 0;
    double bonus_weight = 0.0;

    nlohmann::ordered_json to_json() const;
    static ScoreReport from_json(const nlohmann::json& j);
};

/// Overall = unweighted mean of the present task scores.
ScoreReport aggregate(const std::vector<TaskResult>& parts, double bonus_weight);

inline constexpr double default_bonus_weight = 33.3;

/// Partitions the key by task, scores each part, and aggregates.
ScoreReport score_all(const Predictions& preds, const AnswerKey& key,
                      double bonus_weight = default_bonus_weight);

}  // namespace spatialkit::bench
