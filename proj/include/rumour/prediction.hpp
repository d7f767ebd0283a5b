#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "rumour/labels.hpp"

namespace rumour {

struct TaskPrediction {
  std::size_t label = 0;       // class index
  std::vector<double> probs;   // one entry per class

  bool operator==(const TaskPrediction&) const = default;
};

struct StancePrediction {
  std::string post;
  Stance label = Stance::Comment;

  bool operator==(const StancePrediction&) const = default;
};

/// Thread-level output of any model (neural or baseline).
struct ThreadPrediction {
  std::string thread;
  std::string event;
  std::string model;  // empty for neural models
  std::optional<TaskPrediction> veracity;
  std::optional<TaskPrediction> detection;
  std::optional<std::vector<StancePrediction>> stance;

  bool operator==(const ThreadPrediction&) const = default;
};

/// One line of the prediction dump.
nlohmann::ordered_json to_json(const ThreadPrediction& p);
/// Newline-delimited JSON, written atomically.
void write_predictions(const std::filesystem::path& path, std::span<const ThreadPrediction> predictions);

}  // namespace rumour
