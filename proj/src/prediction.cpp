#include "rumour/prediction.hpp"

#include "rumour/common.hpp"

namespace rumour {

namespace {

nlohmann::ordered_json task_json(Task task, const std::optional<TaskPrediction>& p) {
  if (!p) return nullptr;
  nlohmann::ordered_json j;
  j["pred"] = std::string(class_names(task)[p->label]);
  j["probs"] = p->probs;
  return j;
}

}  // namespace

nlohmann::ordered_json to_json(const ThreadPrediction& p) {
  nlohmann::ordered_json j;
  j["thread"] = p.thread;
  j["event"] = p.event;
  if (!p.model.empty()) j["model"] = p.model;
  j["veracity"] = task_json(Task::Veracity, p.veracity);
  j["detection"] = task_json(Task::Detection, p.detection);
  if (p.stance) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const StancePrediction& s : *p.stance) {
      nlohmann::ordered_json e;
      e["post"] = s.post;
      e["pred"] = std::string(to_string(s.label));
      arr.push_back(std::move(e));
    }
    j["stance"] = std::move(arr);
  } else {
    j["stance"] = nullptr;
  }
  return j;
}

void write_predictions(const std::filesystem::path& path, std::span<const ThreadPrediction> predictions) {
  std::string out;
  for (const ThreadPrediction& p : predictions) {
    out += to_json(p).dump();
    out += '\n';
  }
  write_text_atomic(path, out);
}

}  // namespace rumour
