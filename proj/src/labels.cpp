#include "rumour/labels.hpp"

#include "rumour/common.hpp"

namespace rumour {

namespace {

template <class Enum, std::size_t N>
std::optional<Enum> parse_from(const std::array<std::string_view, N>& names, std::string_view s) {
  for (std::size_t i = 0; i < N; ++i) {
    if (names[i] == s) return static_cast<Enum>(i);
  }
  return std::nullopt;
}

}  // namespace

std::span<const std::string_view> class_names(Task task) {
  switch (task) {
    case Task::Stance: return kStanceNames;
    case Task::Detection: return kDetectionNames;
    case Task::Veracity: return kVeracityNames;
  }
  return {};
}

std::string_view task_name(Task task) {
  switch (task) {
    case Task::Stance: return "stance";
    case Task::Detection: return "detection";
    case Task::Veracity: return "veracity";
  }
  return "?";
}

std::optional<Task> parse_task(std::string_view name) {
  for (Task t : kAllTasks) {
    if (task_name(t) == name) return t;
  }
  return std::nullopt;
}

std::optional<Stance> parse_stance(std::string_view s) { return parse_from<Stance>(kStanceNames, s); }
std::optional<Detection> parse_detection(std::string_view s) { return parse_from<Detection>(kDetectionNames, s); }
std::optional<Veracity> parse_veracity(std::string_view s) { return parse_from<Veracity>(kVeracityNames, s); }

TaskSet TaskSet::parse(std::string_view list) {
  TaskSet set;
  std::size_t start = 0;
  while (start <= list.size()) {
    std::size_t end = list.find(',', start);
    if (end == std::string_view::npos) end = list.size();
    std::string_view item = list.substr(start, end - start);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (!item.empty()) {
      auto task = parse_task(item);
      if (!task) throw ValidationError("unknown task '" + std::string(item) + "'");
      set.insert(*task);
    }
    start = end + 1;
  }
  return set;
}

std::string TaskSet::to_string() const {
  std::string out;
  for (Task t : kAllTasks) {
    if (!contains(t)) continue;
    if (!out.empty()) out += ',';
    out += task_name(t);
  }
  return out;
}

}  // namespace rumour
