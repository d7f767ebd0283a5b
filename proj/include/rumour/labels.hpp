#pragma once

// Label vocabularies for the three tasks. Enumerators are declared in
// alphabetical order of their string names; the enumerator value is the
// class index used everywhere (model outputs, confusion matrices, and the
// integer coding behind the kurtosis diagnostic).

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace rumour {

enum class Stance : std::uint8_t { Comment, Deny, Query, Support };
enum class Detection : std::uint8_t { NonRumour, Rumour };
enum class Veracity : std::uint8_t { False, True, Unverified };

enum class Task : std::uint8_t { Stance, Detection, Veracity };

inline constexpr std::array<std::string_view, 4> kStanceNames{"comment", "deny", "query", "support"};
inline constexpr std::array<std::string_view, 2> kDetectionNames{"non-rumour", "rumour"};
inline constexpr std::array<std::string_view, 3> kVeracityNames{"false", "true", "unverified"};
inline constexpr std::array<Task, 3> kAllTasks{Task::Stance, Task::Detection, Task::Veracity};

/// Class names of a task, in class-index order.
std::span<const std::string_view> class_names(Task task);
inline std::size_t num_classes(Task task) { return class_names(task).size(); }

std::string_view task_name(Task task);
std::optional<Task> parse_task(std::string_view name);

inline std::string_view to_string(Stance s) { return kStanceNames[static_cast<std::size_t>(s)]; }
inline std::string_view to_string(Detection d) { return kDetectionNames[static_cast<std::size_t>(d)]; }
inline std::string_view to_string(Veracity v) { return kVeracityNames[static_cast<std::size_t>(v)]; }

std::optional<Stance> parse_stance(std::string_view s);
std::optional<Detection> parse_detection(std::string_view s);
std::optional<Veracity> parse_veracity(std::string_view s);

/// A set of tasks, e.g. {veracity, stance}.
class TaskSet {
 public:
  constexpr TaskSet() = default;
  constexpr TaskSet(std::initializer_list<Task> tasks) {
    for (Task t : tasks) bits_ |= bit(t);
  }

  constexpr bool contains(Task t) const { return (bits_ & bit(t)) != 0; }
  constexpr void insert(Task t) { bits_ |= bit(t); }
  constexpr std::size_t size() const {
    return static_cast<std::size_t>((bits_ & 1) + ((bits_ >> 1) & 1) + ((bits_ >> 2) & 1));
  }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr bool operator==(const TaskSet&) const = default;

  /// Parses a comma-separated list such as "veracity,stance".
  static TaskSet parse(std::string_view list);
  /// Canonical comma-separated form, in stance, detection, veracity order.
  std::string to_string() const;

 private:
  static constexpr std::uint8_t bit(Task t) { return static_cast<std::uint8_t>(1u << static_cast<unsigned>(t)); }
  std::uint8_t bits_ = 0;
};

}  // namespace rumour
