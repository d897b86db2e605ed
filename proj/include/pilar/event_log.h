#ifndef PILAR_EVENT_LOG_H_
#define PILAR_EVENT_LOG_H_

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace pilar {

struct EventRecord {
  std::uint64_t seq = 0;
  std::int64_t timestamp_ms = 0;
  // profile_upsert, session_create, detect, recommend, explain
  std::string kind;
  nlohmann::json payload;

  bool operator==(const EventRecord&) const = default;
};

nlohmann::json ToJson(const EventRecord& e);
EventRecord EventFromJson(const nlohmann::json& j);

struct LogContents {
  // Latest snapshot, if any, and the seq it covers.
  std::optional<nlohmann::json> snapshot;
  std::uint64_t snapshot_seq = 0;
  // Events after the snapshot, in seq order.
  std::vector<EventRecord> events;
  // Set when an incomplete final line was dropped.
  std::optional<std::string> warning;
};

// JSON-lines log in <dir>/events.jsonl plus <dir>/snapshot.json. Appends are
// serialized and flushed before returning.
class EventLog {
 public:
  explicit EventLog(std::filesystem::path dir);

  // Reads snapshot and log. A malformed final line is dropped (and cut from
  // the file) with a warning; any other malformed line or a non-increasing
  // seq throws Error(kCorruptLogLine) naming the seq and line.
  LogContents Load();

  // Assigns the next seq, writes and flushes. Returns the stored record.
  EventRecord Append(std::string kind, nlohmann::json payload, std::int64_t timestamp_ms);

  // Atomically replaces the snapshot (write to temp, rename).
  void WriteSnapshot(const nlohmann::json& state, std::uint64_t seq);

  std::uint64_t last_seq() const;
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  mutable std::mutex mu_;
  std::uint64_t last_seq_ = 0;
  std::ofstream out_;
};

}  // namespace pilar

#endif  // PILAR_EVENT_LOG_H_
