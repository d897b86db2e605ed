#include "pilar/event_log.h"

#include <fmt/format.h>

#include "pilar/error.h"

namespace pilar {

namespace {

constexpr const char* kLogName = "events.jsonl";
constexpr const char* kSnapshotName = "snapshot.json";

}  // namespace

nlohmann::json ToJson(const EventRecord& e) {
  return {{"seq", e.seq}, {"timestamp", e.timestamp_ms}, {"kind", e.kind}, {"payload", e.payload}};
}

EventRecord EventFromJson(const nlohmann::json& j) {
  EventRecord e;
  e.seq = j.at("seq").get<std::uint64_t>();
  e.timestamp_ms = j.at("timestamp").get<std::int64_t>();
  e.kind = j.at("kind").get<std::string>();
  e.payload = j.at("payload");
  return e;
}

EventLog::EventLog(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

LogContents EventLog::Load() {
  std::lock_guard lock(mu_);
  LogContents out;
  const auto snap_path = dir_ / kSnapshotName;
  if (std::filesystem::exists(snap_path)) {
    std::ifstream in(snap_path);
    try {
      auto j = nlohmann::json::parse(in);
      out.snapshot_seq = j.at("seq").get<std::uint64_t>();
      out.snapshot = j.at("state");
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kCorruptLogLine, fmt::format("snapshot unreadable: {}", e.what()),
                  {{"file", snap_path.string()}});
    }
  }

  const auto log_path = dir_ / kLogName;
  std::uint64_t last = out.snapshot_seq;
  if (std::filesystem::exists(log_path)) {
    std::ifstream in(log_path, std::ios::binary);
    const std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::size_t pos = 0;
    std::size_t line_no = 0;
    std::uint64_t prev = 0;
    while (pos < data.size()) {
      const std::size_t nl = data.find('\n', pos);
      const bool complete = nl != std::string::npos;
      const std::string line = data.substr(pos, complete ? nl - pos : std::string::npos);
      ++line_no;
      const std::size_t next = complete ? nl + 1 : data.size();
      const bool is_last = next >= data.size();
      EventRecord rec;
      bool ok = true;
      try {
        rec = EventFromJson(nlohmann::json::parse(line));
      } catch (const nlohmann::json::exception&) {
        ok = false;
      }
      if (!ok || !complete) {
        if (is_last) {
          out.warning = fmt::format("dropped incomplete final log line {} after seq {}", line_no,
                                    prev);
          std::filesystem::resize_file(log_path, pos);
          break;
        }
        throw Error(ErrorCode::kCorruptLogLine,
                    fmt::format("corrupt log line {} after seq {}", line_no, prev),
                    {{"line", line_no}, {"seq", prev + 1}});
      }
      if (rec.seq <= prev) {
        throw Error(ErrorCode::kCorruptLogLine,
                    fmt::format("log line {} has seq {} after {}", line_no, rec.seq, prev),
                    {{"line", line_no}, {"seq", rec.seq}});
      }
      prev = rec.seq;
      if (rec.seq > out.snapshot_seq) out.events.push_back(std::move(rec));
      pos = next;
    }
    last = std::max(last, prev);
  }
  last_seq_ = last;
  out_.close();
  out_.open(log_path, std::ios::binary | std::ios::app);
  return out;
}

EventRecord EventLog::Append(std::string kind, nlohmann::json payload, std::int64_t timestamp_ms) {
  std::lock_guard lock(mu_);
  if (!out_.is_open()) out_.open(dir_ / kLogName, std::ios::binary | std::ios::app);
  EventRecord rec{last_seq_ + 1, timestamp_ms, std::move(kind), std::move(payload)};
  out_ << ToJson(rec).dump() << '\n';
  out_.flush();
  if (!out_) {
    throw Error(ErrorCode::kDataFile, "event log write failed", {{"dir", dir_.string()}});
  }
  last_seq_ = rec.seq;
  return rec;
}

void EventLog::WriteSnapshot(const nlohmann::json& state, std::uint64_t seq) {
  std::lock_guard lock(mu_);
  const auto tmp = dir_ / "snapshot.json.tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << nlohmann::json{{"seq", seq}, {"state", state}}.dump();
    if (!out) throw Error(ErrorCode::kDataFile, "snapshot write failed", {{"dir", dir_.string()}});
  }
  std::filesystem::rename(tmp, dir_ / kSnapshotName);
}

std::uint64_t EventLog::last_seq() const {
  std::lock_guard lock(mu_);
  return last_seq_;
}

}  // namespace pilar
