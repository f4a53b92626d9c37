#include "vo/event_log.hpp"

#include <algorithm>

#include "vo/error.hpp"
#include "vo/text.hpp"

namespace vo {

const LogRecord& EventLog::append(Tick tick, std::string module, std::string kind, std::string summary) {
  if (!records_.empty() && tick < records_.back().tick) {
    fail(ErrorCode::InvalidRecord, "log tick " + std::to_string(tick) + " precedes " +
                                       std::to_string(records_.back().tick));
  }
  std::replace(summary.begin(), summary.end(), '\n', ' ');
  std::replace(summary.begin(), summary.end(), '\t', ' ');
  auto digest = text::digest(summary);
  records_.push_back(LogRecord{tick, std::move(module), std::move(kind), std::move(digest), std::move(summary)});
  return records_.back();
}

std::size_t EventLog::count(std::string_view kind) const {
  return std::count_if(records_.begin(), records_.end(), [&](const LogRecord& r) { return r.kind == kind; });
}

std::size_t EventLog::count(std::string_view module, std::string_view kind) const {
  return std::count_if(records_.begin(), records_.end(),
                       [&](const LogRecord& r) { return r.module == module && r.kind == kind; });
}

std::string EventLog::serialize() const {
  std::string out;
  for (const auto& r : records_) {
    out += std::to_string(r.tick) + "\t" + r.module + "\t" + r.kind + "\t" + r.digest + "\t" + r.summary + "\n";
  }
  return out;
}

EventLog EventLog::parse(std::string_view content) {
  EventLog log;
  const auto lines = text::lines(content);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto parts = text::split(lines[i], '\t');
    const auto tick = parts.size() == 5 ? text::parse_int(parts[0]) : std::nullopt;
    if (!tick || *tick < 0) throw ParseError(i + 1, "malformed log record");
    const auto& rec = log.append(static_cast<Tick>(*tick), parts[1], parts[2], parts[4]);
    if (rec.digest != parts[3]) throw ParseError(i + 1, "log digest mismatch");
  }
  return log;
}

}  // namespace vo
