#pragma once

#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "coedit/session.hpp"

namespace coedit {

enum class EpisodeKind { Concurrent, SameAction };

std::string_view to_string(EpisodeKind kind);

/// Half-open interval [start_ms, end_ms) with end_ms > start_ms.
struct Episode {
  TimeMs start_ms = 0;
  TimeMs end_ms = 0;
  EpisodeKind kind = EpisodeKind::Concurrent;

  TimeMs duration_ms() const { return end_ms - start_ms; }
};

struct LogSummary {
  /// Header to first successful match, or to the last event when none succeeded.
  TimeMs start_ms = 0;
  TimeMs end_ms = 0;
  bool matched = false;
  std::vector<Episode> episodes;
};

/// Replays the log and tracks when both confirmed groups intersect (Concurrent)
/// and when both users additionally hold grabs of the same operation (SameAction).
/// Intervals still open at the end are closed there. Throws CorruptLogError.
LogSummary summarize_log(std::span<const SessionEvent> log);
std::vector<Episode> detect_episodes(std::span<const SessionEvent> log);

struct ModelMetrics {
  double t = 0.0;
  double t_co = 0.0;
  double t_same = 0.0;
  std::size_t n_episodes = 0;
  bool matched = false;
};

/// Times in seconds. Ratios with a zero denominator are empty.
struct MetricsReport {
  std::vector<ModelMetrics> models;
  double total_time = 0.0;
  std::optional<double> mean_completion_time;
  std::optional<double> concurrent_time_ratio;
  std::optional<double> same_action_concurrent_ratio;
  std::optional<double> mean_concurrent_duration;
};

MetricsReport compute_metrics(std::span<const ModelMetrics> models);
MetricsReport compute_metrics(std::span<const std::vector<SessionEvent>> logs);
ModelMetrics model_metrics(const LogSummary &summary);

/// Empty values are written as null.
nlohmann::json to_json(const MetricsReport &report);

} // namespace coedit
