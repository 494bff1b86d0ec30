#include "coedit/metrics.hpp"

#include <algorithm>

#include "coedit/harness.hpp"

namespace coedit {

using nlohmann::json;

std::string_view to_string(EpisodeKind kind) {
  return kind == EpisodeKind::Concurrent ? "concurrent" : "same_action";
}

namespace {

struct OpenInterval {
  std::optional<TimeMs> start;

  void update(bool active, TimeMs t, EpisodeKind kind, std::vector<Episode> &out) {
    if (active && !start) {
      start = t;
    } else if (!active && start) {
      close(t, kind, out);
    }
  }

  void close(TimeMs t, EpisodeKind kind, std::vector<Episode> &out) {
    if (start && t > *start) {
      out.push_back({*start, t, kind});
    }
    start.reset();
  }
};

bool groups_intersect(const Session &s) {
  const auto &a = s.user(0).group;
  const auto &b = s.user(1).group;
  if (!a || !b) {
    return false;
  }
  return std::any_of(a->begin(), a->end(), [&](VertexId v) { return b->contains(v); });
}

} // namespace

LogSummary summarize_log(std::span<const SessionEvent> log) {
  LogSummary summary;
  if (log.empty()) {
    throw CorruptLogError("empty log");
  }
  summary.start_ms = log.front().t_ms;
  OpenInterval concurrent;
  OpenInterval same;
  bool done = false;
  TimeMs last = summary.start_ms;
  replay(log, [&](const SessionEvent &e, const Session &s) {
    if (done) {
      return;
    }
    last = e.t_ms;
    const bool co = groups_intersect(s);
    const ActiveOps ops = s.active_ops();
    const bool same_op = co && ops[0] && ops[1] && *ops[0] == *ops[1];
    concurrent.update(co, e.t_ms, EpisodeKind::Concurrent, summary.episodes);
    same.update(same_op, e.t_ms, EpisodeKind::SameAction, summary.episodes);
    if (e.dir == Direction::Out && e.msg.is_object() &&
        e.msg.value("type", "") == "match_result" && e.msg.value("matched", false)) {
      summary.matched = true;
      done = true;
    }
  });
  summary.end_ms = last;
  concurrent.close(last, EpisodeKind::Concurrent, summary.episodes);
  same.close(last, EpisodeKind::SameAction, summary.episodes);
  return summary;
}

std::vector<Episode> detect_episodes(std::span<const SessionEvent> log) {
  return summarize_log(log).episodes;
}

ModelMetrics model_metrics(const LogSummary &summary) {
  ModelMetrics m;
  m.t = static_cast<double>(summary.end_ms - summary.start_ms) / 1000.0;
  TimeMs co = 0;
  TimeMs same = 0;
  for (const Episode &e : summary.episodes) {
    if (e.kind == EpisodeKind::Concurrent) {
      co += e.duration_ms();
      ++m.n_episodes;
    } else {
      same += e.duration_ms();
    }
  }
  m.t_co = static_cast<double>(co) / 1000.0;
  m.t_same = static_cast<double>(same) / 1000.0;
  m.matched = summary.matched;
  return m;
}

MetricsReport compute_metrics(std::span<const ModelMetrics> models) {
  MetricsReport r;
  r.models.assign(models.begin(), models.end());
  double co = 0.0;
  double same = 0.0;
  std::size_t n = 0;
  for (const ModelMetrics &m : models) {
    r.total_time += m.t;
    co += m.t_co;
    same += m.t_same;
    n += m.n_episodes;
  }
  if (!models.empty()) {
    r.mean_completion_time = r.total_time / static_cast<double>(models.size());
  }
  if (r.total_time > 0.0) {
    r.concurrent_time_ratio = co / r.total_time;
  }
  if (co > 0.0) {
    r.same_action_concurrent_ratio = same / co;
    r.mean_concurrent_duration = co / static_cast<double>(n);
  }
  return r;
}

MetricsReport compute_metrics(std::span<const std::vector<SessionEvent>> logs) {
  std::vector<ModelMetrics> models;
  for (const auto &log : logs) {
    models.push_back(model_metrics(summarize_log(log)));
  }
  return compute_metrics(models);
}

json to_json(const MetricsReport &report) {
  auto opt = [](const std::optional<double> &v) { return v ? json(*v) : json(nullptr); };
  json models = json::array();
  double co = 0.0;
  double same = 0.0;
  std::size_t n = 0;
  for (const ModelMetrics &m : report.models) {
    models.push_back({{"t_s", m.t},
                      {"t_co_s", m.t_co},
                      {"t_same_s", m.t_same},
                      {"n_episodes", m.n_episodes},
                      {"matched", m.matched}});
    co += m.t_co;
    same += m.t_same;
    n += m.n_episodes;
  }
  return {{"n_m", report.models.size()},
          {"models", std::move(models)},
          {"total_time_s", report.total_time},
          {"total_concurrent_s", co},
          {"total_same_action_s", same},
          {"total_episodes", n},
          {"mean_completion_time_s", opt(report.mean_completion_time)},
          {"concurrent_time_ratio", opt(report.concurrent_time_ratio)},
          {"same_action_concurrent_ratio", opt(report.same_action_concurrent_ratio)},
          {"mean_concurrent_duration_s", opt(report.mean_concurrent_duration)}};
}

} // namespace coedit
