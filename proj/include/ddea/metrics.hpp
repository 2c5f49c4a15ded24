#pragma once

#include <stdexcept>
#include <vector>

#include "ddea/ea.hpp"
#include "ddea/solution.hpp"

namespace ddea {

/// Time-weighted average optimality gap in percent: the incumbent trace is a
/// step function (value a_{i-1} holds on [t_{i-1}, t_i)), and the gap of that
/// step function is integrated over [t_0, t_n] and normalized by the window
/// length. A single-event trace has no window and returns that event's gap.
inline double primal_integral(const std::vector<TraceEvent>& events, int bks) {
  if (bks < 1) throw std::invalid_argument("primal_integral: bks must be >= 1");
  if (events.empty()) throw std::invalid_argument("primal_integral: empty trace");
  for (std::size_t i = 1; i < events.size(); ++i)
    if (!(events[i].t > events[i - 1].t))
      throw std::invalid_argument("primal_integral: timestamps must be strictly increasing");

  auto gap = [&](int a) { return 100.0 * (bks - a) / static_cast<double>(bks); };
  if (events.size() == 1) return gap(events.front().incumbent);

  const double window = events.back().t - events.front().t;
  double area = 0.0;
  for (std::size_t i = 1; i < events.size(); ++i)
    area += gap(events[i - 1].incumbent) * (events[i].t - events[i - 1].t);
  return area / window;
}

inline double primal_integral(const RunTrace& trace, int bks) {
  return primal_integral(trace.events, bks);
}

}  // namespace ddea
