#pragma once

#include <string>
#include <vector>

#include "chpf/metrics.hpp"
#include "chpf/scenario.hpp"

namespace chpf {

/// Two stacked line charts sharing the frame axis: err_add (clipped at
/// `error_cap`) on top, alpha below. Event frame ranges are shaded in both.
std::string render_trace_svg(const std::vector<RunTraceRow>& trace,
                             const std::vector<Event>& events, const std::string& title,
                             double error_cap);

}  // namespace chpf
