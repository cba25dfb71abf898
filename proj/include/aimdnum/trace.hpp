#pragma once

#include <cstdint>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "aimdnum/random.hpp"

namespace aimdnum {

// Event-indexed record of a chain or agent-simulation run, decimated by a
// stride. The final event is always logged.
struct Trace {
    std::vector<long> events;
    std::vector<Vec> states;   // x at the logged events
    std::vector<Vec> averages; // running (long-term) average at the logged events
    std::vector<Vec> lambdas;  // probabilities applied at the logged events
    std::vector<std::vector<std::uint8_t>> drops;
    std::vector<long> wallclock; // simulation tick per event (agentsim only)

    long renorm_count = 0; // simplex-drift renormalizations, for audit
    long clamp_count = 0;  // lambda evaluations that hit the clamp
    long total_events = 0;
    bool overshoot_warning = false; // agentsim: a step overshot C by > 10%

    Vec final_x, final_xbar;

    bool has_wallclock() const { return !wallclock.empty(); }

    // Long format: event,agent,x,xbar,lambda,dropped[,wallclock_step].
    // Fixed %.17g formatting keeps reruns byte-identical.
    void write_csv(std::ostream& os) const {
        const bool wc = has_wallclock();
        os << "event,agent,x,xbar,lambda,dropped";
        if (wc) os << ",wallclock_step";
        os << "\n";
        char buf[160];
        for (std::size_t r = 0; r < events.size(); ++r) {
            const std::size_t n = states[r].size();
            for (std::size_t i = 0; i < n; ++i) {
                std::snprintf(buf, sizeof(buf), "%ld,%zu,%.17g,%.17g,%.17g,%d", events[r], i,
                              states[r][i], averages[r][i],
                              lambdas.empty() ? 0.0 : lambdas[r][i],
                              drops.empty() ? 0 : static_cast<int>(drops[r][i]));
                os << buf;
                if (wc) {
                    std::snprintf(buf, sizeof(buf), ",%ld", wallclock[r]);
                    os << buf;
                }
                os << "\n";
            }
        }
    }
};

} // namespace aimdnum
