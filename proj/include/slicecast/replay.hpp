#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <thread>

#include "slicecast/series_frame.hpp"

namespace slicecast {

// Serves a frame as a Prometheus scrape target. Virtual time starts at the
// frame's first timestamp when the server starts and advances at `speedup`
// times wall speed; each scrape of /metrics reports, per column, the row
// whose timestamp is the latest one not after virtual time (last value
// holds). /health reports liveness; scrapes before the server is ready get
// 503.
class ReplayServer {
public:
    // `wall_clock` returns seconds (sub-second resolution); injectable so
    // tests can drive virtual time deterministically. Defaults to the steady
    // clock.
    ReplayServer(SeriesFrame frame, double speedup,
                 std::function<double()> wall_clock = {});
    ~ReplayServer();

    ReplayServer(const ReplayServer&) = delete;
    ReplayServer& operator=(const ReplayServer&) = delete;

    // Binds and begins serving; port 0 picks a free port. Throws Error when
    // the port is taken. `defer_ready` keeps /metrics at 503 until
    // mark_ready() — the startup window made explicit for tests.
    void start(const std::string& bind_address, int port, bool defer_ready = false);
    void mark_ready();
    void stop();

    int port() const { return port_; }
    bool running() const;

    // Exposition body for one instant; pure, shared by every scrape.
    std::string render_metrics(std::int64_t virtual_time) const;

    std::int64_t virtual_now() const;

private:
    SeriesFrame frame_;
    double speedup_;
    std::function<double()> wall_clock_;
    double wall_start_ = 0.0;
    std::int64_t virtual_start_ = 0;

    std::atomic<bool> ready_{false};
    int port_ = 0;
    std::unique_ptr<struct ReplayServerImpl> impl_;
    std::thread worker_;
};

}  // namespace slicecast
