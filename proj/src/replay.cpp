#include "slicecast/replay.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>

#include <httplib.h>

#include "slicecast/errors.hpp"

namespace slicecast {

struct ReplayServerImpl {
    httplib::Server server;
};

namespace {

double steady_seconds() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

// Label values escape backslash, quote and newline per the exposition format.
std::string escape_label(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        if (c == '\\') out += "\\\\";
        else if (c == '"') out += "\\\"";
        else if (c == '\n') out += "\\n";
        else out += c;
    }
    return out;
}

std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace

ReplayServer::ReplayServer(SeriesFrame frame, double speedup, std::function<double()> wall_clock)
    : frame_(std::move(frame)),
      speedup_(speedup),
      wall_clock_(wall_clock ? std::move(wall_clock) : steady_seconds) {
    if (frame_.rows() == 0 || frame_.cols() == 0) {
        throw ValidationError("replay: frame is empty");
    }
    if (!(speedup_ > 0.0)) throw ValidationError("replay: speedup must be positive");
    virtual_start_ = frame_.timestamps.front();
}

ReplayServer::~ReplayServer() {
    stop();
}

std::int64_t ReplayServer::virtual_now() const {
    const double elapsed = wall_clock_() - wall_start_;
    return virtual_start_ + static_cast<std::int64_t>(elapsed * speedup_);
}

std::string ReplayServer::render_metrics(std::int64_t virtual_time) const {
    std::string body;
    body += "# HELP slice_traffic Replayed per-slice traffic level.\n";
    body += "# TYPE slice_traffic gauge\n";
    // Latest row with timestamp <= virtual_time; none before the first row.
    auto it = std::upper_bound(frame_.timestamps.begin(), frame_.timestamps.end(), virtual_time);
    if (it != frame_.timestamps.begin()) {
        const auto row = static_cast<std::size_t>((it - frame_.timestamps.begin()) - 1);
        for (std::size_t c = 0; c < frame_.cols(); ++c) {
            body += "slice_traffic{slice=\"" + escape_label(frame_.columns[c]) + "\"} " +
                    format_double(frame_.values.at(row, c)) + "\n";
        }
    }
    body += "# HELP slice_replay_virtual_time Current replay position, seconds since epoch.\n";
    body += "# TYPE slice_replay_virtual_time gauge\n";
    body += "slice_replay_virtual_time " + format_double(static_cast<double>(virtual_time)) + "\n";
    return body;
}

void ReplayServer::start(const std::string& bind_address, int port, bool defer_ready) {
    if (impl_) throw Error("replay: server already started");
    impl_ = std::make_unique<ReplayServerImpl>();
    auto& server = impl_->server;

    server.Get("/metrics", [this](const httplib::Request&, httplib::Response& res) {
        if (!ready_.load()) {
            res.status = 503;
            res.set_content("starting\n", "text/plain");
            return;
        }
        res.set_content(render_metrics(virtual_now()),
                        "text/plain; version=0.0.4; charset=utf-8");
    });
    server.Get("/health", [](const httplib::Request&, httplib::Response& res) {
        res.set_content("ok\n", "text/plain");
    });

    // Claim the port exclusively: the library's defaults include SO_REUSEPORT,
    // under which a second bind to an occupied port silently succeeds.
    server.set_socket_options([](socket_t sock) {
        const int yes = 1;
        setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char*>(&yes),
                   sizeof(yes));
    });

    if (port == 0) {
        port_ = server.bind_to_any_port(bind_address);
        if (port_ < 0) throw Error("replay: cannot bind to '" + bind_address + "'");
    } else {
        if (!server.bind_to_port(bind_address, port)) {
            throw Error("replay: cannot bind to '" + bind_address + ":" + std::to_string(port) +
                        "' (port in use?)");
        }
        port_ = port;
    }

    worker_ = std::thread([&server] { server.listen_after_bind(); });
    server.wait_until_ready();

    wall_start_ = wall_clock_();
    if (!defer_ready) ready_.store(true);
}

void ReplayServer::mark_ready() {
    wall_start_ = wall_clock_();
    ready_.store(true);
}

bool ReplayServer::running() const {
    return impl_ && impl_->server.is_running();
}

void ReplayServer::stop() {
    if (!impl_) return;
    impl_->server.stop();
    if (worker_.joinable()) worker_.join();
    impl_.reset();
    ready_.store(false);
}

}  // namespace slicecast
