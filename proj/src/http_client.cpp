// Copyright 2026 The mecrag Authors.
//
//    Licensed under the Apache License, Version 2.0 (the "License");
//    you may not use this file except in compliance with the License.
//    You may obtain a copy of the License at
//
//        http://www.apache.org/licenses/LICENSE-2.0
//
//    Unless required by applicable law or agreed to in writing, software
//    distributed under the License is distributed on an "AS IS" BASIS,
//    WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//    See the License for the specific language governing permissions and
//    limitations under the License.

#include "mecrag/http_client.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <thread>

#include <fmt/format.h>
#include <httplib.h>

namespace mecrag::net {

namespace {

struct SplitUrl {
    std::string scheme_host_port;
    std::string path_prefix;
};

SplitUrl split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw BackendError(ErrorKind::Transport, fmt::format("endpoint '{}' has no scheme", url));
    }
    const auto path_start = url.find('/', scheme_end + 3);
    SplitUrl out;
    out.scheme_host_port = url.substr(0, path_start);
    if (path_start != std::string::npos) out.path_prefix = url.substr(path_start);
    while (!out.path_prefix.empty() && out.path_prefix.back() == '/') out.path_prefix.pop_back();
    return out;
}

bool retryable_status(int status) { return status == 429 || status >= 500; }

}  // namespace

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Transport: return "transport";
        case ErrorKind::Timeout: return "timeout";
        case ErrorKind::HttpStatus: return "http-status";
        case ErrorKind::InvalidResponse: return "invalid-response";
    }
    return "?";
}

BackendError::BackendError(ErrorKind kind, std::string message, int status, int attempts)
    : std::runtime_error(std::move(message)), kind_(kind), status_(status), attempts_(attempts) {}

RequestGate::RequestGate(std::size_t limit) : limit_(std::max<std::size_t>(limit, 1)) {}

void RequestGate::acquire() {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [&] { return in_flight_ < limit_; });
    ++in_flight_;
    peak_ = std::max(peak_, in_flight_);
}

void RequestGate::release() {
    {
        std::lock_guard lock(mutex_);
        --in_flight_;
    }
    cv_.notify_one();
}

std::size_t RequestGate::in_flight() const {
    std::lock_guard lock(mutex_);
    return in_flight_;
}

std::size_t RequestGate::peak() const {
    std::lock_guard lock(mutex_);
    return peak_;
}

nlohmann::json post_json(const Endpoint& endpoint, const std::string& path, const nlohmann::json& body) {
    const SplitUrl url = split_url(endpoint.base_url);
    const std::string full_path = url.path_prefix + path;
    const std::string payload = body.dump();

    const auto timeout_us = static_cast<long>(std::llround(endpoint.timeout_s * 1e6));
    const time_t sec = timeout_us / 1000000;
    const time_t usec = timeout_us % 1000000;

    httplib::Headers headers;
    if (!endpoint.api_key.empty()) headers.emplace("Authorization", "Bearer " + endpoint.api_key);

    const int attempts_allowed = std::max(0, endpoint.max_retries) + 1;
    auto backoff = endpoint.initial_backoff;
    for (int attempt = 1;; ++attempt) {
        std::optional<BackendError> failure;
        try {
            httplib::Client client(url.scheme_host_port);
            client.set_connection_timeout(sec, usec);
            client.set_read_timeout(sec, usec);
            client.set_write_timeout(sec, usec);

            const auto started = std::chrono::steady_clock::now();
            auto res = client.Post(full_path, headers, payload, "application/json");
            const double elapsed =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

            if (!res) {
                const auto err = res.error();
                const bool timed_out = err == httplib::Error::ConnectionTimeout ||
                                       (err == httplib::Error::Read && elapsed >= endpoint.timeout_s);
                failure.emplace(timed_out ? ErrorKind::Timeout : ErrorKind::Transport,
                                fmt::format("POST {}: {}", full_path, httplib::to_string(err)), 0, attempt);
            } else if (res->status < 200 || res->status >= 300) {
                BackendError e(ErrorKind::HttpStatus, fmt::format("POST {}: HTTP {}", full_path, res->status),
                               res->status, attempt);
                if (!retryable_status(res->status)) throw e;
                failure.emplace(std::move(e));
            } else {
                auto parsed = nlohmann::json::parse(res->body, nullptr, false);
                if (parsed.is_discarded()) {
                    throw BackendError(ErrorKind::InvalidResponse,
                                       fmt::format("POST {}: reply is not JSON", full_path), res->status, attempt);
                }
                return parsed;
            }
        } catch (const BackendError&) {
            throw;
        } catch (const std::exception& e) {
            failure.emplace(ErrorKind::Transport, fmt::format("POST {}: {}", full_path, e.what()), 0, attempt);
        }

        if (attempt >= attempts_allowed) throw *failure;
        std::this_thread::sleep_for(backoff);
        backoff *= 2;
    }
}

}  // namespace mecrag::net
