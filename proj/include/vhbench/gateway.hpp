// Copyright (C) 2026 The vhbench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "vhbench/image_store.hpp"
#include "vhbench/json.hpp"
#include "vhbench/model.hpp"

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace vhbench::gateway {

enum class EndpointKind { chat_vision, text_to_image };
std::string_view to_string(EndpointKind kind);
EndpointKind parse_endpoint_kind(std::string_view text);

struct RetryPolicy {
    int max_attempts = 3;
    int backoff_base_ms = 500;
};

struct EndpointConfig {
    std::string name;
    EndpointKind kind = EndpointKind::chat_vision;
    std::string base_url;
    std::string model;                // sent on the wire; defaults to name
    std::string auth_token_env_var;   // empty: no Authorization header
    int max_concurrency = 4;
    int timeout_ms = 120000;
    RetryPolicy retry;

    void validate() const;
};

Json to_json(const EndpointConfig& cfg);
EndpointConfig endpoint_from_json(const Json& j);

/// Reads {"endpoints": [...]} from a JSON file. Tokens are never read from it.
std::vector<EndpointConfig> load_endpoints(const std::filesystem::path& path);

enum class GatewayMode { live, record, replay };
std::string_view to_string(GatewayMode mode);
GatewayMode parse_gateway_mode(std::string_view text);

/// Digest identifying a request: endpoint name, kind, prompt text, attached
/// image content hashes and a sample index that separates deliberate repeats
/// of the same prompt.
std::string request_hash(const std::string& endpoint, EndpointKind kind, const std::string& prompt,
                         const std::vector<std::string>& image_hashes, int sample_index);

struct Exchange {
    std::string request_hash;
    std::string endpoint;
    EndpointKind kind = EndpointKind::chat_vision;
    std::string prompt;
    std::vector<std::string> image_hashes;
    int sample_index = 0;
    std::string response_text;               // chat reply
    std::string image_blob;                  // sha256 of image bytes under blobs/
    std::optional<std::string> revised_prompt;
    long long latency_ms = 0;
    std::string timestamp;                   // ISO-8601 UTC
};

Json to_json(const Exchange& ex);
Exchange exchange_from_json(const Json& j);

/// Directory of <request_hash>.json files plus blobs/<sha256> for image bytes.
/// Writes are atomic; an existing exchange is never overwritten.
class ExchangeStore {
public:
    explicit ExchangeStore(std::filesystem::path dir);
    std::optional<Exchange> find(const std::string& request_hash) const;
    void put(const Exchange& ex, std::string_view image_bytes = {});
    std::string read_blob(const std::string& sha256) const;
    const std::filesystem::path& dir() const { return dir_; }

private:
    std::filesystem::path dir_;
};

struct WireResponse {
    int status = 0;
    std::string body;
};

/// Sends one POST. Implementations throw on connection failure.
class Transport {
public:
    virtual ~Transport() = default;
    virtual WireResponse post(const EndpointConfig& endpoint, const std::string& path, const std::string& body,
                              const std::string& bearer_token) = 0;
};

/// Plain HTTP(S) transport over cpp-httplib.
class HttpTransport : public Transport {
public:
    WireResponse post(const EndpointConfig& endpoint, const std::string& path, const std::string& body,
                      const std::string& bearer_token) override;
};

struct GatewayOptions {
    GatewayMode mode = GatewayMode::live;
    std::optional<std::filesystem::path> exchange_dir;  // required for record and replay
    bool cache = true;
    std::function<void(std::chrono::milliseconds)> sleep;  // default: std::this_thread::sleep_for
};

struct GatewayStats {
    std::size_t network_calls = 0;  // POSTs attempted, including retries
    std::size_t cache_hits = 0;
    std::size_t replayed = 0;
};

class Gateway {
public:
    Gateway(std::vector<EndpointConfig> endpoints, GatewayOptions options, std::shared_ptr<Transport> transport,
            ImageStore& images);
    ~Gateway();

    const EndpointConfig& endpoint(const std::string& name) const;
    bool has_endpoint(const std::string& name) const;
    GatewayMode mode() const { return options_.mode; }
    ImageStore& images() { return images_; }

    /// Chat-with-image call. Images are sent as attachments fetched from the
    /// image store by content hash.
    std::string chat(const std::string& endpoint, const std::string& prompt, const std::vector<ImageRecord>& images,
                     int sample_index = 0);

    /// Text-to-image call. Stores the bytes and returns a generated ImageRecord.
    ImageRecord generate_image(const std::string& endpoint, const std::string& prompt, const std::string& prompt_id,
                               int sample_index = 0);

    GatewayStats stats() const;

private:
    struct Result {
        std::string text;
        std::string image_bytes;
        std::optional<std::string> revised_prompt;
    };
    class Semaphore;

    Result call(const EndpointConfig& ep, const std::string& prompt, const std::vector<ImageRecord>& images,
                int sample_index);
    Result perform(const EndpointConfig& ep, const std::string& prompt, const std::vector<ImageRecord>& images);

    std::map<std::string, EndpointConfig> endpoints_;
    GatewayOptions options_;
    std::shared_ptr<Transport> transport_;
    ImageStore& images_;
    std::optional<ExchangeStore> exchanges_;
    std::map<std::string, std::unique_ptr<Semaphore>> semaphores_;

    mutable std::mutex mu_;
    std::map<std::string, std::shared_future<Result>> inflight_;
    std::map<std::string, Result> memo_;
    std::atomic<std::size_t> network_calls_{0};
    std::atomic<std::size_t> cache_hits_{0};
    std::atomic<std::size_t> replayed_{0};
};

}  // namespace vhbench::gateway
