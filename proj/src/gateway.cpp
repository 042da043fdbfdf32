// Copyright (C) 2026 The vhbench Authors
// SPDX-License-Identifier: Apache-2.0

#include <httplib.h>

#include "vhbench/gateway.hpp"

#include "vhbench/error.hpp"
#include "vhbench/fsutil.hpp"
#include "vhbench/hashing.hpp"

#include <fmt/chrono.h>
#include <fmt/format.h>

#include <cstdlib>
#include <thread>

namespace vhbench::gateway {

std::string_view to_string(EndpointKind kind) {
    return kind == EndpointKind::chat_vision ? "chat_vision" : "text_to_image";
}

EndpointKind parse_endpoint_kind(std::string_view text) {
    if (text == "chat_vision") return EndpointKind::chat_vision;
    if (text == "text_to_image") return EndpointKind::text_to_image;
    throw Error(ErrorCode::invalid_argument, "endpoint kind must be chat_vision or text_to_image", std::string(text));
}

std::string_view to_string(GatewayMode mode) {
    switch (mode) {
        case GatewayMode::live: return "live";
        case GatewayMode::record: return "record";
        case GatewayMode::replay: return "replay";
    }
    return "live";
}

GatewayMode parse_gateway_mode(std::string_view text) {
    if (text == "live") return GatewayMode::live;
    if (text == "record") return GatewayMode::record;
    if (text == "replay") return GatewayMode::replay;
    throw Error(ErrorCode::invalid_argument, "gateway mode must be live, record or replay", std::string(text));
}

void EndpointConfig::validate() const {
    if (name.empty()) throw Error(ErrorCode::invalid_argument, "endpoint needs a name");
    if (max_concurrency < 1) throw Error(ErrorCode::invalid_argument, "max_concurrency must be >= 1", name);
    if (retry.max_attempts < 1) throw Error(ErrorCode::invalid_argument, "retry.max_attempts must be >= 1", name);
    if (retry.backoff_base_ms < 0 || timeout_ms <= 0) {
        throw Error(ErrorCode::invalid_argument, "timeouts and backoff must be positive", name);
    }
}

Json to_json(const EndpointConfig& c) {
    Json j;
    j["name"] = c.name;
    j["kind"] = to_string(c.kind);
    j["base_url"] = c.base_url;
    j["model"] = c.model;
    j["auth_token_env_var"] = c.auth_token_env_var;
    j["max_concurrency"] = c.max_concurrency;
    j["timeout_ms"] = c.timeout_ms;
    j["retry"] = {{"max_attempts", c.retry.max_attempts}, {"backoff_base_ms", c.retry.backoff_base_ms}};
    return j;
}

EndpointConfig endpoint_from_json(const Json& j) {
    EndpointConfig c;
    c.name = require_string(j, "name");
    c.kind = parse_endpoint_kind(require_string(j, "kind"));
    c.base_url = optional_string(j, "base_url");
    c.model = optional_string(j, "model", c.name);
    if (j.contains("auth_token") || j.contains("token")) {
        throw Error(ErrorCode::schema_violation, "endpoint configs must not contain tokens; name an env var instead",
                    c.name);
    }
    c.auth_token_env_var = optional_string(j, "auth_token_env_var");
    c.max_concurrency = j.value("max_concurrency", c.max_concurrency);
    c.timeout_ms = j.value("timeout_ms", c.timeout_ms);
    if (j.contains("retry")) {
        c.retry.max_attempts = j["retry"].value("max_attempts", c.retry.max_attempts);
        c.retry.backoff_base_ms = j["retry"].value("backoff_base_ms", c.retry.backoff_base_ms);
    }
    c.validate();
    return c;
}

std::vector<EndpointConfig> load_endpoints(const std::filesystem::path& path) {
    auto j = read_json_file(path);
    std::vector<EndpointConfig> out;
    for (const auto& e : require(j, "endpoints")) out.push_back(endpoint_from_json(e));
    return out;
}

std::string request_hash(const std::string& endpoint, EndpointKind kind, const std::string& prompt,
                         const std::vector<std::string>& image_hashes, int sample_index) {
    Json j;
    j["endpoint"] = endpoint;
    j["kind"] = to_string(kind);
    j["prompt"] = prompt;
    j["images"] = image_hashes;
    j["sample"] = sample_index;
    return sha256_hex(j.dump());
}

Json to_json(const Exchange& ex) {
    Json j;
    j["request_hash"] = ex.request_hash;
    j["endpoint"] = ex.endpoint;
    j["kind"] = to_string(ex.kind);
    j["prompt"] = ex.prompt;
    j["image_hashes"] = ex.image_hashes;
    j["sample_index"] = ex.sample_index;
    Json r = Json::object();
    if (ex.kind == EndpointKind::chat_vision) {
        r["text"] = ex.response_text;
    } else {
        r["image_blob"] = ex.image_blob;
        if (ex.revised_prompt) r["revised_prompt"] = *ex.revised_prompt;
    }
    j["response"] = r;
    j["latency_ms"] = ex.latency_ms;
    j["timestamp"] = ex.timestamp;
    return j;
}

Exchange exchange_from_json(const Json& j) {
    Exchange ex;
    ex.request_hash = require_string(j, "request_hash");
    ex.endpoint = require_string(j, "endpoint");
    ex.kind = parse_endpoint_kind(require_string(j, "kind"));
    ex.prompt = require_string(j, "prompt");
    ex.image_hashes = j.value("image_hashes", std::vector<std::string>{});
    ex.sample_index = j.value("sample_index", 0);
    const auto& r = require(j, "response");
    if (ex.kind == EndpointKind::chat_vision) {
        ex.response_text = require_string(r, "text");
    } else {
        ex.image_blob = require_string(r, "image_blob");
        if (r.contains("revised_prompt")) ex.revised_prompt = r["revised_prompt"].get<std::string>();
    }
    ex.latency_ms = j.value("latency_ms", 0LL);
    ex.timestamp = optional_string(j, "timestamp");
    return ex;
}

ExchangeStore::ExchangeStore(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_ / "blobs");
}

std::optional<Exchange> ExchangeStore::find(const std::string& hash) const {
    auto p = dir_ / (hash + ".json");
    if (!std::filesystem::exists(p)) return std::nullopt;
    return exchange_from_json(read_json_file(p));
}

void ExchangeStore::put(const Exchange& ex, std::string_view image_bytes) {
    if (!image_bytes.empty()) {
        auto blob = dir_ / "blobs" / ex.image_blob;
        if (!std::filesystem::exists(blob)) atomic_write(blob, image_bytes);
    }
    auto p = dir_ / (ex.request_hash + ".json");
    if (!std::filesystem::exists(p)) write_json_file(p, to_json(ex));
}

std::string ExchangeStore::read_blob(const std::string& sha256) const {
    auto bytes = read_file(dir_ / "blobs" / sha256);
    if (sha256_hex(bytes) != sha256) {
        throw Error(ErrorCode::invalid_image_payload, "exchange blob does not match its hash", sha256);
    }
    return bytes;
}

WireResponse HttpTransport::post(const EndpointConfig& endpoint, const std::string& path, const std::string& body,
                                 const std::string& bearer_token) {
    const auto& url = endpoint.base_url;
    auto scheme_end = url.find("://");
    auto path_start = url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    std::string origin = path_start == std::string::npos ? url : url.substr(0, path_start);
    std::string prefix = path_start == std::string::npos ? "" : url.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();

    httplib::Client cli(origin);
    const auto timeout = std::chrono::milliseconds(endpoint.timeout_ms);
    cli.set_connection_timeout(timeout);
    cli.set_read_timeout(timeout);
    cli.set_write_timeout(timeout);
    httplib::Headers headers;
    if (!bearer_token.empty()) headers.emplace("Authorization", "Bearer " + bearer_token);
    auto res = cli.Post(prefix + path, headers, body, "application/json");
    if (!res) {
        throw Error(ErrorCode::transport_failure, "request to " + endpoint.name + " failed",
                    httplib::to_string(res.error()));
    }
    return {res->status, res->body};
}

class Gateway::Semaphore {
public:
    explicit Semaphore(int n) : free_(n) {}
    void acquire() {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [&] { return free_ > 0; });
        --free_;
    }
    void release() {
        {
            std::lock_guard lock(mu_);
            ++free_;
        }
        cv_.notify_one();
    }

private:
    std::mutex mu_;
    std::condition_variable cv_;
    int free_;
};

Gateway::Gateway(std::vector<EndpointConfig> endpoints, GatewayOptions options, std::shared_ptr<Transport> transport,
                 ImageStore& images)
    : options_(std::move(options)), transport_(std::move(transport)), images_(images) {
    for (auto& e : endpoints) {
        e.validate();
        semaphores_.emplace(e.name, std::make_unique<Semaphore>(e.max_concurrency));
        auto name = e.name;
        if (!endpoints_.emplace(name, std::move(e)).second) {
            throw Error(ErrorCode::duplicate_id, "endpoint listed twice", name);
        }
    }
    if (options_.mode != GatewayMode::live) {
        if (!options_.exchange_dir) {
            throw Error(ErrorCode::invalid_argument, "record and replay modes need an exchange directory");
        }
        exchanges_.emplace(*options_.exchange_dir);
    }
    if (!options_.sleep) options_.sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
    if (!transport_ && options_.mode != GatewayMode::replay) transport_ = std::make_shared<HttpTransport>();
}

Gateway::~Gateway() = default;

const EndpointConfig& Gateway::endpoint(const std::string& name) const {
    auto it = endpoints_.find(name);
    if (it == endpoints_.end()) throw Error(ErrorCode::not_found, "unknown endpoint", name);
    return it->second;
}

bool Gateway::has_endpoint(const std::string& name) const { return endpoints_.count(name) > 0; }

GatewayStats Gateway::stats() const { return {network_calls_.load(), cache_hits_.load(), replayed_.load()}; }

std::string Gateway::chat(const std::string& name, const std::string& prompt, const std::vector<ImageRecord>& images,
                          int sample_index) {
    const auto& ep = endpoint(name);
    if (ep.kind != EndpointKind::chat_vision) {
        throw Error(ErrorCode::invalid_argument, "endpoint is not a chat endpoint", name);
    }
    return call(ep, prompt, images, sample_index).text;
}

ImageRecord Gateway::generate_image(const std::string& name, const std::string& prompt, const std::string& prompt_id,
                                    int sample_index) {
    const auto& ep = endpoint(name);
    if (ep.kind != EndpointKind::text_to_image) {
        throw Error(ErrorCode::invalid_argument, "endpoint is not a text-to-image endpoint", name);
    }
    auto r = call(ep, prompt, {}, sample_index);
    return images_.put(r.image_bytes, ImageSource::generated, GeneratorMeta{ep.name, prompt_id, r.revised_prompt});
}

Gateway::Result Gateway::call(const EndpointConfig& ep, const std::string& prompt,
                              const std::vector<ImageRecord>& images, int sample_index) {
    std::vector<std::string> hashes;
    for (const auto& im : images) hashes.push_back(im.content_hash);
    const auto hash = request_hash(ep.name, ep.kind, prompt, hashes, sample_index);

    if (options_.mode == GatewayMode::replay) {
        auto ex = exchanges_->find(hash);
        if (!ex) throw Error(ErrorCode::replay_miss, "no recorded exchange for request to " + ep.name, hash);
        ++replayed_;
        Result r{ex->response_text, {}, ex->revised_prompt};
        if (ep.kind == EndpointKind::text_to_image) r.image_bytes = exchanges_->read_blob(ex->image_blob);
        return r;
    }

    std::promise<Result> promise;
    if (options_.cache) {
        std::unique_lock lock(mu_);
        if (auto it = memo_.find(hash); it != memo_.end()) {
            ++cache_hits_;
            return it->second;
        }
        if (auto it = inflight_.find(hash); it != inflight_.end()) {
            auto fut = it->second;
            lock.unlock();
            ++cache_hits_;
            return fut.get();
        }
        if (exchanges_) {
            if (auto ex = exchanges_->find(hash)) {
                Result r{ex->response_text, {}, ex->revised_prompt};
                if (ep.kind == EndpointKind::text_to_image) r.image_bytes = exchanges_->read_blob(ex->image_blob);
                memo_.emplace(hash, r);
                ++cache_hits_;
                return r;
            }
        }
        inflight_.emplace(hash, promise.get_future().share());
    }

    try {
        const auto t0 = std::chrono::steady_clock::now();
        Result r = perform(ep, prompt, images);
        const auto latency =
            std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0).count();
        if (ep.kind == EndpointKind::text_to_image && !sniff_image(r.image_bytes)) {
            throw Error(ErrorCode::invalid_image_payload, ep.name + " returned bytes that are not a complete image");
        }
        if (exchanges_) {
            Exchange ex;
            ex.request_hash = hash;
            ex.endpoint = ep.name;
            ex.kind = ep.kind;
            ex.prompt = prompt;
            ex.image_hashes = hashes;
            ex.sample_index = sample_index;
            ex.response_text = r.text;
            ex.revised_prompt = r.revised_prompt;
            ex.latency_ms = latency;
            ex.timestamp = fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(std::time(nullptr)));
            if (ep.kind == EndpointKind::text_to_image) ex.image_blob = sha256_hex(r.image_bytes);
            exchanges_->put(ex, r.image_bytes);
        }
        if (options_.cache) {
            std::lock_guard lock(mu_);
            memo_.emplace(hash, r);
            inflight_.erase(hash);
            promise.set_value(r);
        }
        return r;
    } catch (...) {
        if (options_.cache) {
            std::lock_guard lock(mu_);
            inflight_.erase(hash);
            promise.set_exception(std::current_exception());
        }
        throw;
    }
}

Gateway::Result Gateway::perform(const EndpointConfig& ep, const std::string& prompt,
                                 const std::vector<ImageRecord>& images) {
    std::string token;
    if (!ep.auth_token_env_var.empty()) {
        const char* v = std::getenv(ep.auth_token_env_var.c_str());
        if (!v || !*v) {
            throw Error(ErrorCode::invalid_argument, "environment variable for the endpoint token is not set",
                        ep.auth_token_env_var);
        }
        token = v;
    }

    Json body;
    body["model"] = ep.model.empty() ? ep.name : ep.model;
    body["prompt"] = prompt;
    std::string path = "/images";
    if (ep.kind == EndpointKind::chat_vision) {
        path = "/chat";
        body["images"] = Json::array();
        for (const auto& im : images) {
            auto bytes = images_.read_bytes(im.content_hash);
            auto ext = sniff_image(bytes).value_or("png");
            body["images"].push_back({{"sha256", im.content_hash},
                                      {"media_type", "image/" + std::string(ext == "jpg" ? "jpeg" : ext)},
                                      {"data", base64_encode(bytes)}});
        }
    }
    const std::string payload = body.dump();
    auto& sem = *semaphores_.at(ep.name);

    std::string last_failure;
    for (int attempt = 1; attempt <= ep.retry.max_attempts; ++attempt) {
        if (attempt > 1) {
            options_.sleep(std::chrono::milliseconds(static_cast<long long>(ep.retry.backoff_base_ms) << (attempt - 2)));
        }
        WireResponse res;
        sem.acquire();
        ++network_calls_;
        try {
            res = transport_->post(ep, path, payload, token);
        } catch (const std::exception& e) {
            sem.release();
            last_failure = e.what();
            continue;
        }
        sem.release();
        if (res.status == 200) {
            Json j;
            try {
                j = Json::parse(res.body);
            } catch (const std::exception& e) {
                throw Error(ErrorCode::transport_failure, ep.name + " returned a non-JSON body", e.what());
            }
            Result r;
            if (ep.kind == EndpointKind::chat_vision) {
                r.text = require_string(j, "text");
            } else {
                r.image_bytes = base64_decode(require_string(j, "image"));
                if (j.contains("revised_prompt") && j["revised_prompt"].is_string()) {
                    r.revised_prompt = j["revised_prompt"].get<std::string>();
                }
            }
            return r;
        }
        last_failure = "HTTP " + std::to_string(res.status);
        if (res.status != 429 && res.status < 500) break;
    }
    throw Error(ErrorCode::transport_failure, "request to " + ep.name + " failed", last_failure);
}

}  // namespace vhbench::gateway
