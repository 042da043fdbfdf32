// Copyright (C) 2026 The vhbench Authors
// SPDX-License-Identifier: Apache-2.0

// Deterministic stand-in for the chat and text-to-image endpoints. Used to
// record exchange fixtures; never needed for replay.
//
//   POST /chat    {model, prompt, images}  -> {text}
//   POST /images  {model, prompt}          -> {image, revised_prompt}
//
// Chat replies, first match wins:
//   1. a rules file entry {"contains": ..., "reply": ..., "model"?: ...}
//   2. "Return exactly N prompts" -> N numbered prompt lines
//   3. a prompt ending in "?" -> "Yes." or "No, it is not." chosen by hash
//   4. anything else -> a short description naming the prompt hash
// Images are 16x16 PNGs whose color comes from the prompt and how many times
// that prompt has been seen.

#include "vhbench/hashing.hpp"
#include "vhbench/json.hpp"

#include <CLI11.hpp>
#include <httplib.h>
#include <zlib.h>

#include <csignal>
#include <iostream>
#include <map>
#include <mutex>
#include <regex>

using vhbench::Json;

namespace {

httplib::Server* g_server = nullptr;
extern "C" void on_signal(int) {
    if (g_server) g_server->stop();
}

void put_be32(std::string& out, std::uint32_t v) {
    for (int s = 24; s >= 0; s -= 8) out += static_cast<char>((v >> s) & 0xFF);
}

void put_chunk(std::string& png, const char* type, const std::string& data) {
    put_be32(png, static_cast<std::uint32_t>(data.size()));
    std::string body = std::string(type, 4) + data;
    png += body;
    put_be32(png, static_cast<std::uint32_t>(
                      crc32(0L, reinterpret_cast<const Bytef*>(body.data()), static_cast<uInt>(body.size()))));
}

std::string make_png(const std::string& seed_hex) {
    const int w = 16, h = 16;
    auto byte_at = [&](int i) { return static_cast<unsigned char>(std::stoi(seed_hex.substr(2 * i, 2), nullptr, 16)); };
    std::string raw;
    for (int y = 0; y < h; ++y) {
        raw += '\0';
        for (int x = 0; x < w; ++x) {
            const bool mark = (x + y) % 8 == 0;
            for (int c = 0; c < 3; ++c) raw += static_cast<char>(mark ? 255 - byte_at(c) : byte_at(c));
        }
    }
    uLongf len = compressBound(static_cast<uLong>(raw.size()));
    std::string z(len, '\0');
    compress2(reinterpret_cast<Bytef*>(z.data()), &len, reinterpret_cast<const Bytef*>(raw.data()),
              static_cast<uLong>(raw.size()), 9);
    z.resize(len);

    std::string png = "\x89PNG\r\n\x1a\n";
    std::string ihdr;
    put_be32(ihdr, w);
    put_be32(ihdr, h);
    ihdr += std::string("\x08\x02\x00\x00\x00", 5);
    put_chunk(png, "IHDR", ihdr);
    put_chunk(png, "IDAT", z);
    put_chunk(png, "IEND", "");
    return png;
}

struct Rule {
    std::string contains;
    std::string model;
    std::string reply;
};

std::string chat_reply(const std::vector<Rule>& rules, const std::string& model, const std::string& prompt,
                       const Json& images) {
    for (const auto& r : rules) {
        if (!r.model.empty() && r.model != model) continue;
        if (prompt.find(r.contains) != std::string::npos) return r.reply;
    }
    static const std::regex want(R"(Return exactly (\d+) prompts)");
    std::smatch m;
    if (std::regex_search(prompt, m, want)) {
        const int n = std::stoi(m[1].str());
        const auto h = vhbench::sha256_hex(prompt);
        std::string out;
        for (int i = 1; i <= n; ++i) out += std::to_string(i) + ". scene variant " + h.substr(i % 50, 10) + "\n";
        return out;
    }
    std::string key = model + "\n" + prompt;
    for (const auto& im : images) key += "\n" + im.value("sha256", std::string());
    const auto h = vhbench::sha256_hex(key);
    auto end = prompt.find_last_not_of(" \n");
    if (end != std::string::npos && prompt[end] == '?') {
        return (std::stoi(h.substr(0, 2), nullptr, 16) % 2 == 0) ? "Yes." : "No, it is not.";
    }
    return "The picture shows item " + h.substr(0, 8) + ".";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Deterministic fake model endpoint", "fake_endpoint"};
    std::string host = "127.0.0.1", rules_file;
    int port = 0;
    app.add_option("--host", host)->capture_default_str();
    app.add_option("--port", port, "0 picks a free port")->capture_default_str();
    app.add_option("--rules", rules_file, "JSON array of chat reply rules");
    CLI11_PARSE(app, argc, argv);

    std::vector<Rule> rules;
    if (!rules_file.empty()) {
        for (const auto& r : vhbench::read_json_file(rules_file)) {
            rules.push_back({r.at("contains").get<std::string>(), r.value("model", std::string()),
                             r.at("reply").get<std::string>()});
        }
    }

    std::mutex mu;
    std::map<std::string, int> seen;
    httplib::Server server;
    server.Post(R"(.*/chat)", [&](const httplib::Request& req, httplib::Response& res) {
        const auto j = Json::parse(req.body);
        const auto text = chat_reply(rules, j.value("model", std::string()), j.value("prompt", std::string()),
                                     j.value("images", Json::array()));
        res.set_content(Json{{"text", text}}.dump(), "application/json");
    });
    server.Post(R"(.*/images)", [&](const httplib::Request& req, httplib::Response& res) {
        const auto j = Json::parse(req.body);
        const auto prompt = j.value("prompt", std::string());
        int n;
        {
            std::lock_guard lock(mu);
            n = seen[prompt]++;
        }
        const auto png = make_png(vhbench::sha256_hex(prompt + "#" + std::to_string(n)));
        res.set_content(Json{{"image", vhbench::base64_encode(png)}, {"revised_prompt", prompt}}.dump(),
                        "application/json");
    });

    const int bound = port == 0 ? server.bind_to_any_port(host) : (server.bind_to_port(host, port) ? port : -1);
    if (bound < 0) {
        std::cerr << "cannot bind " << host << ":" << port << "\n";
        return 1;
    }
    std::cout << Json{{"host", host}, {"port", bound}}.dump() << std::endl;
    g_server = &server;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    server.listen_after_bind();
    return 0;
}
