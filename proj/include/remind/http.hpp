#pragma once

#include <chrono>
#include <cstdlib>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "remind/encoder.hpp"
#include "remind/error.hpp"
#include "remind/oracle.hpp"

namespace remind {

namespace detail {

struct SplitUrl {
    std::string base;  // scheme://host[:port]
    std::string path;  // /path, "/" if absent
};

inline SplitUrl split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos)
        raise(ErrorKind::Config, "URL must include a scheme: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

inline std::string auth_header_from_env(const std::string& env_name) {
    if (env_name.empty()) return "";
    const char* token = std::getenv(env_name.c_str());
    if (!token || !*token)
        raise(ErrorKind::Config, "auth environment variable '" + env_name + "' is not set");
    return std::string("Bearer ") + token;
}

// POST with retry on transport failures and 5xx. 4xx responses are final.
inline std::string post_json(const std::string& url, const std::string& body,
                             const std::string& auth_header,
                             const std::vector<double>& backoff_seconds, int timeout_seconds) {
    const auto parts = split_url(url);
    std::string last_error;
    const size_t attempts = backoff_seconds.size() + 1;
    for (size_t attempt = 0; attempt < attempts; ++attempt) {
        if (attempt > 0) {
            const auto delay = std::chrono::duration<double>(backoff_seconds[attempt - 1]);
            std::this_thread::sleep_for(
                std::chrono::duration_cast<std::chrono::milliseconds>(delay));
        }
        httplib::Client client(parts.base);
        client.set_connection_timeout(timeout_seconds, 0);
        client.set_read_timeout(timeout_seconds, 0);
        httplib::Headers headers;
        if (!auth_header.empty()) headers.emplace("Authorization", auth_header);
        auto res = client.Post(parts.path, headers, body, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status >= 200 && res->status < 300) return res->body;
        if (res->status >= 500) {
            last_error = "server returned " + std::to_string(res->status);
            continue;
        }
        raise(ErrorKind::Oracle, url + " returned " + std::to_string(res->status) + ": " +
                                     res->body.substr(0, 200));
    }
    raise(ErrorKind::Oracle, url + " unreachable after " + std::to_string(attempts) +
                                 " attempts (" + last_error + ")");
}

}  // namespace detail

// Client for completions endpoints that echo per-token logprobs.
class HttpOracle final : public Oracle {
public:
    struct Options {
        std::string url;
        std::string model;
        std::string identity;  // defaults to "<url>|<model>"
        std::string auth_env;  // name of env var holding the bearer token
        std::vector<double> backoff_seconds = {0.5, 2.0, 8.0};
        int timeout_seconds = 120;
    };

    explicit HttpOracle(Options opts) : opts_(std::move(opts)) {
        if (opts_.url.empty()) raise(ErrorKind::Config, "HTTP oracle requires a URL");
        if (opts_.model.empty()) raise(ErrorKind::Config, "HTTP oracle requires a model name");
        if (opts_.identity.empty()) opts_.identity = opts_.url + "|" + opts_.model;
        auth_header_ = detail::auth_header_from_env(opts_.auth_env);
    }

    std::string identity() const override { return opts_.identity; }

    // The documented completions convention exposes echoed logprobs and
    // generation but no full-vocabulary statistics.
    OracleCapabilities capabilities() const override { return {true, false, true}; }

    LossProfile score_text(const ScoreRequest& req) override {
        nlohmann::json body{{"model", opts_.model},
                            {"prompt", req.text},
                            {"max_tokens", 0},
                            {"echo", true},
                            {"logprobs", 1}};
        const auto response = call(body.dump());
        const auto& logprobs = choice(response, "logprobs");
        auto it = logprobs.find("token_logprobs");
        if (it == logprobs.end() || !it->is_array())
            raise(ErrorKind::Oracle, opts_.url + ": response lacks logprobs.token_logprobs");
        std::vector<double> nlls;
        nlls.reserve(it->size());
        for (size_t i = 0; i < it->size(); ++i) {
            const auto& v = (*it)[i];
            if (v.is_null()) {
                if (i == 0) continue;  // first token has no conditioning context
                raise(ErrorKind::Oracle, opts_.url + ": null logprob at position " +
                                             std::to_string(i));
            }
            nlls.push_back(-v.get<double>());
        }
        if (nlls.empty())
            raise(ErrorKind::Oracle, opts_.url + ": endpoint returned no usable logprobs");
        return LossProfile::from_nlls(std::move(nlls));
    }

    std::string generate(const std::string& prompt, int max_new_tokens,
                         const std::string& = {}) override {
        if (max_new_tokens <= 0) raise(ErrorKind::Parameter, "max_new_tokens must be positive");
        nlohmann::json body{{"model", opts_.model},
                            {"prompt", prompt},
                            {"max_tokens", max_new_tokens},
                            {"temperature", 0}};
        const auto response = call(body.dump());
        const auto& text = choice(response, "text");
        if (!text.is_string()) raise(ErrorKind::Oracle, opts_.url + ": response lacks choice text");
        return text.get<std::string>();
    }

private:
    nlohmann::json call(const std::string& body) const {
        const std::string raw = detail::post_json(opts_.url, body, auth_header_,
                                                  opts_.backoff_seconds, opts_.timeout_seconds);
        nlohmann::json response = nlohmann::json::parse(raw, nullptr, false);
        if (response.is_discarded())
            raise(ErrorKind::Oracle, opts_.url + ": response is not valid JSON");
        return response;
    }

    static const nlohmann::json& choice(const nlohmann::json& response, const char* field) {
        auto choices = response.find("choices");
        if (choices == response.end() || !choices->is_array() || choices->empty())
            raise(ErrorKind::Oracle, "response has no choices array");
        const auto& first = (*choices)[0];
        auto it = first.find(field);
        if (it == first.end())
            raise(ErrorKind::Oracle, std::string("response choice lacks field '") + field + "'");
        return *it;
    }

    Options opts_;
    std::string auth_header_;
};

// Encoder backed by a remote embeddings endpoint. The vector is used
// verbatim; the dimension is latched on the first call and enforced after.
class RemoteEncoder final : public TextEncoder {
public:
    struct Options {
        std::string url;
        std::string model;
        std::string auth_env;
        std::vector<double> backoff_seconds = {0.5, 2.0, 8.0};
        int timeout_seconds = 120;
    };

    explicit RemoteEncoder(Options opts) : opts_(std::move(opts)) {
        if (opts_.url.empty()) raise(ErrorKind::Config, "remote encoder requires a URL");
        auth_header_ = detail::auth_header_from_env(opts_.auth_env);
    }

    int dim() const override {
        std::lock_guard<std::mutex> lock(mutex_);
        if (dim_ == 0) raise(ErrorKind::Capability, "remote encoder dimension unknown before first call");
        return dim_;
    }

    std::vector<double> encode(const std::string& text) const override {
        nlohmann::json body{{"model", opts_.model}, {"input", text}};
        const std::string raw = detail::post_json(opts_.url, body.dump(), auth_header_,
                                                  opts_.backoff_seconds, opts_.timeout_seconds);
        nlohmann::json response = nlohmann::json::parse(raw, nullptr, false);
        if (response.is_discarded())
            raise(ErrorKind::Oracle, opts_.url + ": response is not valid JSON");
        auto data = response.find("data");
        if (data == response.end() || !data->is_array() || data->empty())
            raise(ErrorKind::Oracle, opts_.url + ": response has no data array");
        auto emb = (*data)[0].find("embedding");
        if (emb == (*data)[0].end() || !emb->is_array())
            raise(ErrorKind::Oracle, opts_.url + ": response lacks data[0].embedding");
        auto vec = emb->get<std::vector<double>>();
        if (vec.empty()) raise(ErrorKind::Oracle, opts_.url + ": empty embedding vector");
        std::lock_guard<std::mutex> lock(mutex_);
        if (dim_ == 0) dim_ = static_cast<int>(vec.size());
        else if (static_cast<int>(vec.size()) != dim_)
            raise(ErrorKind::Oracle, opts_.url + ": embedding dimension changed between calls");
        return vec;
    }

private:
    Options opts_;
    std::string auth_header_;
    mutable std::mutex mutex_;
    mutable int dim_ = 0;
};

}  // namespace remind
