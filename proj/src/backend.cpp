#include "ranklab/backend.hpp"

#include <condition_variable>
#include <cstdlib>
#include <mutex>
#include <sstream>

#include "httplib.h"
#include "json.hpp"
#include "ranklab/text.hpp"

namespace ranklab {

namespace {

using json = nlohmann::json;

std::string joined_keywords(const std::string& query, std::size_t version) {
    auto tokens = distinct_tokens(query);
    std::size_t m = std::min(tokens.size(), 2 + version);
    std::string out;
    for (std::size_t i = 0; i < m; ++i) {
        if (i > 0) out += ' ';
        out += tokens[i];
    }
    return out;
}

std::string extract_between(const std::string& text, std::string_view begin,
                            std::string_view end) {
    std::size_t b = text.find(begin);
    if (b == std::string::npos) {
        throw BackendError(BackendError::Kind::Malformed,
                           "mock: missing marker '" + std::string(begin) + "'");
    }
    b += begin.size();
    std::size_t e = text.find(end, b);
    if (e == std::string::npos) {
        throw BackendError(BackendError::Kind::Malformed,
                           "mock: missing marker '" + std::string(end) + "'");
    }
    return text.substr(b, e - b);
}

TextResponse make_response(const TextRequest& req, std::string text) {
    TextResponse resp;
    resp.prompt_tokens =
        whitespace_token_count(req.system) + whitespace_token_count(req.user);
    resp.completion_tokens = whitespace_token_count(text);
    resp.text = std::move(text);
    return resp;
}

}  // namespace

std::string MockBackend::reasoning_draft(const std::string& query,
                                         std::size_t version) {
    std::string kws = joined_keywords(query, version);
    return "Understanding the search for " + query +
           "\nI'm exploring the options step by step, first weighing " + kws +
           " for this request.\nThis suggests the strongest match for this "
           "request. The design and build quality works well for the price. "
           "The build and padded grip held up well with daily use.";
}

std::string MockBackend::review_draft(const std::string& query,
                                      std::size_t version) {
    std::string kws = joined_keywords(query, version);
    return "After buying this " + query +
           " model with matte finish the build and padded grip held up well "
           "with daily use. This " + kws +
           " design and build quality works well for the price.";
}

MockBackend::ParsedDraft MockBackend::parse_draft(const std::string& draft) {
    ParsedDraft parsed;
    if (draft.rfind("Understanding the search for ", 0) == 0) {
        parsed.is_review = false;
        parsed.query = extract_between(draft, "Understanding the search for ", "\n");
        std::string kws =
            extract_between(draft, "first weighing ", " for this request");
        parsed.version = whitespace_token_count(kws) >= 2
                             ? whitespace_token_count(kws) - 2
                             : 0;
        return parsed;
    }
    if (draft.rfind("After buying this ", 0) == 0) {
        parsed.is_review = true;
        parsed.query =
            extract_between(draft, "After buying this ", " model with matte finish");
        std::string kws =
            extract_between(draft, "daily use. This ", " design and build quality");
        parsed.version = whitespace_token_count(kws) >= 2
                             ? whitespace_token_count(kws) - 2
                             : 0;
        return parsed;
    }
    throw BackendError(BackendError::Kind::Malformed, "mock: unknown draft shape");
}

TextResponse MockBackend::complete(const TextRequest& req) {
    if (req.user.empty()) {
        throw BackendError(BackendError::Kind::Malformed, "empty user prompt");
    }
    const std::string& text = req.user;
    if (text.find("Generate an initial draft in the style of a short customer "
                  "review") != std::string::npos) {
        std::string query = extract_between(text, "The user query is: *", "*");
        return make_response(req, review_draft(query, 0));
    }
    if (text.find("Generate an initial draft that highlights") !=
        std::string::npos) {
        std::string query = extract_between(text, "The user query is: *", "*");
        return make_response(req, reasoning_draft(query, 0));
    }
    if (text.find("Compare the current ranking with the target ranking") !=
        std::string::npos) {
        std::string draft = extract_between(text, "The current draft is: *", "*");
        ParsedDraft parsed = parse_draft(draft);
        std::string revised =
            parsed.is_review ? review_draft(parsed.query, parsed.version + 1)
                             : reasoning_draft(parsed.query, parsed.version + 1);
        return make_response(req, std::move(revised));
    }
    throw BackendError(BackendError::Kind::Malformed,
                       "mock: request does not match a known template");
}

std::string build_chat_request_body(const std::string& model,
                                    const TextRequest& req) {
    json body;
    body["model"] = model;
    body["messages"] = json::array();
    if (!req.system.empty()) {
        body["messages"].push_back({{"role", "system"}, {"content", req.system}});
    }
    body["messages"].push_back({{"role", "user"}, {"content", req.user}});
    body["max_tokens"] = req.max_tokens;
    return body.dump();
}

TextResponse parse_chat_response_body(const std::string& body) {
    json j;
    try {
        j = json::parse(body);
    } catch (const json::exception& e) {
        throw BackendError(BackendError::Kind::Malformed,
                           std::string("response is not JSON: ") + e.what());
    }
    try {
        TextResponse resp;
        resp.text = j.at("choices").at(0).at("message").at("content").get<std::string>();
        const auto& usage = j.at("usage");
        resp.prompt_tokens = usage.at("prompt_tokens").get<std::size_t>();
        resp.completion_tokens = usage.at("completion_tokens").get<std::size_t>();
        return resp;
    } catch (const json::exception& e) {
        throw BackendError(BackendError::Kind::Malformed,
                           std::string("unexpected response shape: ") + e.what());
    }
}

namespace {

// Runtime-sized counting semaphore for the in-flight request cap.
class RequestGate {
public:
    explicit RequestGate(int slots) : slots_(slots > 0 ? slots : 1) {}

    void acquire() {
        std::unique_lock lk(mu_);
        cv_.wait(lk, [&] { return slots_ > 0; });
        --slots_;
    }

    void release() {
        {
            std::lock_guard lk(mu_);
            ++slots_;
        }
        cv_.notify_one();
    }

private:
    std::mutex mu_;
    std::condition_variable cv_;
    int slots_;
};

struct GateGuard {
    explicit GateGuard(RequestGate& g) : gate(g) { gate.acquire(); }
    ~GateGuard() { gate.release(); }
    RequestGate& gate;
};

}  // namespace

struct HttpBackend::Impl {
    BackendConfig config;
    RequestGate gate;

    explicit Impl(BackendConfig cfg) : config(std::move(cfg)), gate(config.max_in_flight) {}
};

HttpBackend::HttpBackend(BackendConfig config)
    : impl_(std::make_unique<Impl>(std::move(config))) {
    if (impl_->config.base_url.empty()) {
        throw BackendError(BackendError::Kind::Config, "live backend needs base_url");
    }
    if (impl_->config.model_name.empty()) {
        throw BackendError(BackendError::Kind::Config, "live backend needs model_name");
    }
}

HttpBackend::~HttpBackend() = default;

TextResponse HttpBackend::complete(const TextRequest& req) {
    const BackendConfig& cfg = impl_->config;
    if (cfg.credential_env.empty()) {
        throw BackendError(BackendError::Kind::Config,
                           "no credential environment variable configured");
    }
    const char* credential = std::getenv(cfg.credential_env.c_str());
    if (credential == nullptr || *credential == '\0') {
        throw BackendError(BackendError::Kind::Config,
                           "credential variable " + cfg.credential_env + " is unset");
    }

    std::string body = build_chat_request_body(cfg.model_name, req);
    GateGuard guard(impl_->gate);

    httplib::Client client(cfg.base_url);
    client.set_connection_timeout(cfg.timeout_seconds, 0);
    client.set_read_timeout(cfg.timeout_seconds, 0);
    client.set_write_timeout(cfg.timeout_seconds, 0);
    httplib::Headers headers = {
        {"Authorization", std::string("Bearer ") + credential}};

    int attempts = 1 + (cfg.retries > 0 ? 1 : 0);
    std::string transport_error;
    for (int attempt = 0; attempt < attempts; ++attempt) {
        auto res = client.Post("/chat/completions", headers, body, "application/json");
        if (!res) {
            transport_error = httplib::to_string(res.error());
            continue;
        }
        if (res->status < 200 || res->status >= 300) {
            throw BackendError(BackendError::Kind::Status,
                               "backend returned status " +
                                   std::to_string(res->status) + ": " +
                                   res->body.substr(0, 200));
        }
        return parse_chat_response_body(res->body);
    }
    throw BackendError(BackendError::Kind::Transport,
                       "transport failure: " + transport_error);
}

std::unique_ptr<TextBackend> make_backend(const BackendConfig& config) {
    if (config.kind == "mock") return std::make_unique<MockBackend>();
    if (config.kind == "live") return std::make_unique<HttpBackend>(config);
    throw BackendError(BackendError::Kind::Config,
                       "unknown backend kind: " + config.kind);
}

}  // namespace ranklab
