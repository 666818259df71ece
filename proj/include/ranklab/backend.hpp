#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace ranklab {

struct TextRequest {
    std::string system;
    std::string user;
    std::size_t max_tokens = 1024;
};

struct TextResponse {
    std::string text;
    std::size_t prompt_tokens = 0;
    std::size_t completion_tokens = 0;
};

struct BackendConfig {
    std::string kind = "mock";  // mock | live
    std::string base_url;
    std::string model_name;
    std::string credential_env;
    int max_in_flight = 4;
    int timeout_seconds = 30;
    int retries = 0;  // a single retry at most is supported
};

class BackendError : public std::runtime_error {
public:
    enum class Kind { Config, Transport, Status, Malformed };

    BackendError(Kind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

class TextBackend {
public:
    virtual ~TextBackend() = default;
    virtual TextResponse complete(const TextRequest& req) = 0;
};

// Deterministic backend for reproducible experiments. It recognizes the
// bundled prompt templates, extracts the query and the current draft version,
// and emits the strategy template filled with the first (2 + version) query
// keywords. Token counts are whitespace-token counts of prompt and completion.
class MockBackend : public TextBackend {
public:
    TextResponse complete(const TextRequest& req) override;

    // Draft text builders, exposed so experiments can construct fixed drafts.
    static std::string reasoning_draft(const std::string& query, std::size_t version);
    static std::string review_draft(const std::string& query, std::size_t version);

    struct ParsedDraft {
        std::string query;
        std::size_t version = 0;
        bool is_review = false;
    };
    static ParsedDraft parse_draft(const std::string& draft);
};

// Single-shot chat-completion adapter: one JSON request per call, body text
// read from the first choice, token counts from the usage object. The
// credential is read from the configured environment variable; requests fail
// before any network activity when it is missing.
class HttpBackend : public TextBackend {
public:
    explicit HttpBackend(BackendConfig config);
    ~HttpBackend() override;

    TextResponse complete(const TextRequest& req) override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

std::unique_ptr<TextBackend> make_backend(const BackendConfig& config);

// Pure helpers behind the live adapter, unit-testable without a server.
std::string build_chat_request_body(const std::string& model, const TextRequest& req);
TextResponse parse_chat_response_body(const std::string& body);

}  // namespace ranklab
