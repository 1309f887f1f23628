// HTTP adapters for remote judges, rewriters, and generators. Chat traffic
// goes to an OpenAI-compatible /v1/chat/completions endpoint; scalar scoring
// uses a one-shot POST {"instruction","response"} -> {"score"} contract.
#pragma once

#include <memory>
#include <stdexcept>
#include <string>

namespace judgebias::http {

struct TransportError : std::runtime_error {
    explicit TransportError(const std::string& what) : std::runtime_error(what) {}
};

struct EndpointConfig {
    std::string base_url;       // e.g. "http://localhost:8080"
    std::string path = "/v1/chat/completions";
    std::string model;
    std::string api_key_env;    // name of the env var holding the bearer token
    int max_attempts = 3;       // exponential backoff between attempts
    double backoff_base_sec = 0.5;
    int timeout_sec = 60;
    double temperature = 0.0;
};

class ChatClient {
public:
    explicit ChatClient(EndpointConfig config);
    ~ChatClient();

    // Returns choices[0].message.content. Throws TransportError after the
    // retry budget is exhausted or on an unparseable response body.
    std::string complete(const std::string& system_prompt, const std::string& user_prompt) const;

    const EndpointConfig& config() const { return config_; }

private:
    EndpointConfig config_;
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

class ScoreClient {
public:
    explicit ScoreClient(EndpointConfig config);  // path defaults to "/score"
    ~ScoreClient();

    double score(const std::string& instruction, const std::string& response) const;

private:
    EndpointConfig config_;
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace judgebias::http
