#include "judgebias/http.hpp"

#include <chrono>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

namespace judgebias::http {

using json = nlohmann::json;

namespace {

std::string bearer_token(const EndpointConfig& config) {
    if (config.api_key_env.empty()) return {};
    const char* value = std::getenv(config.api_key_env.c_str());
    return value ? std::string(value) : std::string{};
}

httplib::Headers make_headers(const EndpointConfig& config) {
    httplib::Headers headers{{"Content-Type", "application/json"}};
    std::string token = bearer_token(config);
    if (!token.empty()) headers.emplace("Authorization", "Bearer " + token);
    return headers;
}

std::unique_ptr<httplib::Client> make_client(const EndpointConfig& config) {
    auto client = std::make_unique<httplib::Client>(config.base_url);
    client->set_connection_timeout(config.timeout_sec);
    client->set_read_timeout(config.timeout_sec);
    return client;
}

// POSTs with exponential backoff; returns the body of the first 200 reply.
std::string post_with_retries(httplib::Client& client, const EndpointConfig& config,
                              const std::string& path, const std::string& body) {
    std::string last_error = "no attempt made";
    for (int attempt = 0; attempt < std::max(1, config.max_attempts); ++attempt) {
        if (attempt > 0) {
            auto delay = config.backoff_base_sec * static_cast<double>(1 << (attempt - 1));
            std::this_thread::sleep_for(std::chrono::duration<double>(delay));
        }
        auto res = client.Post(path, make_headers(config), body, "application/json");
        if (res && res->status == 200) return res->body;
        if (res) {
            last_error = "HTTP " + std::to_string(res->status) + " from " + path;
        } else {
            last_error = "transport failure reaching " + config.base_url + path;
        }
    }
    throw TransportError(last_error + " after " + std::to_string(config.max_attempts) +
                         " attempts");
}

}  // namespace

struct ChatClient::Impl {
    std::unique_ptr<httplib::Client> client;
};

ChatClient::ChatClient(EndpointConfig config)
    : config_(std::move(config)), impl_(std::make_unique<Impl>()) {
    impl_->client = make_client(config_);
}

ChatClient::~ChatClient() = default;

std::string ChatClient::complete(const std::string& system_prompt,
                                 const std::string& user_prompt) const {
    json body{{"model", config_.model},
              {"temperature", config_.temperature},
              {"messages",
               json::array({json{{"role", "system"}, {"content", system_prompt}},
                            json{{"role", "user"}, {"content", user_prompt}}})}};
    std::string reply = post_with_retries(*impl_->client, config_, config_.path, body.dump());
    try {
        json parsed = json::parse(reply);
        return parsed.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
        throw TransportError(std::string("malformed chat completion body: ") + e.what());
    }
}

struct ScoreClient::Impl {
    std::unique_ptr<httplib::Client> client;
};

ScoreClient::ScoreClient(EndpointConfig config)
    : config_(std::move(config)), impl_(std::make_unique<Impl>()) {
    if (config_.path == "/v1/chat/completions") config_.path = "/score";
    impl_->client = make_client(config_);
}

ScoreClient::~ScoreClient() = default;

double ScoreClient::score(const std::string& instruction, const std::string& response) const {
    json body{{"instruction", instruction}, {"response", response}};
    std::string reply = post_with_retries(*impl_->client, config_, config_.path, body.dump());
    try {
        return json::parse(reply).at("score").get<double>();
    } catch (const json::exception& e) {
        throw TransportError(std::string("malformed score body: ") + e.what());
    }
}

}  // namespace judgebias::http
