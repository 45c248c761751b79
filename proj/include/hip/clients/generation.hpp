#pragma once

#include <memory>
#include <string>
#include <variant>

#include <json.hpp>

#include "hip/clients/transport.hpp"
#include "hip/clients/types.hpp"

namespace hip {

class GenerationClient {
public:
    virtual ~GenerationClient() = default;

    /// Raw model text for `prompt`. Throws Error("endpoint_unavailable") or
    /// Error("protocol_error").
    virtual std::string generate(const Prompt& prompt, const GenerationParams& params) = 0;

    /// Identity of the model behind the client, recorded in outputs.
    [[nodiscard]] virtual std::string model_id() const = 0;
};

// OpenAI-compatible completions / chat-completions client (vLLM, OpenAI,
// OpenRouter, ...). Raw prompts go to the completions route, chat
// transcripts to the chat route.
//
// Options:
//   completions_path      default "/v1/completions"
//   chat_path             default "/v1/chat/completions"
//   include_stop_str      default true; asks the server to keep the matched
//                         stop string in the output (a vLLM extension) so the
//                         closing tag survives for the parser
class OpenAIGenerationClient : public GenerationClient {
public:
    OpenAIGenerationClient(EndpointConfig cfg, std::shared_ptr<Transport> transport)
        : endpoint_(std::move(cfg), std::move(transport)) {}

    std::string generate(const Prompt& prompt, const GenerationParams& params) override {
        params.validate();
        const auto& cfg = endpoint_.config();
        nlohmann::json body{{"model", cfg.model_id},
                            {"temperature", params.temperature},
                            {"top_p", params.top_p},
                            {"max_tokens", params.max_tokens}};
        if (!params.stop_sequences.empty()) {
            body["stop"] = params.stop_sequences;
            if (cfg.options.value("include_stop_str", true)) body["include_stop_str_in_output"] = true;
        }
        if (params.seed) body["seed"] = *params.seed;

        const bool chat = std::holds_alternative<std::vector<ChatMessage>>(prompt);
        std::string path;
        if (chat) {
            body["messages"] = std::get<std::vector<ChatMessage>>(prompt);
            path = cfg.options.value("chat_path", std::string("/v1/chat/completions"));
        } else {
            body["prompt"] = std::get<std::string>(prompt);
            path = cfg.options.value("completions_path", std::string("/v1/completions"));
        }

        const std::string raw = endpoint_.post_json(path, body, "endpoint_unavailable");
        const auto j = nlohmann::json::parse(raw, nullptr, false);
        try {
            const auto& choice = j.at("choices").at(0);
            if (chat) return choice.at("message").at("content").get<std::string>();
            return choice.at("text").get<std::string>();
        } catch (const nlohmann::json::exception&) {
            throw Error("protocol_error", cfg.id + ": unexpected generation payload");
        }
    }

    [[nodiscard]] std::string model_id() const override {
        const auto& cfg = endpoint_.config();
        return cfg.model_id.empty() ? cfg.id : cfg.model_id;
    }

private:
    Endpoint endpoint_;
};

}  // namespace hip
