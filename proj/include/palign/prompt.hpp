#pragma once

#include <optional>
#include <string>

namespace palign {

struct PromptMetadata {
  std::string record_id;
  std::optional<std::string> persona_id;
};

// system_text is the context-insensitive backbone; user_text carries the
// context-varied inputs.
struct Prompt {
  std::string system_text;
  std::string user_text;
  PromptMetadata metadata;
};

}  // namespace palign
