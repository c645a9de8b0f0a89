#pragma once

#include <stdexcept>
#include <string>

namespace simstc {

// Every failure raised by the engine carries a short machine-readable code
// ("corpus.malformed", "graphs.zero_norm", ...) next to the human message.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

}  // namespace simstc
