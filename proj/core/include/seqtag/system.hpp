#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace seqtag {

// A trained tagger as seen by evaluation and experiment code. Implementations
// are immutable after training and safe to call concurrently.
class TaggingSystem {
 public:
  virtual ~TaggingSystem() = default;

  virtual std::string name() const = 0;
  virtual std::vector<std::string> tag(std::span<const std::string> forms) const = 0;
  // Count of `form` in the system's training data; 0 marks an OOV token.
  virtual std::size_t train_frequency(std::string_view form) const = 0;
};

}  // namespace seqtag
