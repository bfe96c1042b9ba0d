#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace hepforest {

enum class Label : std::uint8_t { Background = 0, Signal = 1 };

inline constexpr bool is_signal(Label l) { return l == Label::Signal; }

// +1 for signal, -1 for background.
inline constexpr int to_sign(Label l) { return l == Label::Signal ? 1 : -1; }

inline constexpr Label from_sign(int s) { return s > 0 ? Label::Signal : Label::Background; }

inline const char* label_name(Label l) { return l == Label::Signal ? "s" : "b"; }

// Input data that violates a format or value contract.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration or argument combination.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace hepforest
