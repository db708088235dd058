#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace emsaudit {

struct NormalizeOptions {
  // ASCII symbols kept in addition to '%'. "&" reproduces the published
  // preprocessing examples, which keep ampersands.
  std::string extra_kept_symbols;
};

// Lowercases, replaces every character that is not a letter, digit or kept
// symbol with a space, collapses whitespace runs and trims. Non-ASCII letters
// are lowercased and kept; invalid UTF-8 bytes count as symbols.
std::string normalize(std::string_view text, const NormalizeOptions& options = {});

struct TokenizedSentence {
  std::vector<std::string> tokens;
  std::string source_incident;

  std::size_t size() const { return tokens.size(); }
};

// Whitespace tokenization of already-normalized text.
TokenizedSentence tokenize(std::string_view text, std::string source_incident = {});

// std::u32string helpers shared with the fuzzy matcher.
std::u32string decode_utf8(std::string_view text);
std::string encode_utf8(std::u32string_view text);

}  // namespace emsaudit
