#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace embeval {

using Tokens = std::vector<std::string>;

/// Returns the byte offset of the first invalid UTF-8 sequence, or npos.
std::size_t find_invalid_utf8(std::string_view text);

/// Moses-style tokenization (approximate):
///  - whitespace runs separate tokens;
///  - ? ! ; ( ) [ ] { } " ` and curly double quotes are always split off;
///  - , and : are split unless between two digits (3,000  10:30);
///  - a trailing "." is split unless the word already contains a period
///    (U.S.), runs of periods stay together (...);
///  - quotes made of ' are split from word edges, "n't" and the clitics
///    's 're 've 'll 'd 'm are split from their stem (don't -> do n't);
///  - intra-word hyphens are kept; case is preserved.
/// Throws DataError naming the byte offset of invalid UTF-8.
Tokens tokenize(std::string_view text);

/// Whitespace split only, for pre-tokenized input.
Tokens split_whitespace(std::string_view text);

/// ASCII lowercasing of every token.
void lowercase_tokens(Tokens& tokens);

std::string join_tokens(const Tokens& tokens);

}  // namespace embeval
