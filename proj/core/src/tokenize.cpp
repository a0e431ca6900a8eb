#include "embeval/tokenize.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "embeval/error.hpp"

namespace embeval {

std::size_t find_invalid_utf8(std::string_view text) {
  const auto* s = reinterpret_cast<const unsigned char*>(text.data());
  const std::size_t n = text.size();
  std::size_t i = 0;
  while (i < n) {
    const unsigned char c = s[i];
    if (c < 0x80) {
      ++i;
      continue;
    }
    std::size_t len;
    std::uint32_t cp;
    if ((c & 0xE0) == 0xC0) {
      len = 2;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
      cp = c & 0x07;
    } else {
      return i;
    }
    if (i + len > n) return i;
    for (std::size_t k = 1; k < len; ++k) {
      if ((s[i + k] & 0xC0) != 0x80) return i;
      cp = (cp << 6) | (s[i + k] & 0x3F);
    }
    static constexpr std::array<std::uint32_t, 5> min_cp{0, 0, 0x80, 0x800, 0x10000};
    if (cp < min_cp[len] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return i;
    i += len;
  }
  return std::string_view::npos;
}

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }

bool always_split(char c) {
  switch (c) {
    case '?':
    case '!':
    case ';':
    case '(':
    case ')':
    case '[':
    case ']':
    case '{':
    case '}':
    case '"':
    case '`':
      return true;
    default:
      return false;
  }
}

// UTF-8 encodings of curly double quotes.
constexpr std::string_view kLeftQuote = "\xE2\x80\x9C";
constexpr std::string_view kRightQuote = "\xE2\x80\x9D";

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

bool is_clitic(std::string_view rest) {
  for (std::string_view c : {"s", "re", "ve", "ll", "d", "m"}) {
    if (iequals(rest, c)) return true;
  }
  return false;
}

bool all_of_char(std::string_view w, char c) {
  return !w.empty() && std::all_of(w.begin(), w.end(), [c](char x) { return x == c; });
}

// Period and apostrophe rules on a piece that contains no always-split
// characters and no splittable commas or colons.
void split_word(std::string_view w, Tokens& out) {
  if (w.empty()) return;
  if (all_of_char(w, '.') || all_of_char(w, '\'')) {
    out.emplace_back(w);
    return;
  }
  if (w.back() == '.') {
    std::size_t run = 0;
    while (run < w.size() && w[w.size() - 1 - run] == '.') ++run;
    const std::string_view stem = w.substr(0, w.size() - run);
    if (run >= 2) {
      split_word(stem, out);
      out.emplace_back(w.substr(w.size() - run));
      return;
    }
    if (stem.find('.') == std::string_view::npos) {
      split_word(stem, out);
      out.emplace_back(".");
      return;
    }
    // Abbreviation such as U.S. stays whole.
  }
  if (w.front() == '\'') {
    const std::string_view rest = w.substr(1);
    if (is_clitic(rest)) {
      out.emplace_back(w);
      return;
    }
    out.emplace_back("'");
    split_word(rest, out);
    return;
  }
  if (w.back() == '\'') {
    split_word(w.substr(0, w.size() - 1), out);
    out.emplace_back("'");
    return;
  }
  if (w.size() > 3 && iequals(w.substr(w.size() - 3), "n't")) {
    split_word(w.substr(0, w.size() - 3), out);
    out.emplace_back(w.substr(w.size() - 3));
    return;
  }
  const std::size_t apos = w.rfind('\'');
  if (apos != std::string_view::npos && apos > 0 && is_clitic(w.substr(apos + 1))) {
    split_word(w.substr(0, apos), out);
    out.emplace_back(w.substr(apos));
    return;
  }
  out.emplace_back(w);
}

// Splits , and : unless both neighbours are digits, then applies split_word.
void split_separators(std::string_view piece, Tokens& out) {
  std::size_t start = 0;
  for (std::size_t i = 0; i < piece.size(); ++i) {
    const char c = piece[i];
    if (c != ',' && c != ':') continue;
    const bool numeric = i > 0 && i + 1 < piece.size() && is_digit(piece[i - 1]) && is_digit(piece[i + 1]);
    if (numeric) continue;
    split_word(piece.substr(start, i - start), out);
    out.emplace_back(1, c);
    start = i + 1;
  }
  split_word(piece.substr(start), out);
}

void split_chunk(std::string_view chunk, Tokens& out) {
  std::size_t start = 0;
  std::size_t i = 0;
  while (i < chunk.size()) {
    std::size_t len = 0;
    if (always_split(chunk[i])) {
      len = 1;
    } else if (chunk.substr(i, 3) == kLeftQuote || chunk.substr(i, 3) == kRightQuote) {
      len = 3;
    }
    if (len == 0) {
      ++i;
      continue;
    }
    split_separators(chunk.substr(start, i - start), out);
    out.emplace_back(chunk.substr(i, len));
    i += len;
    start = i;
  }
  split_separators(chunk.substr(start), out);
}

}  // namespace

Tokens split_whitespace(std::string_view text) {
  Tokens out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t j = i;
    while (j < text.size() && !is_space(text[j])) ++j;
    if (j > i) out.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

Tokens tokenize(std::string_view text) {
  if (const std::size_t bad = find_invalid_utf8(text); bad != std::string_view::npos) {
    throw DataError("invalid UTF-8 at byte offset " + std::to_string(bad));
  }
  Tokens out;
  for (const std::string& chunk : split_whitespace(text)) split_chunk(chunk, out);
  return out;
}

void lowercase_tokens(Tokens& tokens) {
  for (auto& t : tokens) {
    for (char& c : t) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
}

std::string join_tokens(const Tokens& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

}  // namespace embeval
