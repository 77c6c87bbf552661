#include "epsched/priority.h"

#include <cctype>

namespace epsched {

namespace {

// Only the facts the priority parameters need survive parsing.
struct BareValue {
  enum class Kind { Integer, Decimal, String, Token, Bytes, Boolean, InnerList };
  Kind kind = Kind::Boolean;
  std::int64_t integer = 0;
  bool boolean = true;
};

bool isLcAlpha(char c) {
  return c >= 'a' && c <= 'z';
}

bool isDigit(char c) {
  return c >= '0' && c <= '9';
}

bool isTchar(char c) {
  if (std::isalnum(static_cast<unsigned char>(c)) != 0) {
    return true;
  }
  switch (c) {
    case '!': case '#': case '$': case '%': case '&': case '\'': case '*':
    case '+': case '-': case '.': case '^': case '_': case '`': case '|':
    case '~':
      return true;
    default:
      return false;
  }
}

bool isBase64(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '+' ||
      c == '/' || c == '=';
}

class DictionaryParser {
 public:
  explicit DictionaryParser(std::string_view input) : in_(input) {}

  PriorityParams parse() {
    PriorityParams result;
    skipSp();
    trimTrailingSp();
    if (atEnd()) {
      return result;
    }
    while (true) {
      std::string key = parseKey();
      BareValue value;
      if (peek() == '=') {
        ++pos_;
        value = parseItemOrInnerList();
      } else {
        parseParameters();
      }
      apply(key, value, result);

      skipOws();
      if (atEnd()) {
        return result;
      }
      expect(',', "expected ',' between members");
      skipOws();
      if (atEnd()) {
        fail("trailing comma");
      }
    }
  }

 private:
  static void apply(
      const std::string& key,
      const BareValue& value,
      PriorityParams& out) {
    if (key == "u") {
      if (value.kind != BareValue::Kind::Integer) {
        throw MalformedField("urgency member 'u' is not an integer");
      }
      // Later duplicates win; an out-of-range value resets to the default.
      auto urgency = UrgencyLevel::tryFrom(value.integer);
      out.urgency = urgency.value_or(UrgencyLevel{});
    } else if (key == "i") {
      out.incremental =
          value.kind == BareValue::Kind::Boolean ? value.boolean : false;
    }
  }

  bool atEnd() const { return pos_ >= in_.size(); }

  char peek() const { return atEnd() ? '\0' : in_[pos_]; }

  [[noreturn]] void fail(const char* what) const {
    throw MalformedField(
        std::string(what) + " at offset " + std::to_string(pos_));
  }

  void expect(char c, const char* what) {
    if (peek() != c) {
      fail(what);
    }
    ++pos_;
  }

  void skipSp() {
    while (!atEnd() && in_[pos_] == ' ') {
      ++pos_;
    }
  }

  void skipOws() {
    while (!atEnd() && (in_[pos_] == ' ' || in_[pos_] == '\t')) {
      ++pos_;
    }
  }

  void trimTrailingSp() {
    while (!in_.empty() && in_.back() == ' ') {
      in_.remove_suffix(1);
    }
  }

  std::string parseKey() {
    char first = peek();
    if (!isLcAlpha(first) && first != '*') {
      fail("key must start with a lowercase letter or '*'");
    }
    std::string key;
    while (!atEnd()) {
      char c = in_[pos_];
      if (!isLcAlpha(c) && !isDigit(c) && c != '_' && c != '-' && c != '.' &&
          c != '*') {
        break;
      }
      key.push_back(c);
      ++pos_;
    }
    return key;
  }

  void parseParameters() {
    while (peek() == ';') {
      ++pos_;
      skipSp();
      parseKey();
      if (peek() == '=') {
        ++pos_;
        parseBareItem();
      }
    }
  }

  BareValue parseItemOrInnerList() {
    if (peek() == '(') {
      parseInnerList();
      BareValue v;
      v.kind = BareValue::Kind::InnerList;
      return v;
    }
    BareValue v = parseBareItem();
    parseParameters();
    return v;
  }

  void parseInnerList() {
    expect('(', "expected '('");
    while (!atEnd()) {
      skipSp();
      if (peek() == ')') {
        ++pos_;
        parseParameters();
        return;
      }
      parseBareItem();
      parseParameters();
      char next = peek();
      if (next != ' ' && next != ')') {
        fail("inner list items must be separated by spaces");
      }
    }
    fail("unterminated inner list");
  }

  BareValue parseBareItem() {
    char c = peek();
    if (c == '-' || isDigit(c)) {
      return parseNumber();
    }
    BareValue v;
    if (c == '"') {
      parseString();
      v.kind = BareValue::Kind::String;
    } else if (c == '*' || std::isalpha(static_cast<unsigned char>(c)) != 0) {
      parseToken();
      v.kind = BareValue::Kind::Token;
    } else if (c == ':') {
      parseByteSequence();
      v.kind = BareValue::Kind::Bytes;
    } else if (c == '?') {
      ++pos_;
      char b = peek();
      if (b != '0' && b != '1') {
        fail("boolean must be ?0 or ?1");
      }
      ++pos_;
      v.kind = BareValue::Kind::Boolean;
      v.boolean = b == '1';
    } else {
      fail("unrecognized item");
    }
    return v;
  }

  BareValue parseNumber() {
    bool negative = false;
    if (peek() == '-') {
      negative = true;
      ++pos_;
    }
    if (!isDigit(peek())) {
      fail("expected digit");
    }
    std::int64_t magnitude = 0;
    std::size_t intDigits = 0;
    while (isDigit(peek())) {
      magnitude = magnitude * 10 + (in_[pos_] - '0');
      ++intDigits;
      ++pos_;
      if (intDigits > 15) {
        fail("integer exceeds 15 digits");
      }
    }
    BareValue v;
    if (peek() != '.') {
      v.kind = BareValue::Kind::Integer;
      v.integer = negative ? -magnitude : magnitude;
      return v;
    }
    if (intDigits > 12) {
      fail("decimal integer part exceeds 12 digits");
    }
    ++pos_;
    std::size_t fracDigits = 0;
    while (isDigit(peek())) {
      ++fracDigits;
      ++pos_;
    }
    if (fracDigits == 0 || fracDigits > 3) {
      fail("decimal needs 1 to 3 fractional digits");
    }
    v.kind = BareValue::Kind::Decimal;
    return v;
  }

  void parseString() {
    expect('"', "expected '\"'");
    while (!atEnd()) {
      char c = in_[pos_++];
      if (c == '\\') {
        char escaped = peek();
        if (escaped != '"' && escaped != '\\') {
          fail("invalid escape in string");
        }
        ++pos_;
      } else if (c == '"') {
        return;
      } else if (c < 0x20 || c > 0x7e) {
        fail("non-printable character in string");
      }
    }
    fail("unterminated string");
  }

  void parseToken() {
    while (!atEnd()) {
      char c = in_[pos_];
      if (!isTchar(c) && c != ':' && c != '/') {
        break;
      }
      ++pos_;
    }
  }

  void parseByteSequence() {
    expect(':', "expected ':'");
    while (!atEnd() && in_[pos_] != ':') {
      if (!isBase64(in_[pos_])) {
        fail("invalid byte sequence character");
      }
      ++pos_;
    }
    expect(':', "unterminated byte sequence");
  }

  std::string_view in_;
  std::size_t pos_ = 0;
};

} // namespace

PriorityParams parsePriorityField(std::string_view text) {
  return DictionaryParser(text).parse();
}

std::string serializePriorityField(const PriorityParams& params) {
  std::string out = "u=";
  out += static_cast<char>('0' + params.urgency.value());
  if (params.incremental) {
    out += ", i";
  }
  return out;
}

PriorityParams applyUpdate(
    const PriorityParams& base,
    const PriorityParams& update,
    PriorityUpdateMask mask) {
  PriorityParams out = base;
  if (mask.urgencyPresent) {
    out.urgency = update.urgency;
  }
  if (mask.incrementalPresent) {
    out.incremental = update.incremental;
  }
  return out;
}

} // namespace epsched
