#include "andor/rational.hpp"

#include <charconv>
#include <numeric>

#include "andor/errors.hpp"

namespace andor {

Rational::Rational(std::int64_t num, std::int64_t den) {
  if (den == 0) throw ConfigError("rational with zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const std::int64_t g = std::gcd(num, den);
  num_ = g == 0 ? 0 : num / g;
  den_ = g == 0 ? 1 : den / g;
}

namespace {

std::int64_t parse_int(std::string_view text, std::string_view whole) {
  std::int64_t value = 0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || first == last) {
    throw ConfigError("cannot parse rational '" + std::string(whole) + "'");
  }
  return value;
}

}  // namespace

Rational Rational::parse(std::string_view text) {
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
  if (text.empty()) throw ConfigError("empty rational");

  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    return Rational(parse_int(text.substr(0, slash), text), parse_int(text.substr(slash + 1), text));
  }
  if (auto dot = text.find('.'); dot != std::string_view::npos) {
    std::string_view int_part = text.substr(0, dot);
    std::string_view frac_part = text.substr(dot + 1);
    if (frac_part.size() > 15) throw ConfigError("too many decimals in '" + std::string(text) + "'");
    const bool negative = !int_part.empty() && int_part.front() == '-';
    if (negative || (!int_part.empty() && int_part.front() == '+')) int_part.remove_prefix(1);
    std::int64_t scale = 1;
    for (std::size_t i = 0; i < frac_part.size(); ++i) scale *= 10;
    const std::int64_t whole = int_part.empty() ? 0 : parse_int(int_part, text);
    const std::int64_t frac = frac_part.empty() ? 0 : parse_int(frac_part, text);
    const std::int64_t num = whole * scale + frac;
    return Rational(negative ? -num : num, scale);
  }
  return Rational(parse_int(text, text), 1);
}

std::string Rational::to_string() const {
  if (den_ == 1) return std::to_string(num_);
  return std::to_string(num_) + "/" + std::to_string(den_);
}

namespace {
__extension__ using Wide = __int128;
}  // namespace

std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
  // Denominators are positive, so cross-multiplication preserves order.
  const Wide lhs = static_cast<Wide>(a.num_) * b.den_;
  const Wide rhs = static_cast<Wide>(b.num_) * a.den_;
  if (lhs < rhs) return std::strong_ordering::less;
  if (lhs > rhs) return std::strong_ordering::greater;
  return std::strong_ordering::equal;
}

}  // namespace andor
