#include "margulis/cf_engine.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <boost/math/constants/constants.hpp>

#include "margulis/errors.hpp"

namespace margulis {

namespace {

const HighReal& two_pi() {
  static const HighReal value = boost::math::constants::two_pi<HighReal>();
  return value;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
  }
  return s;
}

std::uint64_t parse_positive(std::string_view token) {
  token = trim(token);
  if (token.empty()) throw InputError("empty coefficient in angle list");
  if (token.front() == '-') {
    throw InputError("coefficient must be positive: " + std::string(token));
  }
  std::uint64_t value = 0;
  auto [ptr, ec] =
      std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    throw InputError("not an integer: " + std::string(token));
  }
  if (value == 0) throw InputError("coefficient must be positive: 0");
  return value;
}

std::vector<std::uint64_t> parse_list(std::string_view text) {
  std::vector<std::uint64_t> out;
  text = trim(text);
  if (text.empty()) return out;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t comma = text.find(',', start);
    if (comma == std::string_view::npos) comma = text.size();
    out.push_back(parse_positive(text.substr(start, comma - start)));
    start = comma + 1;
  }
  return out;
}

// "[1,2,3]" -> {1,2,3}; "[]" -> {}.
std::vector<std::uint64_t> parse_bracketed(std::string_view text) {
  text = trim(text);
  if (text.size() < 2 || text.front() != '[' || text.back() != ']') {
    throw InputError("expected a bracketed list, got '" + std::string(text) +
                     "'");
  }
  return parse_list(text.substr(1, text.size() - 2));
}

int default_guard(const AngleOptions& options) {
  return options.guard_depth.value_or(options.depth + kDefaultGuardMargin);
}

std::vector<std::uint64_t> cyclic_extend(std::vector<std::uint64_t> head,
                                         std::span<const std::uint64_t> cycle,
                                         std::size_t length) {
  std::size_t i = 0;
  while (head.size() < length) {
    head.push_back(cycle[i]);
    i = (i + 1) % cycle.size();
  }
  return head;
}

}  // namespace

CFAngle CFAngle::build(std::vector<std::uint64_t> coefficients, int depth,
                       int guard_depth, std::optional<std::uint64_t> bound) {
  if (depth < 1) throw InputError("working depth must be at least 1");
  if (guard_depth < depth + kMinGuardMargin) {
    std::ostringstream msg;
    msg << "precision budget: guard depth " << guard_depth
        << " is below working depth + " << kMinGuardMargin << " = "
        << depth + kMinGuardMargin;
    throw PrecisionError(msg.str());
  }
  // Exactly guard_depth quotients means p_N/q_N is the number itself.
  const bool exact = coefficients.size() == static_cast<std::size_t>(guard_depth);
  if (coefficients.size() < static_cast<std::size_t>(guard_depth)) {
    throw PrecisionError("not enough partial quotients for the guard depth");
  }
  if (!exact) coefficients.resize(static_cast<std::size_t>(guard_depth) + 1);

  std::uint64_t observed = 0;
  for (std::size_t i = 0; i < coefficients.size(); ++i) {
    if (coefficients[i] == 0) throw InputError("coefficient must be positive: 0");
    if (i < static_cast<std::size_t>(depth)) observed = std::max(observed, coefficients[i]);
  }
  if (bound && observed > *bound) {
    std::ostringstream msg;
    msg << "coefficient " << observed << " exceeds declared bound " << *bound;
    throw InputError(msg.str());
  }

  CFAngle angle;
  angle.depth_ = depth;
  angle.guard_depth_ = guard_depth;
  angle.bound_ = bound.value_or(observed);

  // p_{-2}/q_{-2} = 0/1, p_{-1}/q_{-1} = 1/0, a_0 = 0.
  BigInt p_prev = 1, p = 0;
  BigInt q_prev = 0, q = 1;
  angle.numerators_.push_back(p);
  angle.denominators_.push_back(q);
  for (int n = 1; n <= guard_depth; ++n) {
    const BigInt a = coefficients[n - 1];
    BigInt p_next = a * p + p_prev;
    BigInt q_next = a * q + q_prev;
    p_prev = std::exchange(p, std::move(p_next));
    q_prev = std::exchange(q, std::move(q_next));
    angle.numerators_.push_back(p);
    angle.denominators_.push_back(q);
  }
  if (!exact) {
    const BigInt q_after = BigInt(coefficients[guard_depth]) * q + q_prev;
    angle.surrogate_error_ = static_cast<double>(
        HighReal(1) / (HighReal(q) * HighReal(q_after)));
  }
  angle.coefficients_ = std::move(coefficients);
  return angle;
}

CFAngle CFAngle::from_coefficients(std::vector<std::uint64_t> coefficients,
                                   const AngleOptions& options) {
  if (coefficients.empty()) throw InputError("empty coefficient list");
  for (std::uint64_t a : coefficients) {
    if (a == 0) throw InputError("coefficient must be positive: 0");
  }
  const int guard = default_guard(options);
  const std::vector<std::uint64_t> cycle = coefficients;
  auto expanded = cyclic_extend(std::move(coefficients), cycle,
                                static_cast<std::size_t>(guard) + 1);
  return build(std::move(expanded), options.depth, guard, options.bound);
}

CFAngle CFAngle::periodic(std::vector<std::uint64_t> preperiod,
                          std::vector<std::uint64_t> period,
                          const AngleOptions& options) {
  if (period.empty()) throw InputError("empty period");
  const int guard = default_guard(options);
  auto expanded = cyclic_extend(std::move(preperiod), period,
                                static_cast<std::size_t>(guard) + 1);
  return build(std::move(expanded), options.depth, guard, options.bound);
}

CFAngle CFAngle::from_decimal(std::string_view text,
                              const AngleOptions& options) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  if (text.empty() || text.front() == '-') {
    throw InputError("decimal angle must be a positive number");
  }
  std::string digits;
  std::size_t fraction_digits = 0;
  bool seen_point = false;
  for (char c : text) {
    if (c == '.') {
      if (seen_point) throw InputError("malformed decimal: two points");
      seen_point = true;
    } else if (c >= '0' && c <= '9') {
      digits.push_back(c);
      if (seen_point) ++fraction_digits;
    } else {
      throw InputError("malformed decimal: '" + std::string(text) + "'");
    }
  }
  if (digits.empty()) throw InputError("malformed decimal: no digits");

  const std::size_t first_nonzero = digits.find_first_not_of('0');
  const std::size_t significant =
      first_nonzero == std::string::npos ? 0 : digits.size() - first_nonzero;
  if (options.depth >= 20 && significant < 16) {
    std::ostringstream msg;
    msg << "precision floor: decimal has " << significant
        << " significant digits, at least 16 are needed for depth "
        << options.depth;
    throw PrecisionError(msg.str());
  }

  const BigInt scale = boost::multiprecision::pow(BigInt(10),
                                                  static_cast<unsigned>(fraction_digits));
  // Leading zeros would make the string constructor read octal.
  const BigInt value(first_nonzero == std::string::npos
                         ? std::string("0")
                         : digits.substr(first_nonzero));
  BigInt num = value % scale;  // a_0 is dropped: x is taken mod 1
  BigInt den = scale;
  if (num == 0) throw InputError("decimal angle is an integer (rational rotation)");

  // Full expansion of the exact rational. Only quotients with q_n^2 <= 10^digits
  // describe the number the string approximates; the rest still serve the
  // surrogate, which is exact with respect to the string.
  std::vector<std::uint64_t> coefficients;
  int reliable = 0;
  BigInt q_prev = 0, q = 1;  // q_{-1}, q_0
  while (num != 0) {
    const BigInt a = den / num;
    if (a > std::numeric_limits<std::uint64_t>::max()) break;
    const BigInt rem = den % num;
    const BigInt q_next = a * q + q_prev;
    if (q_next * q_next <= scale && reliable == static_cast<int>(coefficients.size())) {
      ++reliable;
    }
    coefficients.push_back(static_cast<std::uint64_t>(a));
    q_prev = std::exchange(q, q_next);
    den = std::exchange(num, rem);
  }
  const bool complete = num == 0;

  if (options.depth > reliable) {
    std::ostringstream msg;
    msg << "precision floor: decimal supplies " << reliable
        << " reliable partial quotients, depth " << options.depth
        << " was requested";
    throw PrecisionError(msg.str());
  }
  const int available = static_cast<int>(coefficients.size()) - (complete ? 0 : 1);
  const int guard = options.guard_depth.value_or(
      std::min(options.depth + kDefaultGuardMargin, available));
  if (guard > available) {
    std::ostringstream msg;
    msg << "precision budget: decimal expands to " << available
        << " partial quotients, guard depth " << guard << " was requested";
    throw PrecisionError(msg.str());
  }
  return build(std::move(coefficients), options.depth, guard, options.bound);
}

CFAngle CFAngle::rational(std::uint64_t p, std::uint64_t q) {
  if (q == 0) throw InputError("rational angle with zero denominator");
  if (p >= q) throw InputError("rational angle p/q must satisfy 0 <= p < q");
  const std::uint64_t g = std::gcd(p, q);
  p /= g;
  q /= g;

  CFAngle angle;
  angle.rational_ = true;
  BigInt p_prev = 1, pn = 0;
  BigInt q_prev = 0, qn = 1;
  angle.numerators_.push_back(pn);
  angle.denominators_.push_back(qn);
  std::uint64_t num = p, den = q;
  while (num != 0) {
    const std::uint64_t a = den / num;
    const std::uint64_t rem = den % num;
    angle.coefficients_.push_back(a);
    BigInt p_next = BigInt(a) * pn + p_prev;
    BigInt q_next = BigInt(a) * qn + q_prev;
    p_prev = std::exchange(pn, std::move(p_next));
    q_prev = std::exchange(qn, std::move(q_next));
    angle.numerators_.push_back(pn);
    angle.denominators_.push_back(qn);
    den = std::exchange(num, rem);
  }
  angle.depth_ = static_cast<int>(angle.coefficients_.size());
  angle.guard_depth_ = angle.depth_;
  angle.bound_ = angle.coefficients_.empty()
                     ? 1
                     : *std::max_element(angle.coefficients_.begin(),
                                         angle.coefficients_.end());
  angle.surrogate_error_ = 0.0;
  return angle;
}

std::uint64_t CFAngle::coefficient(int n) const {
  if (n < 1 || static_cast<std::size_t>(n) > coefficients_.size()) {
    throw InputError("partial quotient index " + std::to_string(n) +
                     " outside the stored expansion");
  }
  return coefficients_[static_cast<std::size_t>(n) - 1];
}

double CFAngle::value() const {
  return static_cast<double>(HighReal(surrogate_numerator()) /
                             HighReal(surrogate_denominator()));
}

const BigInt& CFAngle::numerator(int n) const {
  if (n < 0 || n > guard_depth_) throw InputError("convergent index out of range");
  return numerators_[static_cast<std::size_t>(n)];
}

const BigInt& CFAngle::denominator(int n) const {
  if (n < 0 || n > guard_depth_) throw InputError("convergent index out of range");
  return denominators_[static_cast<std::size_t>(n)];
}

BigInt CFAngle::residue(const BigInt& k) const {
  const BigInt& q = surrogate_denominator();
  BigInt r = k % q;
  if (r < 0) r += q;
  return (r * surrogate_numerator()) % q;
}

BigInt CFAngle::circle_distance(const BigInt& k) const {
  BigInt r = residue(k);
  BigInt other = surrogate_denominator() - r;
  return r < other ? r : other;
}

double CFAngle::fractional_part(const BigInt& k) const {
  const BigInt r = residue(k);
  const BigInt& q = surrogate_denominator();
  const HighReal frac = HighReal(r) / HighReal(q);
  const HighReal distance = frac < 0.5 ? frac : 1 - frac;
  check_budget(static_cast<double>(abs(k)), static_cast<double>(distance));
  return static_cast<double>(frac);
}

void CFAngle::check_budget(double k, double distance) const {
  if (surrogate_error_ == 0.0) return;
  const double certified = k * surrogate_error_;
  if (certified > kPrecisionBudget * distance) {
    std::ostringstream msg;
    msg.precision(3);
    msg << "precision budget exceeded at k = " << k << ": certified error "
        << certified << " against circle distance " << distance
        << " (guard depth " << guard_depth_ << "); raise the guard depth";
    throw PrecisionError(msg.str());
  }
}

CFAngle parse_angle(std::string_view spec, const AngleOptions& options) {
  const std::string_view text = trim(spec);
  if (text.empty()) throw InputError("empty angle specification");

  CFAngle angle = [&] {
    if (text == "golden") return CFAngle::periodic({}, {1}, options);

    if (const auto rat = text.find("rat:"); rat != std::string_view::npos) {
      if (const auto per = text.find("per:"); per != std::string_view::npos) {
        const auto end = text.find(';', per);
        if (trim(text.substr(per + 4, end - per - 4)) != "none") {
          throw InputError("a rational angle cannot also declare a period");
        }
      }
      const std::string_view body = trim(text.substr(rat + 4));
      const auto slash = body.find('/');
      if (slash == std::string_view::npos) {
        throw InputError("rational angle must read rat:p/q");
      }
      const auto read = [](std::string_view token) {
        token = trim(token);
        std::uint64_t v = 0;
        auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
        if (ec != std::errc() || ptr != token.data() + token.size()) {
          throw InputError("not an integer: " + std::string(token));
        }
        return v;
      };
      return CFAngle::rational(read(body.substr(0, slash)),
                               read(body.substr(slash + 1)));
    }

    if (text.starts_with("pre:")) {
      const auto semi = text.find(';');
      if (semi == std::string_view::npos) {
        throw InputError("periodic angle must read pre:[...];per:[...]");
      }
      const std::string_view per = trim(text.substr(semi + 1));
      if (!per.starts_with("per:")) {
        throw InputError("periodic angle must read pre:[...];per:[...]");
      }
      const std::string_view period_text = trim(per.substr(4));
      if (period_text == "none") {
        throw InputError("per:none is only valid together with rat:p/q");
      }
      return CFAngle::periodic(parse_bracketed(text.substr(4, semi - 4)),
                               parse_bracketed(period_text), options);
    }

    if (text.find('.') != std::string_view::npos) {
      return CFAngle::from_decimal(text, options);
    }
    return CFAngle::from_coefficients(parse_list(text), options);
  }();
  angle.set_source(std::string(text));
  return angle;
}

Convergent convergent_at(const CFAngle& angle, int n) {
  if (n < -2 || n > angle.guard_depth()) {
    throw InputError("convergent index " + std::to_string(n) + " out of range");
  }
  Convergent c;
  c.n = n;
  if (n == -2) {
    c.p = 0;
    c.q = 1;
  } else if (n == -1) {
    c.p = 1;
    c.q = 0;
  } else {
    c.p = angle.numerator(n);
    c.q = angle.denominator(n);
  }
  const BigInt& big_p = angle.surrogate_numerator();
  const BigInt& big_q = angle.surrogate_denominator();
  BigInt scaled = c.q * big_p - c.p * big_q;
  if (scaled < 0) scaled = -scaled;
  c.delta = HighReal(scaled) / HighReal(big_q);
  c.guard_error = static_cast<double>(c.q) * angle.surrogate_error();
  return c;
}

std::vector<Convergent> convergents(const CFAngle& angle, int n_max) {
  if (n_max < 0 || n_max > angle.depth()) {
    std::ostringstream msg;
    msg << "n_max " << n_max << " exceeds working depth " << angle.depth();
    throw InputError(msg.str());
  }
  std::vector<Convergent> out;
  out.reserve(static_cast<std::size_t>(n_max) + 1);
  for (int n = 0; n <= n_max; ++n) out.push_back(convergent_at(angle, n));
  return out;
}

HighReal angle_norm(const CFAngle& angle, const BigInt& k) {
  if (k <= 0) throw InputError("angle_norm needs a positive multiple k");
  const BigInt m = angle.circle_distance(k);
  const HighReal distance = HighReal(m) / HighReal(angle.surrogate_denominator());
  angle.check_budget(static_cast<double>(k), static_cast<double>(distance));
  return two_pi() * distance;
}

std::vector<std::uint64_t> closest_returns(const CFAngle& angle,
                                           std::uint64_t max_k) {
  if (max_k == 0) throw InputError("closest_returns needs K >= 1");
  const BigInt& p = angle.surrogate_numerator();
  const BigInt& q = angle.surrogate_denominator();
  const double q_double = static_cast<double>(q);

  std::vector<std::uint64_t> moments;
  BigInt residue = 0;
  std::optional<BigInt> best;
  for (std::uint64_t k = 1; k <= max_k; ++k) {
    residue += p;
    if (residue >= q) residue -= q;
    BigInt other = q - residue;
    const BigInt& m = residue < other ? residue : other;
    angle.check_budget(static_cast<double>(k),
                       static_cast<double>(m) / q_double);
    if (!best || m < *best) {
      moments.push_back(k);
      best = m;
    }
  }
  return moments;
}

NormRecursionReport verify_norm_recursion(const CFAngle& angle, int depth,
                                          double tolerance) {
  if (depth < 0) throw InputError("negative verification depth");
  if (depth + 2 > angle.depth()) {
    std::ostringstream msg;
    msg << "verification depth " << depth << " + 2 exceeds working depth "
        << angle.depth();
    throw InputError(msg.str());
  }
  NormRecursionReport report;
  if (depth == 0) return report;

  const HighReal pi = boost::math::constants::pi<HighReal>();
  std::vector<HighReal> norms(static_cast<std::size_t>(depth) + 3);
  for (int n = 1; n <= depth + 2; ++n) {
    norms[n] = angle_norm(angle, angle.denominator(n));
  }
  for (int n = 1; n <= depth; ++n) {
    NormRecursionRow row;
    row.n = n;
    row.norm = norms[n];
    const HighReal a = angle.coefficient(n + 2);
    const HighReal diff = norms[n] - a * norms[n + 1] - norms[n + 2];
    row.residual = static_cast<double>(abs(diff) / norms[n]);
    row.decreasing = norms[n + 1] > 0 && norms[n + 1] < norms[n];
    const HighReal q_next(angle.denominator(n + 1));
    row.bounded = pi / q_next < norms[n] && norms[n] < 2 * pi / q_next;
    report.max_residual = std::max(report.max_residual, row.residual);
    report.passed = report.passed && row.decreasing && row.bounded &&
                    row.residual < tolerance;
    report.rows.push_back(std::move(row));
  }
  return report;
}

}  // namespace margulis
