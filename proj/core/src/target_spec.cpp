#include "chainlab/target_spec.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <vector>

namespace chainlab {

TargetSpecError::TargetSpecError(const std::string& message, std::size_t position)
    : InvalidArgument("target spec, position " + std::to_string(position) + ": " + message),
      position_(position) {}

namespace {

struct Param {
  std::vector<double> values;
  std::size_t key_pos = 0;
  std::size_t value_pos = 0;
};

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  std::string family() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && text_[pos_] != ':') ++pos_;
    if (pos_ == start) throw TargetSpecError("missing target family", start);
    return std::string(text_.substr(start, pos_ - start));
  }

  std::map<std::string, Param> params() {
    std::map<std::string, Param> out;
    if (pos_ == text_.size()) return out;
    ++pos_;  // ':'
    if (pos_ == text_.size()) throw TargetSpecError("expected parameter after ':'", pos_);
    while (true) {
      const std::size_t key_pos = pos_;
      while (pos_ < text_.size() && text_[pos_] != '=' && text_[pos_] != ',') ++pos_;
      if (pos_ == key_pos) throw TargetSpecError("expected parameter name", key_pos);
      if (pos_ == text_.size() || text_[pos_] != '=') {
        throw TargetSpecError("expected '=' after parameter name", pos_);
      }
      std::string key(text_.substr(key_pos, pos_ - key_pos));
      if (out.count(key)) throw TargetSpecError("duplicate parameter '" + key + "'", key_pos);
      ++pos_;  // '='
      Param p;
      p.key_pos = key_pos;
      p.value_pos = pos_;
      while (true) {
        p.values.push_back(number());
        if (pos_ < text_.size() && text_[pos_] == ';') {
          ++pos_;
          continue;
        }
        break;
      }
      out.emplace(std::move(key), std::move(p));
      if (pos_ == text_.size()) break;
      if (text_[pos_] != ',') throw TargetSpecError("expected ',' or end of spec", pos_);
      ++pos_;
    }
    return out;
  }

 private:
  double number() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && text_[pos_] != ';' && text_[pos_] != ',') ++pos_;
    if (pos_ == start) throw TargetSpecError("expected a number", start);
    double value = 0.0;
    const char* first = text_.data() + start;
    const char* last = text_.data() + pos_;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last || !std::isfinite(value)) {
      throw TargetSpecError("malformed number '" + std::string(first, last) + "'",
                            start + static_cast<std::size_t>(ptr - first));
    }
    return value;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

void reject_unknown(const std::map<std::string, Param>& params,
                    std::initializer_list<std::string_view> allowed) {
  for (const auto& [key, p] : params) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) throw TargetSpecError("unknown parameter '" + key + "'", p.key_pos);
  }
}

double scalar(const std::map<std::string, Param>& params, const std::string& key,
              double fallback) {
  auto it = params.find(key);
  if (it == params.end()) return fallback;
  if (it->second.values.size() != 1) {
    throw TargetSpecError("parameter '" + key + "' takes a single number", it->second.value_pos);
  }
  return it->second.values.front();
}

std::size_t count(const std::map<std::string, Param>& params, const std::string& key,
                  std::size_t fallback) {
  auto it = params.find(key);
  if (it == params.end()) return fallback;
  const double v = scalar(params, key, 0.0);
  if (v < 1.0 || v != std::floor(v) || v > 1e7) {
    throw TargetSpecError("parameter '" + key + "' must be a positive integer",
                          it->second.value_pos);
  }
  return static_cast<std::size_t>(v);
}

Vector broadcast(const std::map<std::string, Param>& params, const std::string& key,
                 std::size_t d, double fallback) {
  auto it = params.find(key);
  if (it == params.end()) return Vector(d, fallback);
  const auto& values = it->second.values;
  if (values.size() == 1) return Vector(d, values.front());
  if (values.size() != d) {
    throw TargetSpecError("parameter '" + key + "' has " + std::to_string(values.size()) +
                              " entries, expected 1 or " + std::to_string(d),
                          it->second.value_pos);
  }
  return values;
}

}  // namespace

TargetModel parse_target_spec(std::string_view text) {
  Parser parser(text);
  const std::string family = parser.family();
  const auto params = parser.params();

  if (family == "gaussian") {
    reject_unknown(params, {"d", "mean", "var"});
    std::size_t longest = 1;
    for (const char* k : {"mean", "var"}) {
      if (auto it = params.find(k); it != params.end()) {
        longest = std::max(longest, it->second.values.size());
      }
    }
    const std::size_t d = count(params, "d", longest);
    Vector mean = broadcast(params, "mean", d, 0.0);
    Vector var = broadcast(params, "var", d, 1.0);
    for (std::size_t i = 0; i < var.size(); ++i) {
      if (!(var[i] > 0.0)) {
        throw TargetSpecError("variances must be positive", params.at("var").value_pos);
      }
    }
    return make_gaussian(std::move(mean), std::move(var));
  }
  if (family == "illcond") {
    reject_unknown(params, {"d", "kappa"});
    const std::size_t d = count(params, "d", 2);
    const double kappa = scalar(params, "kappa", 100.0);
    if (d < 2) throw TargetSpecError("illcond needs d >= 2", params.at("d").value_pos);
    if (!(kappa >= 1.0)) {
      throw TargetSpecError("kappa must be >= 1", params.at("kappa").value_pos);
    }
    return make_ill_conditioned(d, kappa);
  }
  if (family == "banana") {
    reject_unknown(params, {"curv", "scale"});
    const double curv = scalar(params, "curv", 1.0);
    const double scale = scalar(params, "scale", 2.0);
    if (!(scale > 0.0)) {
      throw TargetSpecError("scale must be positive", params.at("scale").value_pos);
    }
    return make_banana(curv, scale);
  }
  throw TargetSpecError("unknown target family '" + family + "'", 0);
}

}  // namespace chainlab
