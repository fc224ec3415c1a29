#pragma once

#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mdins/distributions.hpp"
#include "mdins/errors.hpp"
#include "mdins/measures.hpp"
#include "mdins/premiums.hpp"

namespace mdins::cli {

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Entry {
  std::string value;
  int line = 0;
};

struct Section {
  int line = 0;
  std::map<std::string, Entry> entries;
};

/// `[section]` headers followed by `key = value` lines. `#` and `;` start
/// comments; blank lines are ignored.
class IniFile {
 public:
  static IniFile parse(std::istream& in, const std::string& origin = "config") {
    IniFile ini;
    ini.origin_ = origin;
    std::string raw;
    std::string current;
    int line = 0;
    while (std::getline(in, raw)) {
      ++line;
      const std::string text = trim(strip_comment(raw));
      if (text.empty()) continue;
      if (text.front() == '[') {
        if (text.back() != ']' || text.size() < 3) ini.fail(line, "malformed section header '" + text + "'");
        current = trim(text.substr(1, text.size() - 2));
        if (ini.sections_.count(current)) ini.fail(line, "duplicate section [" + current + "]");
        ini.sections_[current].line = line;
        continue;
      }
      const auto eq = text.find('=');
      if (eq == std::string::npos) ini.fail(line, "expected 'key = value'");
      if (current.empty()) ini.fail(line, "key outside of any section");
      const std::string key = trim(text.substr(0, eq));
      const std::string value = trim(text.substr(eq + 1));
      if (key.empty()) ini.fail(line, "empty key");
      auto& entries = ini.sections_[current].entries;
      if (entries.count(key)) ini.fail(line, "duplicate key '" + key + "'");
      entries[key] = Entry{value, line};
    }
    return ini;
  }

  static IniFile load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path + ": cannot open config file");
    return parse(in, path);
  }

  const std::string& origin() const { return origin_; }
  const std::map<std::string, Section>& sections() const { return sections_; }
  bool has_section(const std::string& s) const { return sections_.count(s) > 0; }
  bool has(const std::string& s, const std::string& k) const {
    auto it = sections_.find(s);
    return it != sections_.end() && it->second.entries.count(k) > 0;
  }
  const Section& section(const std::string& s) const {
    auto it = sections_.find(s);
    if (it == sections_.end()) throw ParseError(origin_ + ": missing section [" + s + "]");
    return it->second;
  }
  int line_of(const std::string& s, const std::string& k) const {
    if (has(s, k)) return sections_.at(s).entries.at(k).line;
    return has_section(s) ? sections_.at(s).line : 0;
  }

  std::string text(const std::string& s, const std::string& k) const {
    const auto& sec = section(s);
    auto it = sec.entries.find(k);
    if (it == sec.entries.end()) fail(sec.line, "section [" + s + "] is missing key '" + k + "'");
    return it->second.value;
  }
  std::string text_or(const std::string& s, const std::string& k, const std::string& fallback) const {
    return has(s, k) ? text(s, k) : fallback;
  }
  double number(const std::string& s, const std::string& k) const {
    return to_number(text(s, k), line_of(s, k), s + "." + k);
  }
  double number_or(const std::string& s, const std::string& k, double fallback) const {
    return has(s, k) ? number(s, k) : fallback;
  }
  std::optional<double> optional_number(const std::string& s, const std::string& k) const {
    if (!has(s, k)) return std::nullopt;
    return number(s, k);
  }
  int integer_or(const std::string& s, const std::string& k, int fallback) const {
    if (!has(s, k)) return fallback;
    const double v = number(s, k);
    if (v != static_cast<int>(v)) fail(line_of(s, k), s + "." + k + " must be an integer");
    return static_cast<int>(v);
  }
  std::vector<double> numbers(const std::string& s, const std::string& k) const {
    std::vector<double> out;
    std::stringstream ss(text(s, k));
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_number(trim(item), line_of(s, k), s + "." + k));
    return out;
  }

  /// Rejects keys outside `allowed` so typos do not pass silently.
  void only(const std::string& s, std::initializer_list<const char*> allowed) const {
    if (!has_section(s)) return;
    for (const auto& [key, entry] : section(s).entries) {
      bool ok = false;
      for (const char* a : allowed) ok = ok || key == a;
      if (!ok) fail(entry.line, "unknown key '" + key + "' in section [" + s + "]");
    }
  }

  /// Replaces the value of `section.key` (the key must already exist or the
  /// section must exist).
  void set(const std::string& dotted, const std::string& value) {
    const auto dot = dotted.find('.');
    if (dot == std::string::npos) throw ParseError(origin_ + ": parameter '" + dotted + "' must be section.key");
    const std::string s = dotted.substr(0, dot);
    const std::string k = dotted.substr(dot + 1);
    auto it = sections_.find(s);
    if (it == sections_.end()) throw ParseError(origin_ + ": parameter '" + dotted + "' names a missing section");
    auto& entry = it->second.entries[k];
    if (entry.line == 0) entry.line = it->second.line;
    entry.value = value;
  }

  [[noreturn]] void fail(int line, const std::string& message) const {
    throw ParseError(origin_ + ":" + std::to_string(line) + ": " + message);
  }

 private:
  static std::string strip_comment(const std::string& s) {
    const auto pos = s.find_first_of("#;");
    return pos == std::string::npos ? s : s.substr(0, pos);
  }
  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }
  double to_number(const std::string& s, int line, const std::string& what) const {
    double v = 0.0;
    const char* begin = s.data();
    const char* end = s.data() + s.size();
    if (!s.empty() && *begin == '+') ++begin;
    const auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || ptr != end || s.empty()) fail(line, what + ": '" + s + "' is not a number");
    return v;
  }

  std::string origin_;
  std::map<std::string, Section> sections_;
};

struct SweepAxis {
  std::string parameter;
  double from = 0.0;
  double to = 0.0;
  int steps = 0;

  double value(int i) const { return steps == 1 ? from : from + (to - from) * i / (steps - 1); }
};

struct VerifySettings {
  int cells = 64;
  int samples = 10000;
  int restarts = 3;
  double tolerance = 1e-6;
};

struct ExperimentConfig {
  IniFile source;
  LossDistribution loss;
  DeviationMeasure deviation;
  PenaltyFunction penalty;
  PremiumPrinciple premium;
  std::optional<double> budget;
  std::optional<SweepAxis> sweep;
  std::vector<double> levels;
  VerifySettings verify;
  std::string output;
};

namespace detail {

template <class Fn>
auto at_line(const IniFile& ini, int line, Fn&& build) {
  try {
    return build();
  } catch (const DomainError& e) {
    ini.fail(line, e.what());
  } catch (const UnsupportedError& e) {
    ini.fail(line, e.what());
  }
}

inline LossDistribution parse_distribution(const IniFile& ini) {
  const std::string s = "distribution";
  ini.only(s, {"kind", "lower", "upper", "rate", "tail", "scale", "samples", "file"});
  const std::string kind = ini.text(s, "kind");
  const int line = ini.line_of(s, "kind");
  if (kind == "uniform") {
    const double a = ini.number_or(s, "lower", 0.0);
    const double b = ini.number(s, "upper");
    return at_line(ini, ini.line_of(s, "upper"), [&] { return LossDistribution::uniform(a, b); });
  }
  if (kind == "exponential") {
    const double rate = ini.number(s, "rate");
    return at_line(ini, ini.line_of(s, "rate"), [&] { return LossDistribution::exponential(rate); });
  }
  if (kind == "pareto") {
    const double tail = ini.number(s, "tail");
    const double scale = ini.number_or(s, "scale", 1.0);
    return at_line(ini, ini.line_of(s, "tail"), [&] { return LossDistribution::pareto(tail, scale); });
  }
  if (kind == "empirical") {
    std::vector<double> xs;
    if (ini.has(s, "samples")) {
      xs = ini.numbers(s, "samples");
    } else {
      const std::string path = ini.text(s, "file");
      std::ifstream in(path);
      if (!in) ini.fail(ini.line_of(s, "file"), "cannot open sample file '" + path + "'");
      std::string token;
      while (in >> token) {
        for (char& c : token) {
          if (c == ',') c = ' ';
        }
        std::stringstream ts(token);
        double v;
        while (ts >> v) xs.push_back(v);
      }
    }
    const int at = ini.line_of(s, ini.has(s, "samples") ? "samples" : "file");
    return at_line(ini, at, [&] { return LossDistribution::empirical(xs); });
  }
  ini.fail(line, "unknown distribution kind '" + kind + "'");
}

inline DeviationMeasure parse_deviation(const IniFile& ini) {
  const std::string s = "deviation";
  ini.only(s, {"kind", "level"});
  const std::string kind = ini.text_or(s, "kind", "gini");
  const int line = ini.line_of(s, "kind");
  return at_line(ini, line, [&]() -> DeviationMeasure {
    if (kind == "sd") return DeviationMeasure::standard_deviation();
    if (kind == "gini") return DeviationMeasure::choquet(DistortionFunction::gini());
    if (kind == "mean_absolute") return DeviationMeasure::choquet(DistortionFunction::mean_absolute());
    if (kind == "range") return DeviationMeasure::choquet(DistortionFunction::range());
    if (kind == "inter_es_range") {
      return DeviationMeasure::choquet(DistortionFunction::inter_es_range(ini.number(s, "level")));
    }
    if (kind == "es_deviation") return DeviationMeasure::choquet(DistortionFunction::es_deviation(ini.number(s, "level")));
    ini.fail(line, "unknown deviation kind '" + kind + "'");
  });
}

inline PenaltyFunction parse_penalty(const IniFile& ini) {
  const std::string s = "penalty";
  ini.only(s, {"kind", "alpha", "beta"});
  const std::string kind = ini.text_or(s, "kind", "linear_quadratic");
  if (kind == "log") return PenaltyFunction::log_penalty();
  if (kind != "linear_quadratic") ini.fail(ini.line_of(s, "kind"), "unknown penalty kind '" + kind + "'");
  const double alpha = ini.number_or(s, "alpha", 0.0);
  const double beta = ini.number_or(s, "beta", 0.0);
  return at_line(ini, ini.line_of(s, "alpha"), [&] { return PenaltyFunction::linear_quadratic(alpha, beta); });
}

inline PremiumPrinciple parse_premium(const IniFile& ini) {
  const std::string s = "premium";
  ini.only(s, {"kind", "loading", "level", "budget"});
  const std::string kind = ini.text_or(s, "kind", "expected_value");
  const int line = ini.line_of(s, "kind");
  if (kind == "expected_value") {
    const double theta = ini.number(s, "loading");
    return at_line(ini, ini.line_of(s, "loading"), [&] { return PremiumPrinciple::expected_value(theta); });
  }
  if (kind == "var" || kind == "es") {
    const double p = ini.number(s, "level");
    return at_line(ini, ini.line_of(s, "level"), [&] {
      return kind == "var" ? PremiumPrinciple::value_at_risk(p) : PremiumPrinciple::expected_shortfall(p);
    });
  }
  ini.fail(line, "unknown premium kind '" + kind + "'");
}

}  // namespace detail

/// Builds and validates every component; errors carry the offending line.
inline ExperimentConfig build_config(IniFile ini) {
  for (const char* s : {"distribution", "penalty", "premium"}) {
    if (!ini.has_section(s)) throw ParseError(ini.origin() + ": missing section [" + s + "]");
  }
  auto loss = detail::parse_distribution(ini);
  auto deviation = ini.has_section("deviation") ? detail::parse_deviation(ini)
                                                 : DeviationMeasure::choquet(DistortionFunction::gini());
  auto penalty = detail::parse_penalty(ini);
  auto premium = detail::parse_premium(ini);
  ExperimentConfig cfg{ini, std::move(loss), std::move(deviation), std::move(penalty), std::move(premium)};

  cfg.budget = ini.optional_number("premium", "budget");
  if (cfg.budget && !(*cfg.budget > 0.0)) ini.fail(ini.line_of("premium", "budget"), "budget must be positive");

  if (ini.has_section("sweep")) {
    ini.only("sweep", {"parameter", "from", "to", "steps"});
    SweepAxis axis;
    axis.parameter = ini.text("sweep", "parameter");
    const auto dot = axis.parameter.find('.');
    if (dot == std::string::npos || !ini.has_section(axis.parameter.substr(0, dot))) {
      ini.fail(ini.line_of("sweep", "parameter"), "sweep parameter must name section.key of an existing section");
    }
    axis.from = ini.number("sweep", "from");
    axis.to = ini.number("sweep", "to");
    axis.steps = ini.integer_or("sweep", "steps", 0);
    if (axis.steps < 1) ini.fail(ini.line_of("sweep", "steps"), "sweep needs at least one step");
    cfg.sweep = axis;
  }
  if (ini.has_section("measures")) {
    ini.only("measures", {"levels"});
    if (ini.has("measures", "levels")) cfg.levels = ini.numbers("measures", "levels");
    for (double p : cfg.levels) {
      if (!(p > 0.0 && p < 1.0)) ini.fail(ini.line_of("measures", "levels"), "levels must lie in (0, 1)");
    }
  }
  if (ini.has_section("verify")) {
    ini.only("verify", {"cells", "samples", "restarts", "tolerance"});
    cfg.verify.cells = ini.integer_or("verify", "cells", cfg.verify.cells);
    cfg.verify.samples = ini.integer_or("verify", "samples", cfg.verify.samples);
    cfg.verify.restarts = ini.integer_or("verify", "restarts", cfg.verify.restarts);
    cfg.verify.tolerance = ini.number_or("verify", "tolerance", cfg.verify.tolerance);
    if (cfg.verify.cells < 2 || cfg.verify.samples < 1 || cfg.verify.restarts < 1) {
      ini.fail(ini.section("verify").line, "verify settings must be positive (cells >= 2)");
    }
  }
  if (ini.has_section("output")) {
    ini.only("output", {"path"});
    cfg.output = ini.text_or("output", "path", "");
  }
  for (const auto& [name, sec] : ini.sections()) {
    bool known = false;
    for (const char* k : {"distribution", "deviation", "penalty", "premium", "sweep", "measures", "verify", "output"}) {
      known = known || name == k;
    }
    if (!known) ini.fail(sec.line, "unknown section [" + name + "]");
  }
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) { return build_config(IniFile::load(path)); }

inline ExperimentConfig parse_config(const std::string& text, const std::string& origin = "config") {
  std::istringstream in(text);
  return build_config(IniFile::parse(in, origin));
}

}  // namespace mdins::cli
