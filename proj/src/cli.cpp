#include "margulis/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "margulis/errors.hpp"

namespace margulis::cli {

using nlohmann::json;

namespace {

// nlohmann::json prints the shortest round-trip form; documents here pin 17
// significant digits instead, so the serializer is ours.
void write_json(const json& value, std::string& out, int level) {
  const std::string pad(static_cast<std::size_t>(2 * (level + 1)), ' ');
  const std::string close_pad(static_cast<std::size_t>(2 * level), ' ');
  switch (value.type()) {
    case json::value_t::object: {
      if (value.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (const auto& [key, item] : value.items()) {
        if (!first) out += ",\n";
        first = false;
        out += pad + json(key).dump() + ": ";
        write_json(item, out, level + 1);
      }
      out += "\n" + close_pad + "}";
      return;
    }
    case json::value_t::array: {
      if (value.empty()) {
        out += "[]";
        return;
      }
      const bool flat = std::none_of(value.begin(), value.end(), [](const json& item) {
        return item.is_structured();
      });
      if (flat) {
        out += "[";
        for (std::size_t i = 0; i < value.size(); ++i) {
          if (i) out += ", ";
          write_json(value[i], out, level + 1);
        }
        out += "]";
        return;
      }
      out += "[\n";
      for (std::size_t i = 0; i < value.size(); ++i) {
        if (i) out += ",\n";
        out += pad;
        write_json(value[i], out, level + 1);
      }
      out += "\n" + close_pad + "]";
      return;
    }
    case json::value_t::number_float:
      out += format_double(value.get<double>());
      return;
    default:
      out += value.dump();
  }
}

std::string to_document(const json& value) {
  std::string out;
  write_json(value, out, 0);
  out += '\n';
  return out;
}

json angle_echo(const RunConfig& config, const CFAngle& angle) {
  json echo;
  echo["spec"] = config.angle_spec;
  echo["coefficients"] = std::vector<std::uint64_t>(angle.coefficients().begin(),
                                                    angle.coefficients().end());
  echo["bound_D"] = angle.bound();
  echo["depth"] = angle.depth();
  echo["guard_depth"] = angle.guard_depth();
  echo["rational"] = angle.is_rational();
  return echo;
}

json header(const std::string& command, const RunConfig& config,
            const RegionParams& params) {
  json doc;
  doc["command"] = command;
  doc["angle"] = angle_echo(config, params.angle());
  doc["epsilon"] = params.epsilon();
  doc["E"] = params.E();
  return doc;
}

std::string csv_row(std::initializer_list<std::string> cells) {
  std::string row;
  for (const auto& cell : cells) {
    if (!row.empty()) row += ',';
    row += cell;
  }
  return row + '\n';
}

RegionParams make_params(const RunConfig& config) {
  config.validate();
  return RegionParams(parse_angle(config.angle_spec, config.angle_options()),
                      config.epsilon);
}

template <typename Body>
CommandResult guarded(Body&& body) {
  try {
    return body();
  } catch (const std::exception& e) {
    const int code = exit_code_for(e);
    if (code < 0) throw;
    return {code, {}, e.what()};
  }
}

bool is_convergent_denominator(const CFAngle& angle, std::uint64_t k) {
  for (int n = 0; n <= angle.depth(); ++n) {
    if (angle.denominator(n) == k) return true;
  }
  return false;
}

json distortion_json(const DistortionReport& r, const char* map) {
  json doc;
  doc["command"] = "distort";
  doc["map"] = map;
  doc["seed"] = r.seed;
  doc["sample_count"] = r.sample_count;
  doc["rejected_pairs"] = r.rejected_pairs;
  doc["min_ratio"] = r.min_ratio;
  doc["max_ratio"] = r.max_ratio;
  doc["max_additive_defect"] = r.max_additive_defect;
  doc["constant_C"] = r.constant_C;
  doc["ratio_lower"] = r.ratio_lower;
  doc["ratio_upper"] = r.ratio_upper;
  doc["defect_bound"] = r.defect_bound;
  doc["bound_A"] = r.bound_A;
  doc["bound_B"] = r.bound_B;
  doc["max_displacement"] = r.max_displacement;
  doc["max_preimage_error"] = r.max_preimage_error;
  doc["horosphere_error"] = r.horosphere_error;
  doc["certified"] = r.certified;
  return doc;
}

}  // namespace

int exit_code_for(const std::exception& error) {
  if (dynamic_cast<const PrecisionError*>(&error)) return kPrecisionFailure;
  if (dynamic_cast<const InconsistencyError*>(&error)) return kCertificationFailure;
  if (dynamic_cast<const InputError*>(&error)) return kInputError;
  if (dynamic_cast<const json::exception*>(&error)) return kInputError;
  if (dynamic_cast<const std::invalid_argument*>(&error)) return kInputError;
  if (dynamic_cast<const std::out_of_range*>(&error)) return kInputError;
  return -1;
}

std::string format_double(double value) {
  if (!std::isfinite(value)) return "null";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

void RunConfig::validate() const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw InputError("--epsilon must be positive");
  }
  if (depth < 2) throw InputError("--depth must be at least 2");
  if (samples < 1) throw InputError("--samples must be at least 1");
  if (!(r_max > 0.0) || !std::isfinite(r_max)) {
    throw InputError("--rmax must be positive");
  }
}

AngleOptions RunConfig::angle_options() const {
  AngleOptions options;
  options.depth = depth;
  options.guard_depth = guard_depth;
  return options;
}

CommandResult cmd_decompose(const RunConfig& config) {
  return guarded([&]() -> CommandResult {
    const RegionParams params = make_params(config);
    const PieceDecomposition pieces = decompose(params, config.r_max);

    if (config.format == OutputFormat::csv) {
      std::string doc = "index,r_lo,r_hi\n";
      for (std::size_t i = 0; i < pieces.indices.size(); ++i) {
        doc += csv_row({std::to_string(pieces.indices[i]),
                        format_double(pieces.breakpoints[i]),
                        format_double(pieces.breakpoints[i + 1])});
      }
      return {kSuccess, doc, {}};
    }
    json doc = header("decompose", config, params);
    doc["r_max"] = pieces.r_max;
    json list = json::array();
    for (std::size_t i = 0; i < pieces.indices.size(); ++i) {
      list.push_back({{"index", pieces.indices[i]},
                      {"r_lo", pieces.breakpoints[i]},
                      {"r_hi", pieces.breakpoints[i + 1]}});
    }
    doc["pieces"] = std::move(list);
    doc["validation"] = {{"oracle_checks", pieces.validation.oracle_checks},
                         {"max_residual", pieces.validation.max_residual}};
    return {kSuccess, to_document(doc), {}};
  });
}

CommandResult cmd_sample(const RunConfig& config) {
  return guarded([&]() -> CommandResult {
    const RegionParams params = make_params(config);
    const double lo = std::min(1e-3, config.r_max);
    const auto grid = geometric_grid(lo, config.r_max, config.samples);

    std::string csv = "r,b,k,ratio\n";
    json rows = json::array();
    double inf = std::numeric_limits<double>::infinity(), sup = 0.0;
    for (double r : grid) {
      const EnvelopePoint point = envelope_value(params, r);
      const double ratio = point.value / std::sqrt(r);
      inf = std::min(inf, ratio);
      sup = std::max(sup, ratio);
      if (config.format == OutputFormat::csv) {
        csv += csv_row({format_double(r), format_double(point.value),
                        std::to_string(point.argmin), format_double(ratio)});
      } else {
        rows.push_back({{"r", r}, {"b", point.value}, {"k", point.argmin},
                        {"ratio", ratio}});
      }
    }
    if (config.format == OutputFormat::csv) return {kSuccess, csv, {}};

    json doc = header("sample", config, params);
    doc["r_max"] = config.r_max;
    doc["rows"] = std::move(rows);
    doc["ratio_inf"] = inf;
    doc["ratio_sup"] = sup;
    return {kSuccess, to_document(doc), {}};
  });
}

CommandResult cmd_verify(const RunConfig& config) {
  return guarded([&]() -> CommandResult {
    const RegionParams params = make_params(config);
    const CFAngle& angle = params.angle();
    if (angle.is_rational()) {
      throw InputError("verify needs an irrational angle");
    }
    json checks = json::array();
    bool all = true;
    auto record = [&](const char* name, bool passed, double residual,
                      json detail) {
      all = all && passed;
      checks.push_back({{"name", name},
                        {"passed", passed},
                        {"max_residual", residual},
                        {"detail", std::move(detail)}});
    };

    {
      bool ok = true;
      for (int n = 0; n + 1 <= angle.depth(); ++n) {
        const BigInt q_prev = n == 0 ? BigInt(0) : angle.denominator(n - 1);
        ok = ok && angle.denominator(n + 1) ==
                       BigInt(angle.coefficient(n + 1)) * angle.denominator(n) + q_prev;
      }
      record("denominator_recursion", ok, 0.0, {{"depth", angle.depth()}});
    }
    {
      // q_n < q_{n+k} < (D+1)^k q_n. When a_1 = 1, q_0 = q_1 and the upper
      // bound is attained at n = 1, so it is only required non-strictly there.
      bool ok = true;
      const BigInt base = BigInt(angle.bound()) + 1;
      for (int n = 1; n <= angle.depth(); ++n) {
        const BigInt& qn = angle.denominator(n);
        const bool strict = angle.denominator(n - 1) < qn;
        BigInt factor = 1;
        for (int k = 1; k <= 4 && n + k <= angle.depth(); ++k) {
          factor *= base;
          const BigInt& qnk = angle.denominator(n + k);
          ok = ok && qn < qnk && (strict ? qnk < factor * qn : qnk <= factor * qn);
        }
      }
      record("denominator_growth", ok, 0.0, {{"bound_D", angle.bound()}});
    }
    {
      const NormRecursionReport report = verify_norm_recursion(angle, angle.depth() - 2);
      bool decreasing = true, bounded = true;
      for (const auto& row : report.rows) {
        decreasing = decreasing && row.decreasing;
        bounded = bounded && row.bounded;
      }
      record("norm_recursion", report.passed, report.max_residual,
             {{"indices", report.rows.size()}});
      record("norm_decreasing", decreasing, 0.0, json::object());
      record("norm_bounds", bounded, 0.0, json::object());
    }
    {
      const BigInt& q_depth = angle.denominator(angle.depth());
      const std::uint64_t K =
          q_depth < 10000 ? static_cast<std::uint64_t>(q_depth) : 10000;
      const auto moments = closest_returns(angle, K);
      std::vector<std::uint64_t> expected;
      for (int n = 0; n <= angle.depth(); ++n) {
        const BigInt& q = angle.denominator(n);
        if (q > K) break;
        const auto v = static_cast<std::uint64_t>(q);
        if (expected.empty() || expected.back() != v) expected.push_back(v);
      }
      record("closest_returns", moments == expected, 0.0,
             {{"K", K}, {"moments", moments.size()}});
    }
    {
      bool ok = true;
      double residual = 0.0;
      std::size_t checked = 0;
      try {
        const PieceDecomposition pieces = decompose(params, config.r_max);
        residual = pieces.validation.max_residual;
        checked = pieces.validation.oracle_checks;
        for (std::uint64_t k : pieces.indices) {
          ok = ok && is_convergent_denominator(angle, k);
        }
        for (double r : geometric_grid(std::min(1e-3, config.r_max), config.r_max,
                                       config.samples)) {
          ok = ok && is_convergent_denominator(angle, envelope_value(params, r).argmin);
        }
      } catch (const InconsistencyError&) {
        ok = false;
      }
      record("envelope_oracle", ok, residual,
             {{"oracle_checks", checked}, {"r_max", config.r_max}});
    }

    json doc = header("verify", config, params);
    doc["checks"] = std::move(checks);
    doc["passed"] = all;
    return {all ? kSuccess : kCertificationFailure, to_document(doc),
            all ? std::string{} : "one or more checks failed"};
  });
}

CommandResult cmd_distort(const RunConfig& config) {
  return guarded([&]() -> CommandResult {
    config.validate();
    SamplerConfig sampler;
    sampler.sample_count = config.samples;
    sampler.seed = config.seed;
    sampler.r_max = config.r_max;

    DistortionReport report;
    const char* name = "h";
    if (config.map == MapChoice::h) {
      report = certify_bilipschitz(sampler);
    } else {
      const RegionParams params = make_params(config);
      if (params.angle().is_rational()) {
        throw InputError("maps f and fh need an irrational angle");
      }
      if (config.map == MapChoice::f) {
        name = "f";
        report = certify_quasi_isometry(params, sampler);
      } else {
        name = "fh";
        report = certify_composite(params, sampler);
      }
    }

    std::string doc;
    if (config.format == OutputFormat::csv) {
      const json j = distortion_json(report, name);
      std::string head, row;
      for (const auto& [key, value] : j.items()) {
        if (!head.empty()) {
          head += ',';
          row += ',';
        }
        head += key;
        row += value.is_number_float() ? format_double(value.get<double>())
               : value.is_string()     ? value.get<std::string>()
                                       : value.dump();
      }
      doc = head + '\n' + row + '\n';
    } else {
      doc = to_document(distortion_json(report, name));
    }
    return {report.certified ? kSuccess : kCertificationFailure, doc,
            report.certified ? std::string{} : "distortion bounds violated"};
  });
}

PieceDecomposition decomposition_from_json(std::string_view document) {
  const json doc = json::parse(document);
  PieceDecomposition out;
  out.r_max = doc.at("r_max").get<double>();
  out.breakpoints.push_back(0.0);
  const auto& pieces = doc.at("pieces");
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    const auto& piece = pieces[i];
    out.indices.push_back(piece.at("index").get<std::uint64_t>());
    if (piece.at("r_lo").get<double>() != out.breakpoints.back()) {
      throw InputError("pieces are not contiguous");
    }
    out.breakpoints.push_back(piece.at("r_hi").get<double>());
  }
  out.validation.oracle_checks =
      doc.at("validation").at("oracle_checks").get<std::size_t>();
  out.validation.max_residual =
      doc.at("validation").at("max_residual").get<double>();
  return out;
}

PieceDecomposition decomposition_from_csv(std::string_view document) {
  std::istringstream in{std::string(document)};
  std::string line;
  if (!std::getline(in, line) || line != "index,r_lo,r_hi") {
    throw InputError("unexpected CSV header");
  }
  PieceDecomposition out;
  out.breakpoints.push_back(0.0);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream cells(line);
    std::string index, lo, hi;
    std::getline(cells, index, ',');
    std::getline(cells, lo, ',');
    std::getline(cells, hi, ',');
    out.indices.push_back(std::stoull(index));
    if (std::stod(lo) != out.breakpoints.back()) {
      throw InputError("pieces are not contiguous");
    }
    out.breakpoints.push_back(std::stod(hi));
  }
  if (out.indices.empty()) throw InputError("CSV holds no pieces");
  out.r_max = out.breakpoints.back();
  return out;
}

DistortionReport distortion_from_json(std::string_view document) {
  const json doc = json::parse(document);
  DistortionReport r;
  auto number = [&](const char* key) {
    const auto& v = doc.at(key);
    return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
  };
  r.sample_count = doc.at("sample_count").get<std::size_t>();
  r.seed = doc.at("seed").get<std::uint64_t>();
  r.rejected_pairs = doc.at("rejected_pairs").get<std::size_t>();
  r.min_ratio = number("min_ratio");
  r.max_ratio = number("max_ratio");
  r.max_additive_defect = number("max_additive_defect");
  r.constant_C = number("constant_C");
  r.ratio_lower = number("ratio_lower");
  r.ratio_upper = number("ratio_upper");
  r.defect_bound = number("defect_bound");
  r.bound_A = number("bound_A");
  r.bound_B = number("bound_B");
  r.max_displacement = number("max_displacement");
  r.max_preimage_error = number("max_preimage_error");
  r.horosphere_error = number("horosphere_error");
  r.certified = doc.at("certified").get<bool>();
  if (!(r.min_ratio > 0.0 && r.min_ratio <= r.max_ratio)) {
    throw InputError("distortion report violates 0 < min_ratio <= max_ratio");
  }
  if (!(r.max_additive_defect >= 0.0)) {
    throw InputError("distortion report has a negative additive defect");
  }
  return r;
}

RegionParams params_from_json(std::string_view document) {
  const json doc = json::parse(document);
  const auto& angle = doc.at("angle");
  AngleOptions options;
  options.depth = angle.at("depth").get<int>();
  options.guard_depth = angle.at("guard_depth").get<int>();
  CFAngle parsed = parse_angle(angle.at("spec").get<std::string>(), options);
  if (parsed.bound() != angle.at("bound_D").get<std::uint64_t>()) {
    throw InputError("echoed bound_D does not match the angle");
  }
  return RegionParams(std::move(parsed), doc.at("epsilon").get<double>());
}

int run(int argc, const char* const* argv) {
  CLI::App app{"Margulis region boundary of an irrational screw parabolic in H^4"};
  app.require_subcommand(1);

  RunConfig config;
  int guard_depth = 0;
  std::string format = "json";
  std::string map = "h";

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--angle", config.angle_spec,
                    "partial quotients '1,2,2', 'pre:[..];per:[..]', "
                    "'rat:p/q', a decimal, or 'golden'")
        ->capture_default_str();
    sub->add_option("--epsilon", config.epsilon, "displacement threshold")
        ->capture_default_str();
    sub->add_option("--depth", config.depth, "working continued-fraction depth")
        ->capture_default_str();
    sub->add_option("--guard-depth", guard_depth,
                    "surrogate depth (default depth + 40)");
    sub->add_option("--rmax", config.r_max, "right end of the radial window")
        ->capture_default_str();
    sub->add_option("--samples", config.samples, "sample count")
        ->capture_default_str();
    sub->add_option("--seed", config.seed, "random seed")->capture_default_str();
    sub->add_option("--format", format, "json or csv")
        ->check(CLI::IsMember({"json", "csv"}))
        ->capture_default_str();
    sub->add_option("--out", config.output_path, "output file (default stdout)");
  };

  auto* decompose_cmd = app.add_subcommand("decompose", "piece structure of b(r)");
  auto* sample_cmd = app.add_subcommand("sample", "b(r) on a geometric grid");
  auto* verify_cmd = app.add_subcommand("verify", "continued-fraction and oracle checks");
  auto* distort_cmd = app.add_subcommand("distort", "sampled distortion certificate");
  for (auto* sub : {decompose_cmd, sample_cmd, verify_cmd, distort_cmd}) {
    add_common(sub);
  }
  distort_cmd->add_option("--map", map, "h, f or fh")
      ->check(CLI::IsMember({"h", "f", "fh"}))
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kSuccess : kInputError;
  }

  for (auto* sub : {decompose_cmd, sample_cmd, verify_cmd, distort_cmd}) {
    if (sub->parsed() && sub->count("--guard-depth") > 0) {
      config.guard_depth = guard_depth;
    }
  }
  config.format = format == "csv" ? OutputFormat::csv : OutputFormat::json;
  config.map = map == "f" ? MapChoice::f : map == "fh" ? MapChoice::fh : MapChoice::h;

  CommandResult result;
  if (decompose_cmd->parsed()) {
    result = cmd_decompose(config);
  } else if (sample_cmd->parsed()) {
    result = cmd_sample(config);
  } else if (verify_cmd->parsed()) {
    result = cmd_verify(config);
  } else {
    result = cmd_distort(config);
  }

  if (!result.diagnostic.empty()) std::cerr << "margulis: " << result.diagnostic << '\n';
  if (!result.document.empty()) {
    if (config.output_path.empty()) {
      std::cout << result.document;
    } else {
      std::ofstream out(config.output_path, std::ios::binary);
      if (!out || !(out << result.document)) {
        std::cerr << "margulis: cannot write " << config.output_path << '\n';
        return kInputError;
      }
    }
  }
  return result.exit_code;
}

}  // namespace margulis::cli
