#include "stefanlab/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <map>
#include <sstream>

#include "stefanlab/io.hpp"

namespace stefanlab {

using nlohmann::json;

void ScenarioConfig::validate() const {
  if (n < 1 || n > 3) throw std::invalid_argument("config: n must be 1, 2 or 3");
  if (!(lambda >= 0.0 && lambda <= 1.0))
    throw std::invalid_argument("config: lambda must be in [0,1]");
  if (!(K > 0.0)) throw std::invalid_argument("config: K must be positive");
  if (static_cast<int>(box_center.size()) != n)
    throw std::invalid_argument("config: box_center must have n entries");
  if (!(box_radius > 0.0)) throw std::invalid_argument("config: box_radius");
  if (!(t_start < 0.0)) throw std::invalid_argument("config: t_start must be negative");
  if (!(h > 0.0)) throw std::invalid_argument("config: h must be positive");
  if (store_stride < 1 || front_stride < 1 || store_stride % front_stride != 0)
    throw std::invalid_argument(
        "config: store_stride must be a positive multiple of front_stride");
  if (initial != "traveling_wave" && initial != "plane" && initial != "ramp")
    throw std::invalid_argument("config: initial must be traveling_wave, plane or ramp");
  if (source != "zero" && source != "const")
    throw std::invalid_argument("config: source must be zero or const");
  if (boundary != "exact" && boundary != "frozen")
    throw std::invalid_argument("config: boundary must be exact or frozen");
  if (operator_kind != "trace" && operator_kind != "pucci_plus" &&
      operator_kind != "pucci_minus" && operator_kind != "bellman_min")
    throw std::invalid_argument("config: unknown operator kind " + operator_kind);
  if (!(operator_K >= 1.0)) throw std::invalid_argument("config: operator K must be >= 1");
  if (!(p0 > 0.0 && p0 < 1.0)) throw std::invalid_argument("config: p0 must be in (0,1)");
  if (!(alpha0 > 0.0 && alpha0 <= 1.0))
    throw std::invalid_argument("config: alpha0 must be in (0,1]");
  if (eta_sweep.empty()) throw std::invalid_argument("config: eta_sweep empty");
  for (double e : eta_sweep)
    if (!(e > 0.0)) throw std::invalid_argument("config: eta_sweep entries positive");
  if (!(ball_radius > 0.0)) throw std::invalid_argument("config: ball_radius");
  if (direction_samples < 4) throw std::invalid_argument("config: direction_samples");
  if (nondeg_t0_count < 1) throw std::invalid_argument("config: nondeg_t0_count");
  if (!(scale > 0.0)) throw std::invalid_argument("config: scale must be positive");
}

namespace {

struct KeyValue {
  std::string section, key, value;
  long line;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<KeyValue> tokenize_ini(const std::string& text) {
  std::vector<KeyValue> out;
  std::istringstream in(text);
  std::string line, section;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ParseError("unterminated section header", lineno);
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected key = value", lineno);
    out.push_back({section, trim(line.substr(0, eq)), trim(line.substr(eq + 1)), lineno});
  }
  return out;
}

double to_double(const std::string& v, long line) {
  double out;
  const char* b = v.data();
  auto [p, ec] = std::from_chars(b, b + v.size(), out);
  if (ec != std::errc() || p != b + v.size())
    throw ParseError("malformed number '" + v + "'", line);
  return out;
}

std::vector<double> to_doubles(const std::string& v, long line) {
  std::vector<double> out;
  std::istringstream in(v);
  std::string tok;
  while (in >> tok) out.push_back(to_double(tok, line));
  if (out.empty()) throw ParseError("expected a list of numbers", line);
  return out;
}

std::vector<Mat> to_matrices(const std::string& v, long line) {
  // row-major whitespace-separated entries, matrices separated by ';'
  std::vector<Mat> out;
  std::istringstream blocks(v);
  std::string block;
  while (std::getline(blocks, block, ';')) {
    block = trim(block);
    if (block.empty()) continue;
    const auto vals = to_doubles(block, line);
    const int n = static_cast<int>(std::lround(std::sqrt(double(vals.size()))));
    if (n * n != static_cast<int>(vals.size()))
      throw ParseError("matrix entries must form a square", line);
    Mat M(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) M(i, j) = vals[n * i + j];
    out.push_back(std::move(M));
  }
  if (out.empty()) throw ParseError("expected at least one matrix", line);
  return out;
}

void apply_key(ScenarioConfig& cfg, const std::string& section,
               const std::string& key, const std::string& value, long line) {
  auto num = [&] { return to_double(value, line); };
  auto integer = [&] { return static_cast<int>(std::llround(to_double(value, line))); };
  if (section == "scenario") {
    if (key == "name") cfg.name = value;
    else if (key == "n") cfg.n = integer();
    else if (key == "lambda") cfg.lambda = num();
    else if (key == "K") cfg.K = num();
    else if (key == "box_center") cfg.box_center = to_doubles(value, line);
    else if (key == "box_radius") cfg.box_radius = num();
    else if (key == "t_start") cfg.t_start = num();
    else if (key == "h") cfg.h = num();
    else if (key == "store_stride") cfg.store_stride = integer();
    else if (key == "front_stride") cfg.front_stride = integer();
    else if (key == "initial") cfg.initial = value;
    else if (key == "c") cfg.c = num();
    else if (key == "abar") cfg.abar = num();
    else if (key == "b0") cfg.b0 = num();
    else if (key == "front0") cfg.front0 = num();
    else if (key == "ramp_slope") cfg.ramp_slope = num();
    else if (key == "source") cfg.source = value;
    else if (key == "f_value") cfg.f_value = num();
    else if (key == "boundary") cfg.boundary = value;
    else if (key == "scale") cfg.scale = num();
    else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(std::stoull(value));
    else throw ParseError("unknown key [scenario] " + key, line);
  } else if (section == "operator") {
    if (key == "kind") cfg.operator_kind = value;
    else if (key == "K") cfg.operator_K = num();
    else if (key == "bellman_matrices") cfg.bellman_matrices = to_matrices(value, line);
    else throw ParseError("unknown key [operator] " + key, line);
  } else if (section == "analysis") {
    if (key == "p0") cfg.p0 = num();
    else if (key == "alpha0") cfg.alpha0 = num();
    else if (key == "eta_sweep") cfg.eta_sweep = to_doubles(value, line);
    else if (key == "ball_radius") cfg.ball_radius = num();
    else if (key == "eps0_coeff") cfg.eps0_coeff = num();
    else if (key == "direction_samples") cfg.direction_samples = integer();
    else if (key == "nondeg_t0_count") cfg.nondeg_t0_count = integer();
    else if (key == "lambda_list") cfg.lambda_list = to_doubles(value, line);
    else throw ParseError("unknown key [analysis] " + key, line);
  } else if (section == "output") {
    if (key == "dir") cfg.out_dir = value;
    else if (key == "field_dump_levels") cfg.field_dump_levels = integer();
    else throw ParseError("unknown key [output] " + key, line);
  } else {
    throw ParseError("unknown section [" + section + "]", line);
  }
}

ScenarioConfig parse_json_config(const std::string& text) {
  ScenarioConfig cfg;
  const json j = json::parse(text);
  for (const auto& [section, body] : j.items()) {
    if (!body.is_object())
      throw std::runtime_error("config: section " + section + " must be an object");
    for (const auto& [key, val] : body.items()) {
      std::string rendered;
      if (val.is_string()) rendered = val.get<std::string>();
      else if (val.is_array()) {
        std::ostringstream ss;
        for (const auto& x : val) ss << x.get<double>() << ' ';
        rendered = ss.str();
      } else {
        rendered = val.dump();
      }
      apply_key(cfg, section, key, trim(rendered), 0);
    }
  }
  return cfg;
}

}  // namespace

ScenarioConfig parse_config_text(const std::string& text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  ScenarioConfig cfg;
  if (first != std::string::npos && text[first] == '{') {
    cfg = parse_json_config(text);
  } else {
    for (const auto& kv : tokenize_ini(text))
      apply_key(cfg, kv.section, kv.key, kv.value, kv.line);
  }
  cfg.validate();
  return cfg;
}

ScenarioConfig parse_config_file(const std::string& path) {
  std::ifstream probe(path);
  if (!probe) throw std::runtime_error("config file not found: " + path);
  probe.close();
  return parse_config_text(read_text_file(path));
}

std::string config_echo(const ScenarioConfig& cfg) {
  std::ostringstream out;
  auto d = [](double v) { return format_double(v); };
  out << "[scenario]\n";
  out << "name = " << cfg.name << "\n";
  out << "n = " << cfg.n << "\n";
  out << "lambda = " << d(cfg.lambda) << "\n";
  out << "K = " << d(cfg.K) << "\n";
  out << "box_center =";
  for (double v : cfg.box_center) out << ' ' << d(v);
  out << "\n";
  out << "box_radius = " << d(cfg.box_radius) << "\n";
  out << "t_start = " << d(cfg.t_start) << "\n";
  out << "h = " << d(cfg.h) << "\n";
  out << "store_stride = " << cfg.store_stride << "\n";
  out << "front_stride = " << cfg.front_stride << "\n";
  out << "initial = " << cfg.initial << "\n";
  out << "c = " << d(cfg.c) << "\n";
  out << "abar = " << d(cfg.abar) << "\n";
  out << "b0 = " << d(cfg.b0) << "\n";
  out << "front0 = " << d(cfg.front0) << "\n";
  out << "ramp_slope = " << d(cfg.ramp_slope) << "\n";
  out << "source = " << cfg.source << "\n";
  out << "f_value = " << d(cfg.f_value) << "\n";
  out << "boundary = " << cfg.boundary << "\n";
  out << "scale = " << d(cfg.scale) << "\n";
  out << "seed = " << cfg.seed << "\n";
  out << "\n[operator]\n";
  out << "kind = " << cfg.operator_kind << "\n";
  out << "K = " << d(cfg.operator_K) << "\n";
  if (!cfg.bellman_matrices.empty()) {
    out << "bellman_matrices =";
    for (std::size_t m = 0; m < cfg.bellman_matrices.size(); ++m) {
      const Mat& M = cfg.bellman_matrices[m];
      if (m > 0) out << " ;";
      for (int i = 0; i < M.rows(); ++i)
        for (int j = 0; j < M.cols(); ++j) out << ' ' << d(M(i, j));
    }
    out << "\n";
  }
  out << "\n[analysis]\n";
  out << "p0 = " << d(cfg.p0) << "\n";
  out << "alpha0 = " << d(cfg.alpha0) << "\n";
  out << "eta_sweep =";
  for (double v : cfg.eta_sweep) out << ' ' << d(v);
  out << "\n";
  out << "ball_radius = " << d(cfg.ball_radius) << "\n";
  out << "eps0_coeff = " << d(cfg.eps0_coeff) << "\n";
  out << "direction_samples = " << cfg.direction_samples << "\n";
  out << "nondeg_t0_count = " << cfg.nondeg_t0_count << "\n";
  out << "lambda_list =";
  for (double v : cfg.lambda_list) out << ' ' << d(v);
  out << "\n";
  out << "\n[output]\n";
  out << "dir = " << cfg.out_dir << "\n";
  out << "field_dump_levels = " << cfg.field_dump_levels << "\n";
  return out.str();
}

StefanScenario build_scenario(const ScenarioConfig& cfg) {
  cfg.validate();
  StefanScenario sc;
  sc.n = cfg.n;
  sc.name = cfg.name;
  sc.lambda = cfg.lambda;
  sc.K = cfg.K;
  sc.box_center = Eigen::Map<const Vec>(cfg.box_center.data(),
                                        static_cast<long>(cfg.box_center.size()));
  sc.box_radius = cfg.box_radius;
  sc.t_start = cfg.t_start;
  sc.h = cfg.h;
  sc.store_stride = cfg.store_stride;
  sc.front_stride = cfg.front_stride;
  sc.slope_etas = cfg.eta_sweep;
  sc.seed = cfg.seed;

  if (cfg.operator_kind == "trace") sc.op.kind = OperatorKind::Trace;
  else if (cfg.operator_kind == "pucci_plus") sc.op.kind = OperatorKind::PucciPlus;
  else if (cfg.operator_kind == "pucci_minus") sc.op.kind = OperatorKind::PucciMinus;
  else sc.op.kind = OperatorKind::BellmanMin;
  sc.op.K = cfg.operator_K;
  sc.op.bellman_matrices = cfg.bellman_matrices;

  if (cfg.source == "const" && cfg.f_value != 0.0) {
    const double f = cfg.f_value;
    sc.source = [f](const Vec&, double) { return f; };
    sc.f_sup = std::abs(f);
    sc.f_neg_sup = std::max(0.0, -f);
  }

  const double scale = cfg.scale;
  const int n = cfg.n;
  if (cfg.initial == "traveling_wave") {
    const TravelingWave tw{cfg.c, cfg.lambda};
    const double t0 = cfg.t_start;
    sc.initial_front = [tw, t0](const Vec&) { return tw.front_height(t0); };
    sc.initial_temperature = [tw, scale](const Vec& x, double t) {
      return scale * tw.value(x, t);
    };
    if (cfg.boundary == "exact")
      sc.boundary_data = [tw, scale](const Vec& x, double t) {
        return scale * tw.value(x, t);
      };
  } else if (cfg.initial == "plane") {
    const double abar = cfg.abar, b0 = cfg.b0, lambda = cfg.lambda;
    auto b = [abar, b0, lambda](double t) { return b0 - lambda * abar * t; };
    sc.initial_front = [b, t0 = cfg.t_start](const Vec&) { return b(t0); };
    sc.initial_temperature = [abar, b, scale, n](const Vec& x, double t) {
      return scale * abar * std::max(0.0, x[n - 1] - b(t));
    };
    if (cfg.boundary == "exact")
      sc.boundary_data = [abar, b, scale, n](const Vec& x, double t) {
        return scale * abar * std::max(0.0, x[n - 1] - b(t));
      };
  } else {  // ramp
    const double front0 = cfg.front0, slope = cfg.ramp_slope;
    sc.initial_front = [front0](const Vec&) { return front0; };
    sc.initial_temperature = [front0, slope, scale, n](const Vec& x, double) {
      return scale * slope * std::max(0.0, x[n - 1] - front0);
    };
    // ramp keeps the frozen-initial-data policy unless declared otherwise
  }
  sc.validate();
  return sc;
}

}  // namespace stefanlab
