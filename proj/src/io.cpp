#include "stefanlab/io.hpp"

#include <charconv>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

namespace stefanlab {

using nlohmann::json;

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw std::runtime_error("format_double failed");
  return std::string(buf, ptr);
}

std::uint64_t fnv1a_hash(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string fnv1a_hex(const std::string& data) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a_hash(data)));
  return buf;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

double parse_double(const std::string& tok, long line) {
  double v;
  const char* b = tok.data();
  const char* e = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || ptr != e)
    throw ParseError("malformed number '" + tok + "'", line);
  return v;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace

void write_field_csv(const SpaceTimeField& field, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  for (int d = 0; d < field.dim(); ++d) out << "x" << (d + 1) << ",";
  out << "t,u,mask\n";
  std::string row;
  for (int l = 0; l < field.levels(); ++l) {
    const std::string ts = format_double(field.level_time(l));
    for (int node = 0; node < field.nodes(); ++node) {
      row.clear();
      const Vec x = field.position(node);
      for (int d = 0; d < field.dim(); ++d) {
        row += format_double(x[d]);
        row += ',';
      }
      row += ts;
      row += ',';
      row += format_double(field.value(node, l));
      row += ',';
      row += field.active(node, l) ? '1' : '0';
      row += '\n';
      out << row;
    }
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

void read_field_csv(SpaceTimeField& field, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::string line;
  long lineno = 0;
  if (!std::getline(in, line)) throw ParseError("missing header", 1);
  ++lineno;
  const auto header = split_csv(line);
  if (static_cast<int>(header.size()) != field.dim() + 3)
    throw ParseError("unexpected column count in header", lineno);

  for (int l = 0; l < field.levels(); ++l)
    for (int node = 0; node < field.nodes(); ++node) {
      if (!std::getline(in, line))
        throw ParseError("truncated file: expected more rows", lineno + 1);
      ++lineno;
      const auto tok = split_csv(line);
      if (static_cast<int>(tok.size()) != field.dim() + 3)
        throw ParseError("unexpected column count", lineno);
      const Vec x = field.position(node);
      for (int d = 0; d < field.dim(); ++d) {
        const double xv = parse_double(tok[d], lineno);
        if (std::abs(xv - x[d]) > 1e-12 * (1.0 + std::abs(x[d])))
          throw ParseError("coordinate mismatch against the run layout", lineno);
      }
      const double t = parse_double(tok[field.dim()], lineno);
      if (std::abs(t - field.level_time(l)) > 1e-12 * (1.0 + std::abs(t)))
        throw ParseError("time mismatch against the run layout", lineno);
      field.value(node, l) = parse_double(tok[field.dim() + 1], lineno);
      const std::string& m = tok[field.dim() + 2];
      if (m != "0" && m != "1") throw ParseError("mask must be 0 or 1", lineno);
      field.set_active(node, l, m == "1");
    }
}

void write_field_binary(const SpaceTimeField& field, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  const char magic[8] = {'S', 'T', 'F', 'B', '0', '0', '0', '1'};
  out.write(magic, 8);
  auto w64 = [&](double v) { out.write(reinterpret_cast<const char*>(&v), 8); };
  auto wi = [&](std::int64_t v) { out.write(reinterpret_cast<const char*>(&v), 8); };
  wi(field.dim());
  for (int d = 0; d < field.dim(); ++d) w64(field.domain().center[d]);
  w64(field.domain().radius);
  w64(field.domain().t_start);
  w64(field.domain().t_end);
  w64(field.h());
  w64(field.dt());
  wi(static_cast<std::int64_t>(field.shape()));
  w64(field.inner_radius());
  wi(field.nodes());
  wi(field.levels());
  out.write(reinterpret_cast<const char*>(field.raw_values().data()),
            static_cast<std::streamsize>(field.raw_values().size() * 8));
  out.write(reinterpret_cast<const char*>(field.raw_mask().data()),
            static_cast<std::streamsize>(field.raw_mask().size()));
  if (!out) throw std::runtime_error("write failed: " + path);
}

SpaceTimeField read_field_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  char magic[8];
  in.read(magic, 8);
  if (std::memcmp(magic, "STFB0001", 8) != 0)
    throw std::runtime_error("bad magic in " + path);
  auto r64 = [&]() {
    double v;
    in.read(reinterpret_cast<char*>(&v), 8);
    return v;
  };
  auto ri = [&]() {
    std::int64_t v;
    in.read(reinterpret_cast<char*>(&v), 8);
    return v;
  };
  ParabolicCylinder dom;
  const int n = static_cast<int>(ri());
  dom.center = Vec(n);
  for (int d = 0; d < n; ++d) dom.center[d] = r64();
  dom.radius = r64();
  dom.t_start = r64();
  dom.t_end = r64();
  const double h = r64();
  const double dt = r64();
  const auto shape = static_cast<DomainShape>(ri());
  const double inner = r64();
  SpaceTimeField field = SpaceTimeField::create(dom, h, dt, shape, inner);
  const std::int64_t nodes = ri();
  const std::int64_t levels = ri();
  if (nodes != field.nodes() || levels != field.levels())
    throw std::runtime_error("layout mismatch in " + path);
  in.read(reinterpret_cast<char*>(field.raw_values().data()),
          static_cast<std::streamsize>(field.raw_values().size() * 8));
  in.read(reinterpret_cast<char*>(field.raw_mask().data()),
          static_cast<std::streamsize>(field.raw_mask().size()));
  if (!in) throw std::runtime_error("truncated binary dump: " + path);
  return field;
}

void write_front_csv(const FrontGraph& front, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "t";
  for (int d = 0; d < front.dim - 1; ++d) out << ",x" << (d + 1);
  out << ",s\n";
  for (int l = 0; l < front.levels(); ++l) {
    const std::string ts = format_double(front.times[l]);
    for (int col = 0; col < front.columns; ++col) {
      out << ts;
      const Vec xp = front.xprime(col);
      for (int d = 0; d < front.dim - 1; ++d) out << ',' << format_double(xp[d]);
      out << ',' << format_double(front.height(l, col)) << '\n';
    }
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

void read_front_csv(FrontGraph& front, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::string line;
  long lineno = 0;
  if (!std::getline(in, line)) throw ParseError("missing header", 1);
  ++lineno;
  front.heights.assign(
      static_cast<std::size_t>(front.levels()) * front.columns, 0.0);
  std::vector<double> times(front.levels(), 0.0);
  for (int l = 0; l < front.levels(); ++l)
    for (int col = 0; col < front.columns; ++col) {
      if (!std::getline(in, line))
        throw ParseError("truncated file: expected more rows", lineno + 1);
      ++lineno;
      const auto tok = split_csv(line);
      if (static_cast<int>(tok.size()) != front.dim + 1)
        throw ParseError("unexpected column count", lineno);
      times[l] = parse_double(tok.front(), lineno);
      front.heights[static_cast<std::size_t>(l) * front.columns + col] =
          parse_double(tok.back(), lineno);
    }
  front.times = std::move(times);
}

namespace {

json scenario_to_json(const StefanScenario& sc) {
  json j;
  j["name"] = sc.name;
  j["n"] = sc.n;
  j["operator"] = sc.op.name();
  j["operator_K"] = sc.op.K;
  j["lambda"] = sc.lambda;
  j["K"] = sc.K;
  j["box_center"] = std::vector<double>(sc.box_center.data(),
                                        sc.box_center.data() + sc.box_center.size());
  j["box_radius"] = sc.box_radius;
  j["t_start"] = sc.t_start;
  j["h"] = sc.h;
  j["store_stride"] = sc.store_stride;
  j["front_stride"] = sc.front_stride;
  j["f_sup"] = sc.f_sup;
  j["f_neg_sup"] = sc.f_neg_sup;
  j["slope_etas"] = sc.slope_etas;
  j["seed"] = sc.seed;
  return j;
}

void scenario_from_json(const json& j, StefanScenario& sc) {
  sc.name = j.at("name").get<std::string>();
  sc.n = j.at("n").get<int>();
  const std::string op = j.at("operator").get<std::string>();
  if (op == "trace") sc.op.kind = OperatorKind::Trace;
  else if (op == "pucci_plus") sc.op.kind = OperatorKind::PucciPlus;
  else if (op == "pucci_minus") sc.op.kind = OperatorKind::PucciMinus;
  else if (op == "bellman_min") sc.op.kind = OperatorKind::BellmanMin;
  else throw std::runtime_error("unknown operator kind: " + op);
  sc.op.K = j.at("operator_K").get<double>();
  sc.lambda = j.at("lambda").get<double>();
  sc.K = j.at("K").get<double>();
  const auto bc = j.at("box_center").get<std::vector<double>>();
  sc.box_center = Eigen::Map<const Vec>(bc.data(), static_cast<long>(bc.size()));
  sc.box_radius = j.at("box_radius").get<double>();
  sc.t_start = j.at("t_start").get<double>();
  sc.h = j.at("h").get<double>();
  sc.store_stride = j.at("store_stride").get<int>();
  sc.front_stride = j.at("front_stride").get<int>();
  sc.f_sup = j.at("f_sup").get<double>();
  sc.f_neg_sup = j.at("f_neg_sup").get<double>();
  sc.slope_etas = j.at("slope_etas").get<std::vector<double>>();
  sc.seed = j.at("seed").get<std::uint64_t>();
}

}  // namespace

void save_run(const SpaceTimeSolution& solution, const RunPaths& paths,
              double wall_seconds) {
  std::filesystem::create_directories(paths.dir);
  write_field_csv(solution.field, paths.field_csv());
  write_front_csv(solution.front, paths.front_csv());

  json meta;
  meta["schema_version"] = kSchemaVersion;
  meta["scenario"] = scenario_to_json(solution.scenario);
  meta["sim_dt"] = solution.sim_dt;
  meta["front_cfl_max"] = solution.front_cfl_max;
  meta["min_pre_clip"] = solution.min_pre_clip;
  meta["boundary_policy"] = solution.boundary_policy;
  meta["wall_seconds"] = wall_seconds;
  meta["field"] = {{"h", solution.field.h()},
                   {"dt", solution.field.dt()},
                   {"levels", solution.field.levels()},
                   {"nodes", solution.field.nodes()}};
  meta["front"] = {{"levels", solution.front.levels()},
                   {"columns", solution.front.columns}};
  json slopes = json::array();
  for (const auto& ss : solution.slopes) {
    json s;
    s["eta"] = ss.eta;
    s["times"] = ss.times;
    s["abar"] = ss.abar;
    slopes.push_back(std::move(s));
  }
  meta["slopes"] = std::move(slopes);
  write_text_file(paths.meta_json(), meta.dump(1));
}

SpaceTimeSolution load_run(const RunPaths& paths) {
  const json meta = json::parse(read_text_file(paths.meta_json()));
  const int version = meta.at("schema_version").get<int>();
  if (version != kSchemaVersion)
    throw std::runtime_error(
        "run schema version " + std::to_string(version) + " != expected " +
        std::to_string(kSchemaVersion) +
        "; re-run the simulation with this build to upgrade the artifacts");

  SpaceTimeSolution sol;
  scenario_from_json(meta.at("scenario"), sol.scenario);
  sol.sim_dt = meta.at("sim_dt").get<double>();
  sol.front_cfl_max = meta.at("front_cfl_max").get<double>();
  sol.min_pre_clip = meta.at("min_pre_clip").get<double>();
  sol.boundary_policy = meta.at("boundary_policy").get<std::string>();

  ParabolicCylinder box;
  box.center = sol.scenario.box_center;
  box.radius = sol.scenario.box_radius;
  box.t_start = sol.scenario.t_start;
  box.t_end = 0.0;
  const double dt_store = meta.at("field").at("dt").get<double>();
  sol.field = SpaceTimeField::create(box, sol.scenario.h, dt_store, DomainShape::Box);
  if (sol.field.levels() != meta.at("field").at("levels").get<int>() ||
      sol.field.nodes() != meta.at("field").at("nodes").get<int>())
    throw std::runtime_error("field layout mismatch against meta.json");
  read_field_csv(sol.field, paths.field_csv());

  sol.front.dim = sol.scenario.n;
  sol.front.h = sol.field.h();
  sol.front.columns = 1;
  for (int a = 0; a < sol.scenario.n - 1; ++a) {
    sol.front.xp_npts[a] = sol.field.points_per_axis(a);
    sol.front.xp_origin[a] = sol.field.coordinate(a, 0);
    sol.front.columns *= sol.front.xp_npts[a];
  }
  const int front_levels = meta.at("front").at("levels").get<int>();
  if (meta.at("front").at("columns").get<int>() != sol.front.columns)
    throw std::runtime_error("front layout mismatch against meta.json");
  sol.front.times.assign(front_levels, 0.0);
  read_front_csv(sol.front, paths.front_csv());

  for (const auto& s : meta.at("slopes")) {
    SlopeSeries ss;
    ss.eta = s.at("eta").get<double>();
    ss.times = s.at("times").get<std::vector<double>>();
    ss.abar = s.at("abar").get<std::vector<double>>();
    sol.slopes.push_back(std::move(ss));
  }
  return sol;
}

namespace {

struct AxisMap {
  double lo = 0.0, hi = 1.0;
  double plo = 0.0, phi = 1.0;
  bool log = false;
  double operator()(double v) const {
    const double a = log ? std::log10(std::max(v, 1e-300)) : v;
    const double l = log ? std::log10(std::max(lo, 1e-300)) : lo;
    const double h = log ? std::log10(std::max(hi, 1e-300)) : hi;
    const double t = h > l ? (a - l) / (h - l) : 0.5;
    return plo + t * (phi - plo);
  }
};

}  // namespace

void write_svg(const std::string& path, const std::vector<PlotPanel>& panels,
               int width, int panel_height) {
  std::ostringstream svg;
  const int H = panel_height * static_cast<int>(panels.size());
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  int top = 0;
  for (const auto& panel : panels) {
    const double mL = 60, mR = 15, mT = 28, mB = 40;
    double xlo = 1e300, xhi = -1e300, ylo = 1e300, yhi = -1e300;
    for (const auto& s : panel.series)
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        xlo = std::min(xlo, s.x[i]);
        xhi = std::max(xhi, s.x[i]);
        ylo = std::min(ylo, s.y[i]);
        yhi = std::max(yhi, s.y[i]);
      }
    if (xlo > xhi) {
      xlo = 0;
      xhi = 1;
      ylo = 0;
      yhi = 1;
    }
    if (ylo == yhi) {
      ylo -= 0.5;
      yhi += 0.5;
    }
    if (xlo == xhi) {
      xlo -= 0.5;
      xhi += 0.5;
    }
    AxisMap X{xlo, xhi, mL, width - mR, panel.logx};
    AxisMap Y{ylo, yhi, top + panel_height - mB, top + mT, panel.logy};

    svg << "<rect x=\"" << mL << "\" y=\"" << top + mT << "\" width=\""
        << (width - mL - mR) << "\" height=\"" << (panel_height - mT - mB)
        << "\" fill=\"none\" stroke=\"#444\"/>\n";
    svg << "<text x=\"" << mL << "\" y=\"" << top + 18 << "\" font-weight=\"bold\">"
        << panel.title << "</text>\n";
    svg << "<text x=\"" << (width / 2) << "\" y=\"" << top + panel_height - 8
        << "\" text-anchor=\"middle\">" << panel.xlabel << "</text>\n";
    svg << "<text x=\"14\" y=\"" << (top + panel_height / 2)
        << "\" transform=\"rotate(-90 14 " << (top + panel_height / 2) << ")\""
        << " text-anchor=\"middle\">" << panel.ylabel << "</text>\n";

    svg << "<text x=\"" << mL << "\" y=\"" << top + panel_height - mB + 14
        << "\">" << format_double(xlo) << "</text>\n";
    svg << "<text x=\"" << width - mR << "\" y=\"" << top + panel_height - mB + 14
        << "\" text-anchor=\"end\">" << format_double(xhi) << "</text>\n";
    svg << "<text x=\"" << mL - 4 << "\" y=\"" << top + mT + 4
        << "\" text-anchor=\"end\">" << format_double(yhi) << "</text>\n";
    svg << "<text x=\"" << mL - 4 << "\" y=\"" << top + panel_height - mB
        << "\" text-anchor=\"end\">" << format_double(ylo) << "</text>\n";

    int legend_y = top + mT + 14;
    for (const auto& s : panel.series) {
      if (s.points_only) {
        for (std::size_t i = 0; i < s.x.size(); ++i)
          svg << "<circle cx=\"" << X(s.x[i]) << "\" cy=\"" << Y(s.y[i])
              << "\" r=\"3\" fill=\"" << s.color << "\"/>\n";
      } else if (!s.x.empty()) {
        svg << "<polyline fill=\"none\" stroke=\"" << s.color
            << "\" stroke-width=\"1.4\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i)
          svg << X(s.x[i]) << ',' << Y(s.y[i]) << ' ';
        svg << "\"/>\n";
      }
      if (!s.label.empty()) {
        svg << "<text x=\"" << width - mR - 6 << "\" y=\"" << legend_y
            << "\" text-anchor=\"end\" fill=\"" << s.color << "\">" << s.label
            << "</text>\n";
        legend_y += 14;
      }
    }
    top += panel_height;
  }
  svg << "</svg>\n";
  write_text_file(path, svg.str());
}

}  // namespace stefanlab
