#pragma once

#include <string>
#include <vector>

#include "stefanlab/stefan.hpp"

namespace stefanlab {

/// Shortest representation that round-trips the double exactly.
std::string format_double(double v);

std::uint64_t fnv1a_hash(const std::string& data);
std::string fnv1a_hex(const std::string& data);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

class ParseError : public std::runtime_error {
public:
  ParseError(const std::string& what, long line)
      : std::runtime_error(what + " at line " + std::to_string(line)), line_(line) {}
  long line() const { return line_; }

private:
  long line_;
};

/// Field dump: header x1,...,xn,t,u,mask; one row per node per time level,
/// level-major then node index. Values round-trip bit-exactly.
void write_field_csv(const SpaceTimeField& field, const std::string& path);
/// Reads values and mask into a field with the given layout; coordinates in
/// the file are checked against the layout.
void read_field_csv(SpaceTimeField& field, const std::string& path);

/// Optional binary dump (layout header + raw values); round-trips bit-exactly.
void write_field_binary(const SpaceTimeField& field, const std::string& path);
SpaceTimeField read_field_binary(const std::string& path);

/// Front series: header t,x1,...,x_{n-1},s; one row per level per column.
void write_front_csv(const FrontGraph& front, const std::string& path);
void read_front_csv(FrontGraph& front, const std::string& path);

constexpr int kSchemaVersion = 1;

struct RunPaths {
  std::string dir;
  std::string config_echo() const { return dir + "/config.echo"; }
  std::string inputs_hash() const { return dir + "/inputs.hash"; }
  std::string field_csv() const { return dir + "/field.csv"; }
  std::string front_csv() const { return dir + "/front.csv"; }
  std::string meta_json() const { return dir + "/meta.json"; }
  std::string report_json() const { return dir + "/report.json"; }
  std::string dashboard_svg() const { return dir + "/dashboard.svg"; }
  std::string certificates_dir() const { return dir + "/certificates"; }
};

/// Writes field.csv, front.csv and meta.json (scenario echo, schema version,
/// measured CFL, wall time, dense slope series).
void save_run(const SpaceTimeSolution& solution, const RunPaths& paths,
              double wall_seconds);
/// Rebuilds the solution from the artifacts; refuses mismatched schema
/// versions with an upgrade hint.
SpaceTimeSolution load_run(const RunPaths& paths);

// minimal SVG plotting: polyline series on a framed axis box
struct PlotSeries {
  std::vector<double> x, y;
  std::string color = "#1f6fb2";
  std::string label;
  bool points_only = false;
};

struct PlotPanel {
  std::string title, xlabel, ylabel;
  std::vector<PlotSeries> series;
  bool logx = false, logy = false;
};

void write_svg(const std::string& path, const std::vector<PlotPanel>& panels,
               int width = 760, int panel_height = 300);

}  // namespace stefanlab
