#include "mfglab/scenario.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

namespace mfglab {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

struct ParseState {
  std::vector<std::string> errors;
  int line = 0;

  void error(const std::string& msg) {
    errors.push_back("line " + std::to_string(line) + ": " + msg);
  }
};

bool parse_doubles(const std::string& value, std::vector<double>& out) {
  out.clear();
  std::istringstream is(value);
  double v;
  while (is >> v) out.push_back(v);
  is.clear();
  std::string rest;
  is >> rest;
  return rest.empty();
}

/// keys come in families like f1_in, g2; splits the trailing index
bool split_indexed(const std::string& key, const std::string& prefix,
                   const std::string& suffix, int& index) {
  if (key.size() <= prefix.size() + suffix.size()) return false;
  if (key.compare(0, prefix.size(), prefix) != 0) return false;
  if (key.compare(key.size() - suffix.size(), suffix.size(), suffix) != 0) return false;
  const std::string mid = key.substr(prefix.size(), key.size() - prefix.size() - suffix.size());
  if (mid.empty()) return false;
  for (char c : mid)
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  index = std::stoi(mid);
  return index >= 1;
}

void ensure_size(std::vector<std::string>& v, std::size_t n) {
  while (v.size() < n) v.push_back("0");
}

}  // namespace

Scenario parse_scenario(const std::string& text) {
  Scenario s;
  s.f_in.clear();
  s.f_out.clear();
  ParseState st;
  std::string section;
  std::istringstream stream(text);
  std::string raw;

  bool saw_inclusion_key = false;

  while (std::getline(stream, raw)) {
    ++st.line;
    std::string line = raw;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        st.error("malformed section header");
        continue;
      }
      section = line.substr(1, line.size() - 2);
      if (section != "domain" && section != "inclusion" && section != "candidate" &&
          section != "coefficients" && section != "boundary" && section != "probe" &&
          section != "experiment" && section != "tolerances")
        st.error("unknown section [" + section + "]");
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      st.error("expected 'key = value'");
      continue;
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    std::vector<double> nums;

    auto need_doubles = [&](std::size_t count) {
      if (!parse_doubles(value, nums) || (count > 0 && nums.size() != count)) {
        st.error("key '" + key + "' expects " +
                 (count > 0 ? std::to_string(count) + " numbers" : "numbers"));
        return false;
      }
      return true;
    };
    auto one_double = [&](double& target) {
      if (need_doubles(1)) target = nums[0];
    };

    int index = 0;
    if (section.empty() && key == "version") {
      double v;
      one_double(v);
      s.version = static_cast<int>(v);
    } else if (section == "domain" && key == "box") {
      if (need_doubles(4)) s.box = {nums[0], nums[1], nums[2], nums[3]};
    } else if (section == "domain" && key == "cells") {
      if (need_doubles(2)) {
        s.cells_x = static_cast<int>(nums[0]);
        s.cells_y = static_cast<int>(nums[1]);
      }
    } else if ((section == "inclusion" || section == "candidate") && key == "polygon") {
      if (!parse_doubles(value, nums) || nums.size() % 2 != 0 || nums.empty()) {
        st.error("polygon expects an even list of coordinates");
      } else {
        auto& target = section == "inclusion" ? s.inclusion_polygon : s.candidate_polygon;
        target.clear();
        for (std::size_t k = 0; k + 1 < nums.size(); k += 2)
          target.push_back({nums[k], nums[k + 1]});
        if (section == "inclusion") saw_inclusion_key = true;
      }
    } else if (section == "candidate" && key == "corner") {
      if (need_doubles(5)) {
        s.scan_corners.push_back({nums[0], nums[1], nums[2], nums[3], nums[4]});
      }
    } else if (section == "coefficients" && key == "diffusion") {
      one_double(s.diffusion);
    } else if (section == "coefficients" && key == "taylor_order") {
      double v;
      one_double(v);
      s.taylor_order = static_cast<int>(v);
    } else if (section == "coefficients" && key == "kappa_in") {
      s.kappa_in = value;
    } else if (section == "coefficients" && key == "kappa_out") {
      s.kappa_out = value;
    } else if (section == "coefficients" && key == "lambda_in") {
      one_double(s.lambda_in);
    } else if (section == "coefficients" && key == "lambda_out") {
      one_double(s.lambda_out);
    } else if (section == "coefficients" && split_indexed(key, "f", "_in", index)) {
      ensure_size(s.f_in, index);
      s.f_in[index - 1] = value;
    } else if (section == "coefficients" && split_indexed(key, "f", "_out", index)) {
      ensure_size(s.f_out, index);
      s.f_out[index - 1] = value;
    } else if (section == "boundary" && split_indexed(key, "f", "", index)) {
      ensure_size(s.f_boundary, index);
      s.f_boundary[index - 1] = value;
    } else if (section == "boundary" && split_indexed(key, "g", "", index)) {
      ensure_size(s.g_boundary, index);
      s.g_boundary[index - 1] = value;
    } else if (section == "boundary" && key == "epsilon") {
      one_double(s.epsilon);
    } else if (section == "boundary" && key == "epsilon_ladder") {
      if (need_doubles(0)) s.epsilon_ladder = nums;
    } else if (section == "probe" && key == "tau_ladder") {
      if (need_doubles(0)) s.tau_ladder = nums;
    } else if (section == "probe" && key == "alpha") {
      if (need_doubles(0)) s.alphas = nums;
    } else if (section == "probe" && key == "cone") {
      if (need_doubles(3)) {
        if (nums[0] != 2 && nums[0] != 3)
          st.error("probe cone dimension must be 2 or 3");
        else
          s.probe_cones.push_back(
              {static_cast<int>(nums[0]), nums[1], nums[2]});
      }
    } else if (section == "probe" && key == "cone_radius") {
      if (value == "auto")
        s.cone_radius = 0.0;
      else
        one_double(s.cone_radius);
    } else if (section == "experiment" && key == "kind") {
      s.kind = value;
    } else if (section == "experiment" && key == "jump_snr") {
      one_double(s.jump_snr);
    } else if (section == "experiment" && key == "seed") {
      double v;
      one_double(v);
      s.seed = static_cast<unsigned long long>(v);
    } else if (section == "tolerances" && key == "newton") {
      one_double(s.tol_newton);
    } else if (section == "tolerances" && key == "small_data") {
      one_double(s.small_data);
    } else if (section == "tolerances" && key == "quadrature") {
      one_double(s.tol_quadrature);
    } else if (section == "tolerances" && key == "transmission") {
      one_double(s.transmission);
    } else {
      st.error("unknown key '" + key + "' in section [" + section + "]");
    }
  }

  // ---- schema validation (collected, not fail-fast) ----
  st.line = 0;
  auto verror = [&](const std::string& msg) { st.errors.push_back(msg); };

  if (s.version != 1) verror("unsupported scenario version");
  if (!(s.box[2] > s.box[0]) || !(s.box[3] > s.box[1]))
    verror("domain box is empty");
  if (s.cells_x < 2 || s.cells_y < 2) verror("grid needs at least 2 cells per axis");
  if (!(s.diffusion > 0)) verror("diffusion must be positive");
  if (s.taylor_order < 1) verror("taylor_order must be >= 1");
  if (saw_inclusion_key && s.inclusion_polygon.size() < 3)
    verror("polygon needs >= 3 vertices");
  if (!s.candidate_polygon.empty() && s.candidate_polygon.size() < 3)
    verror("polygon needs >= 3 vertices");
  for (const auto& c : s.scan_corners) {
    if (!(c.half_angle > 0) || !(c.half_angle < std::numbers::pi / 2))
      verror("scan corner half angle must lie in (0, pi/2)");
    if (!(c.radius > 0)) verror("scan corner radius must be positive");
  }
  for (const auto& c : s.probe_cones) {
    if (!(c.half_angle > 0) || !(c.half_angle < std::numbers::pi / 2))
      verror("probe cone half angle must lie in (0, pi/2)");
    if (!(c.radius > 0)) verror("probe cone radius must be positive");
  }
  if (s.kind != "kappa" && s.kind != "f-order-1" && s.kind != "f-order-2" &&
      s.kind != "verify" && s.kind != "custom")
    verror("unknown experiment kind '" + s.kind + "'");

  ensure_size(s.f_in, s.taylor_order);
  ensure_size(s.f_out, s.taylor_order);

  // expression totality over the domain box (and perimeter arclength)
  VariableRanges ranges;
  ranges.x = {s.box[0], s.box[2]};
  ranges.y = {s.box[1], s.box[3]};
  ranges.z = {0, 0};
  ranges.s = {0, 2 * ((s.box[2] - s.box[0]) + (s.box[3] - s.box[1]))};
  auto check_expr = [&](const std::string& what, const std::string& text_) {
    try {
      Expression::parse(text_).check_ranges(ranges);
    } catch (const ExpressionError& e) {
      verror(what + " '" + text_ + "': " + e.what());
    }
  };
  check_expr("kappa_in", s.kappa_in);
  check_expr("kappa_out", s.kappa_out);
  for (std::size_t l = 0; l < s.f_in.size(); ++l)
    check_expr("f" + std::to_string(l + 1) + "_in", s.f_in[l]);
  for (std::size_t l = 0; l < s.f_out.size(); ++l)
    check_expr("f" + std::to_string(l + 1) + "_out", s.f_out[l]);
  for (std::size_t l = 0; l < s.f_boundary.size(); ++l)
    check_expr("boundary f" + std::to_string(l + 1), s.f_boundary[l]);
  for (std::size_t l = 0; l < s.g_boundary.size(); ++l)
    check_expr("boundary g" + std::to_string(l + 1), s.g_boundary[l]);

  if (!st.errors.empty()) throw ScenarioError(st.errors);
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ScenarioError({"cannot open scenario file '" + path + "'"});
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

std::string emit_scenario(const Scenario& s) {
  std::ostringstream o;
  o << "version = " << s.version << "\n\n";
  o << "[domain]\n";
  o << "box = " << fmt(s.box[0]) << " " << fmt(s.box[1]) << " " << fmt(s.box[2])
    << " " << fmt(s.box[3]) << "\n";
  o << "cells = " << s.cells_x << " " << s.cells_y << "\n\n";
  if (!s.inclusion_polygon.empty()) {
    o << "[inclusion]\n";
    o << "polygon =";
    for (const auto& v : s.inclusion_polygon) o << " " << fmt(v[0]) << " " << fmt(v[1]);
    o << "\n\n";
  }
  if (!s.candidate_polygon.empty() || !s.scan_corners.empty()) {
    o << "[candidate]\n";
    if (!s.candidate_polygon.empty()) {
      o << "polygon =";
      for (const auto& v : s.candidate_polygon) o << " " << fmt(v[0]) << " " << fmt(v[1]);
      o << "\n";
    }
    for (const auto& c : s.scan_corners)
      o << "corner = " << fmt(c.apex_x) << " " << fmt(c.apex_y) << " "
        << fmt(c.axis_angle) << " " << fmt(c.half_angle) << " " << fmt(c.radius) << "\n";
    o << "\n";
  }
  o << "[coefficients]\n";
  o << "diffusion = " << fmt(s.diffusion) << "\n";
  o << "taylor_order = " << s.taylor_order << "\n";
  o << "kappa_in = " << s.kappa_in << "\n";
  o << "kappa_out = " << s.kappa_out << "\n";
  o << "lambda_in = " << fmt(s.lambda_in) << "\n";
  o << "lambda_out = " << fmt(s.lambda_out) << "\n";
  for (std::size_t l = 0; l < s.f_in.size(); ++l)
    o << "f" << l + 1 << "_in = " << s.f_in[l] << "\n";
  for (std::size_t l = 0; l < s.f_out.size(); ++l)
    o << "f" << l + 1 << "_out = " << s.f_out[l] << "\n";
  o << "\n[boundary]\n";
  for (std::size_t l = 0; l < s.f_boundary.size(); ++l)
    o << "f" << l + 1 << " = " << s.f_boundary[l] << "\n";
  for (std::size_t l = 0; l < s.g_boundary.size(); ++l)
    o << "g" << l + 1 << " = " << s.g_boundary[l] << "\n";
  o << "epsilon = " << fmt(s.epsilon) << "\n";
  o << "epsilon_ladder =";
  for (double e : s.epsilon_ladder) o << " " << fmt(e);
  o << "\n\n[probe]\n";
  o << "tau_ladder =";
  for (double t : s.tau_ladder) o << " " << fmt(t);
  o << "\n";
  o << "alpha =";
  for (double a : s.alphas) o << " " << fmt(a);
  o << "\n";
  for (const auto& c : s.probe_cones)
    o << "cone = " << c.dim << " " << fmt(c.half_angle) << " " << fmt(c.radius) << "\n";
  if (s.cone_radius > 0)
    o << "cone_radius = " << fmt(s.cone_radius) << "\n";
  else
    o << "cone_radius = auto\n";
  o << "\n[experiment]\n";
  o << "kind = " << s.kind << "\n";
  o << "jump_snr = " << fmt(s.jump_snr) << "\n";
  o << "seed = " << s.seed << "\n";
  o << "\n[tolerances]\n";
  o << "newton = " << fmt(s.tol_newton) << "\n";
  o << "small_data = " << fmt(s.small_data) << "\n";
  o << "quadrature = " << fmt(s.tol_quadrature) << "\n";
  o << "transmission = " << fmt(s.transmission) << "\n";
  return o.str();
}

GridPtr make_grid(const Scenario& s) {
  std::optional<PolygonalInclusion> inc;
  if (!s.inclusion_polygon.empty()) {
    std::vector<Eigen::Vector2d> verts;
    for (const auto& v : s.inclusion_polygon) verts.emplace_back(v[0], v[1]);
    inc.emplace(std::move(verts));
  }
  return std::make_shared<Grid>(
      BoundingBox{s.box[0], s.box[1], s.box[2], s.box[3]}, s.cells_x, s.cells_y,
      std::move(inc));
}

namespace {

ScalarFn compile(const std::string& text) {
  const Expression e = Expression::parse(text);
  return [e](double x, double y) { return e(x, y); };
}

}  // namespace

PiecewiseCoefficient make_coefficients(const Scenario& s) {
  PiecewiseCoefficient c;
  if (!s.inclusion_polygon.empty()) {
    std::vector<Eigen::Vector2d> verts;
    for (const auto& v : s.inclusion_polygon) verts.emplace_back(v[0], v[1]);
    c.inclusion.emplace(std::move(verts));
  }
  c.kappa_in = compile(s.kappa_in);
  c.kappa_out = compile(s.kappa_out);
  c.lambda_in = s.lambda_in;
  c.lambda_out = s.lambda_out;
  for (int l = 0; l < s.taylor_order; ++l) {
    c.f_in.push_back(compile(s.f_in[l]));
    c.f_out.push_back(compile(s.f_out[l]));
  }
  return c;
}

BoundaryData make_boundary(const Scenario& s, const Grid& grid) {
  BoundaryData bc;
  bc.epsilon = s.epsilon;
  bc.epsilon_ladder = s.epsilon_ladder;
  for (const auto& text : s.f_boundary) {
    const Expression e = Expression::parse(text);
    bc.f_traces.push_back(sample_trace(
        grid, [&e](double arc, double x, double y) { return e(x, y, 0.0, arc); }));
  }
  for (const auto& text : s.g_boundary) {
    const Expression e = Expression::parse(text);
    bc.g_traces.push_back(sample_trace(
        grid, [&e](double arc, double x, double y) { return e(x, y, 0.0, arc); }));
  }
  return bc;
}

std::vector<TruncatedCone> make_scan_cones(const Scenario& s) {
  std::vector<TruncatedCone> cones;
  if (!s.candidate_polygon.empty()) {
    std::vector<Eigen::Vector2d> verts;
    for (const auto& v : s.candidate_polygon) verts.emplace_back(v[0], v[1]);
    const PolygonalInclusion cand(std::move(verts));
    for (std::size_t k = 0; k < cand.vertices().size(); ++k) {
      const double radius = s.cone_radius > 0 ? s.cone_radius : cand.corner_radius(k);
      cones.emplace_back(cand.corner_cones()[k], radius);
    }
  }
  for (const auto& c : s.scan_corners) {
    Vec apex(2), axis(2);
    apex << c.apex_x, c.apex_y;
    axis << std::cos(c.axis_angle), std::sin(c.axis_angle);
    cones.emplace_back(ConvexCone(apex, axis, c.half_angle), c.radius);
  }
  return cones;
}

ExperimentSetup make_experiment_setup(const Scenario& s, int threads) {
  ExperimentSetup setup;
  setup.grid = make_grid(s);
  setup.truth = make_coefficients(s);
  setup.bc = make_boundary(s, *setup.grid);
  setup.diffusion = s.diffusion;
  setup.scan_cones = make_scan_cones(s);
  setup.tau_ladder = s.tau_ladder;
  setup.jump_snr = s.jump_snr;
  setup.transmission_tol = s.transmission;
  setup.threads = threads;
  return setup;
}

std::vector<TruncatedCone> make_probe_cones(const Scenario& s) {
  std::vector<TruncatedCone> cones;
  for (const auto& c : s.probe_cones) {
    Vec apex = Vec::Zero(c.dim);
    Vec axis = Vec::Zero(c.dim);
    axis[0] = 1.0;
    cones.emplace_back(ConvexCone(apex, axis, c.half_angle), c.radius);
  }
  return cones;
}

}  // namespace mfglab
