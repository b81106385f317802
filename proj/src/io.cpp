#include "helmbif/io.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace helmbif::io {

namespace {

std::vector<double> to_vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

// nlohmann writes NaN as null.
double json_double(const Json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

Eigen::VectorXd from_vec(const Json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = json_double(j[static_cast<size_t>(i)]);
  return v;
}

const char* to_string(Family f) { return f == Family::Semitrivial ? "semitrivial" : "diagonal"; }

Family family_from_string(const std::string& s) {
  if (s == "semitrivial") return Family::Semitrivial;
  if (s == "diagonal") return Family::Diagonal;
  throw Error(ErrorKind::Config, "unknown family '" + s + "'");
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

}  // namespace

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return {buf, res.ptr};
}

double parse_double(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double x = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw Error(ErrorKind::Config, "not a number: '" + s + "'");
  return x;
}

void write_profile_csv(std::ostream& os, const RadialProfile& p) {
  os << "r,w,dw\n";
  for (Eigen::Index i = 0; i < p.size(); ++i)
    os << format_double(p.grid.nodes(i)) << ',' << format_double(p.values(i)) << ','
       << format_double(p.derivs(i)) << '\n';
}

RadialProfile read_profile_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "r,w,dw")
    throw Error(ErrorKind::Config, "profile CSV must start with the header r,w,dw");
  std::vector<double> r, w, d;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != 3) throw Error(ErrorKind::Config, "profile CSV row needs 3 columns");
    r.push_back(parse_double(cells[0]));
    w.push_back(parse_double(cells[1]));
    d.push_back(parse_double(cells[2]));
  }
  if (r.size() < 2 || r.front() != 0.0)
    throw Error(ErrorKind::Config, "profile CSV needs at least two rows starting at r = 0");
  const auto n = static_cast<Eigen::Index>(r.size());
  RadialGrid g;
  g.nodes = Eigen::Map<Eigen::VectorXd>(r.data(), n);
  const Eigen::VectorXd lin = Eigen::VectorXd::LinSpaced(n, 0.0, r.back());
  g.grading = g.nodes == lin ? Grading::Uniform : Grading::Geometric;
  return {g, Eigen::Map<Eigen::VectorXd>(w.data(), n), Eigen::Map<Eigen::VectorXd>(d.data(), n)};
}

Json to_json(const RadialGrid& g) {
  Json j;
  j["grading"] = g.is_uniform() ? "uniform" : "geometric";
  j["size"] = g.size();
  j["r_max"] = g.r_max();
  if (!g.is_uniform()) j["nodes"] = to_vec(g.nodes);
  return j;
}

RadialGrid grid_from_json(const Json& j) {
  const std::string grading = j.at("grading").get<std::string>();
  if (grading == "uniform")
    return RadialGrid::uniform(j.at("r_max").get<double>(), j.at("size").get<Eigen::Index>());
  if (grading != "geometric") throw Error(ErrorKind::Config, "unknown grading '" + grading + "'");
  RadialGrid g;
  g.nodes = from_vec(j.at("nodes"));
  g.grading = Grading::Geometric;
  return g;
}

Json to_json(const RadialProfile& p) {
  Json j;
  j["grid"] = to_json(p.grid);
  j["values"] = to_vec(p.values);
  j["derivs"] = to_vec(p.derivs);
  if (p.has_curvature()) j["curvature"] = to_vec(p.curvature);
  return j;
}

RadialProfile profile_from_json(const Json& j) {
  RadialGrid g = grid_from_json(j.at("grid"));
  Eigen::VectorXd c;
  if (j.contains("curvature")) c = from_vec(j["curvature"]);
  return {std::move(g), from_vec(j.at("values")), from_vec(j.at("derivs")), std::move(c)};
}

Json to_json(const FarField& f) {
  return {{"amplitude", f.amplitude},
          {"phase_mod_pi", f.phase_mod_pi},
          {"winding", f.winding},
          {"phase_total", f.phase_total()},
          {"tail_residual_bound", f.tail_residual_bound}};
}

FarField farfield_from_json(const Json& j) {
  FarField f;
  f.amplitude = json_double(j.at("amplitude"));
  f.phase_mod_pi = json_double(j.at("phase_mod_pi"));
  f.winding = j.at("winding").get<int>();
  f.tail_residual_bound = json_double(j.at("tail_residual_bound"));
  return f;
}

Json to_json(const BifurcationPoint& p, bool with_profiles) {
  Json j;
  j["family"] = to_string(p.family);
  j["k"] = p.k;
  j["omega"] = p.omega;
  j["lambda"] = p.lambda;
  j["b"] = p.b;
  j["kernel_coupling"] = p.kernel_coupling;
  j["phase_residual"] = p.phase_residual;
  if (with_profiles) {
    j["eigenfunction"] = to_json(p.eigenfunction);
    if (p.base) j["base"] = to_json(*p.base);
  }
  return j;
}

BifurcationPoint bifurcation_point_from_json(const Json& j) {
  BifurcationPoint p;
  p.family = family_from_string(j.at("family").get<std::string>());
  p.k = j.at("k").get<int>();
  p.omega = json_double(j.at("omega"));
  p.lambda = json_double(j.at("lambda"));
  p.b = json_double(j.at("b"));
  p.kernel_coupling = json_double(j.at("kernel_coupling"));
  p.phase_residual = json_double(j.at("phase_residual"));
  if (j.contains("eigenfunction")) p.eigenfunction = profile_from_json(j["eigenfunction"]);
  if (j.contains("base")) p.base = profile_from_json(j["base"]);
  return p;
}

Json to_json(const SpectralReport& r) {
  Json j;
  j["omega"] = r.omega;
  j["lambda"] = r.lambda;
  j["size"] = r.size;
  j["k_max"] = r.k_max;
  j["tolerance"] = r.tolerance;
  j["ok"] = r.ok;
  Json ev = Json::array();
  for (Eigen::Index i = 0; i < r.eigenvalues.size(); ++i)
    ev.push_back({r.eigenvalues(i).real(), r.eigenvalues(i).imag()});
  j["eigenvalues"] = ev;
  Json m = Json::array();
  for (const auto& x : r.matches)
    m.push_back({{"k", x.k},
                 {"b_k", x.b_k},
                 {"expected", x.expected},
                 {"computed", x.computed},
                 {"computed_imag", x.computed_imag},
                 {"relative_mismatch", x.relative_mismatch},
                 {"separation", x.separation},
                 {"eigenvector_distance", x.eigenvector_distance},
                 {"resolved", x.resolved}});
  j["matches"] = m;
  Json u = Json::array();
  for (const auto& z : r.unmatched) u.push_back({z.real(), z.imag()});
  j["unmatched"] = u;
  return j;
}

void write_ladder_csv(std::ostream& os, const std::vector<BifurcationPoint>& points) {
  os << "k,omega,b_k,residual\n";
  for (const auto& p : points)
    os << p.k << ',' << format_double(p.omega) << ',' << format_double(p.b) << ','
       << format_double(p.phase_residual) << '\n';
}

void write_branch_csv(std::ostream& os, const Branch& br) {
  os << "arclength,b,w_norm,v_norm,v_phase,residual\n";
  for (const auto& p : br.points)
    os << format_double(p.arclength) << ',' << format_double(p.b) << ','
       << format_double(p.w_norm) << ',' << format_double(p.v_norm) << ','
       << format_double(p.v_phase) << ',' << format_double(p.residual) << '\n';
}

Json to_json(const Branch& br, int stride) {
  Json j;
  j["termination"] = to_string(br.termination);
  j["message"] = br.message;
  j["phase_label"] = br.phase_label;
  if (br.origin) j["origin"] = to_json(*br.origin, false);
  Json pts = Json::array();
  for (size_t i = 0; i < br.points.size(); ++i) {
    const auto& p = br.points[i];
    Json q = {{"arclength", p.arclength}, {"b", p.b},         {"w_norm", p.w_norm},
              {"v_norm", p.v_norm},       {"v_phase", p.v_phase}, {"residual", p.residual},
              {"newton_iterations", p.newton_iterations}};
    const bool keep = stride > 0 && i < br.states.size() &&
                      (i % static_cast<size_t>(stride) == 0 || i + 1 == br.states.size());
    if (keep) {
      q["mode"] = to_string(br.states[i].mode);
      q["w"] = to_json(br.states[i].w);
      q["v"] = to_json(br.states[i].v);
    }
    pts.push_back(std::move(q));
  }
  j["points"] = pts;
  return j;
}

void write_diagram(std::ostream& os, const Branch& br) {
  os << "# b v_norm\n";
  for (const auto& p : br.points) os << format_double(p.b) << ' ' << format_double(p.v_norm) << '\n';
}

}  // namespace helmbif::io
