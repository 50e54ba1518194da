#include "sodi/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace sodi {

namespace {

using json = ordered_json;

[[noreturn]] void fail(const std::string& msg) { throw ConfigError(msg); }

void expect_keys(const json& obj, const std::set<std::string>& allowed,
                 const std::set<std::string>& required,
                 const std::string& where) {
  if (!obj.is_object()) fail(where + ": expected an object");
  for (const auto& [key, _] : obj.items())
    if (!allowed.count(key)) fail(where + ": unknown key '" + key + "'");
  for (const auto& key : required)
    if (!obj.contains(key)) fail(where + ": missing key '" + key + "'");
}

Vec vec_from(const json& j, const std::string& where) {
  if (!j.is_array()) fail(where + ": expected an array of numbers");
  Vec v(j.size());
  int i = 0;
  for (const auto& e : j) {
    if (!e.is_number()) fail(where + ": expected numbers");
    v[i++] = e.get<double>();
  }
  return v;
}

json vec_to(const Vec& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Mat mat_from(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) fail(where + ": expected a matrix");
  const int rows = static_cast<int>(j.size());
  const int cols = static_cast<int>(j.at(0).size());
  Mat m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    const Vec row = vec_from(j.at(r), where);
    if (row.size() != cols) fail(where + ": ragged matrix");
    m.row(r) = row.transpose();
  }
  return m;
}

bool zero_or_empty(const Vec& v) { return v.size() == 0 || v.isZero(0); }

AffineParams affine_from(const json& j, int n, const std::string& where) {
  expect_keys(j, {"kind", "p0", "p1", "p2", "d", "depends_on"}, {},
              where);
  AffineParams p;
  if (j.contains("p0")) p.p0 = vec_from(j.at("p0"), where + ".p0");
  if (j.contains("p1")) p.p1 = vec_from(j.at("p1"), where + ".p1");
  if (j.contains("p2")) p.p2 = vec_from(j.at("p2"), where + ".p2");
  if (j.contains("d")) p.d = j.at("d").get<double>();
  for (const auto* blk : {&p.p0, &p.p1, &p.p2})
    if (blk->size() != 0 && blk->size() != n)
      fail(where + ": coefficient blocks must have length n");
  return p;
}

DependsOn depends_from(const json& j, const std::string& where) {
  DependsOn d{false, false, false};
  if (!j.is_array()) fail(where + ": depends_on must be an array");
  for (const auto& e : j) {
    const std::string s = e.get<std::string>();
    if (s == "x") d.x = true;
    else if (s == "v1") d.v1 = true;
    else if (s == "v2") d.v2 = true;
    else fail(where + ": depends_on entries must be x, v1 or v2");
  }
  return d;
}

void check_affine_deps(const AffineParams& p, const DependsOn& d,
                       const std::string& where) {
  auto consistent = [&](const Vec& blk, bool tagged, const char* name) {
    if (!tagged && !zero_or_empty(blk))
      fail(where + ": block " + name + " is nonzero but not in depends_on");
    if (tagged && zero_or_empty(blk))
      fail(where + ": block " + name + " is tagged but zero");
  };
  consistent(p.p0, d.x, "p0");
  consistent(p.p1, d.v1, "p1");
  consistent(p.p2, d.v2, "p2");
}

ScalarFn fn_from(const json& j, int n, int blocks, const DependsOn* deps,
                 const std::string& where) {
  if (!j.is_object() || !j.contains("kind"))
    fail(where + ": function spec needs a kind");
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "affine") {
    AffineParams p = affine_from(j, n, where);
    if (deps) check_affine_deps(p, *deps, where);
    return ScalarFn::affine(n, blocks, std::move(p));
  }
  if (kind == "convex_quadratic") {
    expect_keys(j, {"kind", "matrix", "linear", "offset", "depends_on"},
                {"matrix"}, where);
    QuadraticParams q;
    q.hessian = mat_from(j.at("matrix"), where + ".matrix");
    if (j.contains("linear"))
      q.linear = vec_from(j.at("linear"), where + ".linear");
    if (j.contains("offset")) q.offset = j.at("offset").get<double>();
    return ScalarFn::convex_quadratic(n, blocks, std::move(q));
  }
  if (kind == "max_of_affine") {
    expect_keys(j, {"kind", "pieces", "depends_on"}, {"pieces"}, where);
    std::vector<AffineParams> pieces;
    int idx = 0;
    for (const auto& pj : j.at("pieces")) {
      AffineParams p =
          affine_from(pj, n, where + ".pieces[" + std::to_string(idx) + "]");
      if (deps)
        check_affine_deps(p, *deps,
                          where + ".pieces[" + std::to_string(idx) + "]");
      pieces.push_back(std::move(p));
      ++idx;
    }
    return ScalarFn::max_of_affine(n, blocks, std::move(pieces));
  }
  fail(where + ": unknown function kind '" + kind + "'");
}

json affine_to(const AffineParams& p) {
  json j;
  j["kind"] = "affine";
  if (p.p0.size()) j["p0"] = vec_to(p.p0);
  if (p.p1.size()) j["p1"] = vec_to(p.p1);
  if (p.p2.size()) j["p2"] = vec_to(p.p2);
  j["d"] = p.d;
  return j;
}

json fn_to(const ScalarFn& fn, const DependsOn* deps) {
  json j;
  switch (fn.kind) {
    case FnKind::Affine:
      j = affine_to(std::get<AffineParams>(fn.params));
      break;
    case FnKind::ConvexQuadratic: {
      const auto& q = std::get<QuadraticParams>(fn.params);
      j["kind"] = "convex_quadratic";
      json rows = json::array();
      for (int r = 0; r < q.hessian.rows(); ++r)
        rows.push_back(vec_to(q.hessian.row(r).transpose()));
      j["matrix"] = rows;
      j["linear"] = vec_to(q.linear);
      j["offset"] = q.offset;
      break;
    }
    case FnKind::MaxOfAffine: {
      j["kind"] = "max_of_affine";
      json pieces = json::array();
      for (const auto& p : std::get<std::vector<AffineParams>>(fn.params)) {
        json pj = affine_to(p);
        pj.erase("kind");
        pieces.push_back(pj);
      }
      j["pieces"] = pieces;
      break;
    }
    case FnKind::SmoothBlackBox:
      fail("black-box functions are not serializable");
  }
  if (deps) {
    json d = json::array();
    if (deps->x) d.push_back("x");
    if (deps->v1) d.push_back("v1");
    if (deps->v2) d.push_back("v2");
    j["depends_on"] = d;
  }
  return j;
}

AnalyticSolution analytic_from(const json& j) {
  expect_keys(j, {"form", "coef", "rate", "coeffs"}, {"form"}, "analytic");
  AnalyticSolution a;
  const std::string form = j.at("form").get<std::string>();
  if (form == "exp") {
    a.kind = AnalyticSolution::Kind::Exp;
    a.coef = j.value("coef", 1.0);
    a.rate = j.value("rate", 0.0);
  } else if (form == "poly") {
    a.kind = AnalyticSolution::Kind::Poly;
    if (!j.contains("coeffs")) fail("analytic: poly form needs coeffs");
    for (const auto& c : j.at("coeffs")) a.coeffs.push_back(c.get<double>());
  } else {
    fail("analytic: form must be exp or poly");
  }
  return a;
}

json analytic_to(const AnalyticSolution& a) {
  json j;
  if (a.kind == AnalyticSolution::Kind::Exp) {
    j["form"] = "exp";
    j["coef"] = a.coef;
    j["rate"] = a.rate;
  } else {
    j["form"] = "poly";
    json c = json::array();
    for (double v : a.coeffs) c.push_back(v);
    j["coeffs"] = c;
  }
  return j;
}

void dump_rec(const json& j, std::string& out, int indent) {
  const std::string pad(indent, ' ');
  const std::string pad2(indent + 2, ' ');
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (const auto& [key, val] : j.items()) {
        if (!first) out += ",\n";
        first = false;
        out += pad2 + nlohmann::json(key).dump() + ": ";
        dump_rec(val, out, indent + 2);
      }
      out += "\n" + pad + "}";
      return;
    }
    case json::value_t::array: {
      bool primitive = true;
      for (const auto& e : j)
        if (e.is_object() || e.is_array()) primitive = false;
      if (primitive) {
        out += "[";
        bool first = true;
        for (const auto& e : j) {
          if (!first) out += ", ";
          first = false;
          dump_rec(e, out, indent);
        }
        out += "]";
        return;
      }
      out += "[\n";
      bool first = true;
      for (const auto& e : j) {
        if (!first) out += ",\n";
        first = false;
        out += pad2;
        dump_rec(e, out, indent + 2);
      }
      out += "\n" + pad + "]";
      return;
    }
    case json::value_t::number_float:
      out += format_double(j.get<double>());
      return;
    default:
      out += j.dump();
      return;
  }
}

}  // namespace

double AnalyticSolution::value(double t) const {
  if (kind == Kind::Exp) return coef * std::exp(rate * t);
  double v = 0.0, p = 1.0;
  for (double c : coeffs) {
    v += c * p;
    p *= t;
  }
  return v;
}

double AnalyticSolution::d1(double t) const {
  if (kind == Kind::Exp) return coef * rate * std::exp(rate * t);
  double v = 0.0, p = 1.0;
  for (std::size_t k = 1; k < coeffs.size(); ++k) {
    v += static_cast<double>(k) * coeffs[k] * p;
    p *= t;
  }
  return v;
}

double AnalyticSolution::d2(double t) const {
  if (kind == Kind::Exp) return coef * rate * rate * std::exp(rate * t);
  double v = 0.0, p = 1.0;
  for (std::size_t k = 2; k < coeffs.size(); ++k) {
    v += static_cast<double>(k * (k - 1)) * coeffs[k] * p;
    p *= t;
  }
  return v;
}

GridTrajectory AnalyticSolution::sample(const Grid& grid) const {
  Mat vals(1, grid.nodes());
  for (int i = 0; i < grid.nodes(); ++i) vals(0, i) = value(grid.time(i));
  return GridTrajectory(grid, std::move(vals));
}

ProblemFile parse_problem_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    fail(std::string("invalid JSON: ") + e.what());
  }
  expect_keys(j, {"name", "n", "f", "q", "constraints", "v0", "v1",
                  "analytic"},
              {"n", "f", "q", "constraints", "v0", "v1"}, "problem");

  ProblemFile pf;
  if (j.contains("name")) pf.name = j.at("name").get<std::string>();
  if (!j.at("n").is_number_integer()) fail("problem: n must be an integer");
  const int n = j.at("n").get<int>();
  if (n < 1) fail("problem: n must be positive");

  ContinuousProblem pc;
  pc.n = n;
  pc.f = RunningCost::of(fn_from(j.at("f"), n, 1, nullptr, "f"));
  pc.q = fn_from(j.at("q"), n, 1, nullptr, "q");
  if (!j.at("constraints").is_array() || j.at("constraints").empty())
    fail("problem: constraints must be a non-empty array");
  int idx = 0;
  for (const auto& cj : j.at("constraints")) {
    const std::string where = "constraints[" + std::to_string(idx++) + "]";
    if (!cj.is_object() || !cj.contains("depends_on"))
      fail(where + ": constraint needs a depends_on tag");
    ConstraintFn c;
    c.deps = depends_from(cj.at("depends_on"), where);
    c.fn = fn_from(cj, n, 3, &c.deps, where);
    pc.constraints.push_back(std::move(c));
  }
  pc.v0 = vec_from(j.at("v0"), "v0");
  pc.v1 = vec_from(j.at("v1"), "v1");
  pc.validate();
  pf.problem = std::move(pc);

  if (j.contains("analytic")) {
    if (n != 1) fail("analytic blocks are scalar only");
    pf.analytic = analytic_from(j.at("analytic"));
  }
  return pf;
}

ProblemFile load_problem(const std::string& path) {
  return parse_problem_json(load_text(path));
}

ordered_json problem_to_json(const ProblemFile& pf) {
  json j;
  if (!pf.name.empty()) j["name"] = pf.name;
  j["n"] = pf.problem.n;
  if (!pf.problem.f.spatial())
    fail("time-varying running costs are not serializable");
  j["f"] = fn_to(*pf.problem.f.spatial(), nullptr);
  j["q"] = fn_to(pf.problem.q, nullptr);
  json cons = json::array();
  for (const auto& c : pf.problem.constraints)
    cons.push_back(fn_to(c.fn, &c.deps));
  j["constraints"] = cons;
  j["v0"] = vec_to(pf.problem.v0);
  j["v1"] = vec_to(pf.problem.v1);
  if (pf.analytic) j["analytic"] = analytic_to(*pf.analytic);
  return j;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string canonical_dump(const ordered_json& j) {
  std::string out;
  dump_rec(j, out, 0);
  out += "\n";
  return out;
}

void save_text(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail("cannot open for writing: " + path);
  os << text;
}

std::string load_text(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail("cannot open: " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::string trajectory_to_csv(const GridTrajectory& traj) {
  std::ostringstream os;
  os << "t";
  for (int c = 0; c < traj.n(); ++c) os << ",x" << (c + 1);
  os << "\n";
  for (int i = 0; i < traj.grid.nodes(); ++i) {
    os << format_double(traj.grid.time(i));
    for (int c = 0; c < traj.n(); ++c)
      os << "," << format_double(traj.values(c, i));
    os << "\n";
  }
  return os.str();
}

GridTrajectory trajectory_from_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line)) fail("trajectory CSV is empty");
  int n = 0;
  {
    std::istringstream hs(line);
    std::string cell;
    bool first = true;
    while (std::getline(hs, cell, ',')) {
      if (first) {
        if (cell != "t") fail("trajectory CSV must start with a t column");
        first = false;
      } else {
        ++n;
      }
    }
  }
  if (n < 1) fail("trajectory CSV needs at least one state column");
  std::vector<Vec> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    std::vector<double> vals;
    while (std::getline(ls, cell, ',')) vals.push_back(std::stod(cell));
    if (static_cast<int>(vals.size()) != n + 1)
      fail("trajectory CSV row has the wrong number of cells");
    Vec x(n);
    for (int c = 0; c < n; ++c) x[c] = vals[c + 1];
    rows.push_back(x);
  }
  if (rows.size() < 5) fail("trajectory CSV needs at least 5 nodes");
  Grid grid(static_cast<int>(rows.size()) - 1);
  Mat values(n, grid.nodes());
  for (int i = 0; i < grid.nodes(); ++i) values.col(i) = rows[i];
  return GridTrajectory(grid, std::move(values));
}

namespace {

json grid_to_json(const Mat& g) {
  json a = json::array();
  for (int i = 0; i < g.cols(); ++i) a.push_back(vec_to(g.col(i)));
  return a;
}

Mat grid_from_json(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) fail(where + ": expected a grid");
  const int nodes = static_cast<int>(j.size());
  const int n = static_cast<int>(j.at(0).size());
  Mat g(n, nodes);
  for (int i = 0; i < nodes; ++i) {
    const Vec col = vec_from(j.at(i), where);
    if (col.size() != n) fail(where + ": ragged grid");
    g.col(i) = col;
  }
  return g;
}

}  // namespace

ordered_json certificate_to_json(const Certificate& cert) {
  json j;
  j["format"] = "sodi-certificate";
  j["n"] = cert.n;
  j["grid_steps"] = cert.grid.steps();
  j["mu"] = cert.mu;
  j["flavor"] = to_string(cert.flavor);
  j["last_constrained_node"] = cert.last_constrained_node;
  j["xstar"] = grid_to_json(cert.xstar);
  j["ustar"] = grid_to_json(cert.ustar);
  j["psistar"] = grid_to_json(cert.psistar);
  j["alphas"] = grid_to_json(cert.alphas);
  json an;
  auto put = [&](const char* key, const std::optional<Mat>& g) {
    if (g) an[key] = grid_to_json(*g);
  };
  put("dxstar", cert.analytic.dxstar);
  put("d2xstar", cert.analytic.d2xstar);
  put("dustar", cert.analytic.dustar);
  put("dpsistar", cert.analytic.dpsistar);
  put("dalpha", cert.analytic.dalpha);
  put("d2alpha", cert.analytic.d2alpha);
  if (!an.empty()) j["analytic"] = an;
  return j;
}

Certificate certificate_from_json(const ordered_json& j) {
  expect_keys(j,
              {"format", "n", "grid_steps", "mu", "flavor",
               "last_constrained_node", "xstar", "ustar", "psistar",
               "alphas", "analytic"},
              {"n", "grid_steps", "mu", "flavor", "xstar", "ustar",
               "psistar", "alphas"},
              "certificate");
  const int n = j.at("n").get<int>();
  const int N = j.at("grid_steps").get<int>();
  Grid grid(N);
  const Mat alphas = grid_from_json(j.at("alphas"), "alphas");
  Certificate cert(grid, n, static_cast<int>(alphas.rows()));
  cert.mu = j.at("mu").get<double>();
  cert.flavor = flavor_from_string(j.at("flavor").get<std::string>());
  cert.xstar = grid_from_json(j.at("xstar"), "xstar");
  cert.ustar = grid_from_json(j.at("ustar"), "ustar");
  cert.psistar = grid_from_json(j.at("psistar"), "psistar");
  cert.alphas = alphas;
  cert.last_constrained_node =
      j.contains("last_constrained_node")
          ? j.at("last_constrained_node").get<int>()
          : N - 2;
  for (const Mat* g : {&cert.xstar, &cert.ustar, &cert.psistar})
    if (g->rows() != n || g->cols() != grid.nodes())
      fail("certificate: adjoint grids must be n x (N+1)");
  if (cert.alphas.cols() != grid.nodes())
    fail("certificate: multiplier grid must span all nodes");
  if (j.contains("analytic")) {
    const json& an = j.at("analytic");
    expect_keys(an,
                {"dxstar", "d2xstar", "dustar", "dpsistar", "dalpha",
                 "d2alpha"},
                {}, "certificate.analytic");
    auto get = [&](const char* key) -> std::optional<Mat> {
      if (!an.contains(key)) return std::nullopt;
      return grid_from_json(an.at(key), key);
    };
    cert.analytic.dxstar = get("dxstar");
    cert.analytic.d2xstar = get("d2xstar");
    cert.analytic.dustar = get("dustar");
    cert.analytic.dpsistar = get("dpsistar");
    cert.analytic.dalpha = get("dalpha");
    cert.analytic.d2alpha = get("d2alpha");
  }
  return cert;
}

Certificate load_certificate(const std::string& path) {
  json j;
  try {
    j = json::parse(load_text(path));
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    fail(std::string("invalid certificate JSON: ") + e.what());
  }
  return certificate_from_json(j);
}

std::string run_csv(const DiscreteProblem& dp, const GridTrajectory& traj,
                    const Certificate* cert) {
  const int n = traj.n();
  const int N = traj.grid.steps();
  const int m = dp.m();
  std::ostringstream os;
  os << "t";
  auto cols = [&](const char* base) {
    for (int c = 0; c < n; ++c) os << "," << base << (c + 1);
  };
  cols("x");
  cols("dx");
  cols("d2x");
  for (int k = 0; k < m; ++k) os << ",alpha_" << (k + 1);
  cols("xstar");
  cols("ustar");
  cols("psistar");
  os << "\n";
  for (int i = 0; i <= N; ++i) {
    os << format_double(traj.grid.time(i));
    for (int c = 0; c < n; ++c) os << "," << format_double(traj.values(c, i));
    for (int c = 0; c < n; ++c)
      if (i <= N - 1)
        os << "," << format_double(delta(traj, i)[c]);
      else
        os << ",";
    for (int c = 0; c < n; ++c)
      if (i <= N - 2)
        os << "," << format_double(delta2(traj, i)[c]);
      else
        os << ",";
    for (int k = 0; k < m; ++k)
      if (cert && i <= cert->last_constrained_node)
        os << "," << format_double(cert->alphas(k, i));
      else
        os << ",";
    for (const Mat* g : {cert ? &cert->xstar : nullptr,
                         cert ? &cert->ustar : nullptr,
                         cert ? &cert->psistar : nullptr})
      for (int c = 0; c < n; ++c)
        if (g)
          os << "," << format_double((*g)(c, i));
        else
          os << ",";
    os << "\n";
  }
  return os.str();
}

}  // namespace sodi
