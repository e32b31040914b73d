#include "chom/convergence_lab.hpp"

#include "chom/errors.hpp"
#include "chom/sources.hpp"
#include "chom/strange_term.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <sstream>
#include <thread>

#ifndef CHOM_GIT_DESCRIBE
#define CHOM_GIT_DESCRIBE "unknown"
#endif

namespace chom {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, sep)) out.push_back(trim(item));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

int parse_int(const std::string& text) {
  const double v = parse_number(text);
  if (v != std::floor(v) || std::abs(v) > 1e9) throw ConfigError("expected an integer, got '" + text + "'");
  return int(v);
}

// Shortest text that reads back to the same double.
std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  for (int prec = 6; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

const char* kCsvHeader =
    "eps,l2_error,grad_norm,beta_trace,trace_gap,interior_gap,layer_gap,iterations,converged,non_monotone";

ReportRow solve_row(const SweepConfig& cfg, double eps, const MonotoneGraph& sigma,
                    const SourcePreset& src, const fem::Field& u0, double layer_height) {
  const auto start = std::chrono::steady_clock::now();
  ReportRow row;
  row.eps = eps;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  try {
    ScaleConfig c = cfg.base;
    c.eps = eps;
    const VIProblem p = make_vi_problem(c, sigma, src.f);
    const EpsSolution s = solve_eps(p, cfg.eps_options);
    const fem::Field ref = fem::interp(u0, p.mesh).field;
    const fem::Field gap(p.mesh, s.u.values - ref.values);
    const EnergyAndTraces et = energy_and_traces(p, s.u);
    row.l2_error = fem::l2_norm(gap);
    row.grad_norm = et.grad_norm;
    row.beta_trace = et.beta_obstacle_sq;
    row.trace_gap = fem::boundary_l2_norm(
        gap, {fem::BoundaryLabel::Gamma1Free, fem::BoundaryLabel::Gamma1Obstacle});
    row.interior_gap = fem::l2_norm_band(gap, layer_height, std::numeric_limits<double>::infinity());
    row.layer_gap = fem::l2_norm_band(gap, -std::numeric_limits<double>::infinity(), layer_height);
    row.iterations = s.diagnostics.sweeps;
    row.converged = s.diagnostics.converged;
  } catch (const NumericalFailure&) {
    row.l2_error = row.grad_norm = row.beta_trace = nan;
    row.trace_gap = row.interior_gap = row.layer_gap = nan;
    row.converged = false;
  }
  row.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return row;
}

} // namespace

double parse_number(const std::string& raw) {
  const std::string text = trim(raw);
  auto one = [&](const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      throw ConfigError("bad number '" + raw + "'");
    }
    if (used != s.size() || !std::isfinite(v)) throw ConfigError("bad number '" + raw + "'");
    return v;
  };
  const auto slash = text.find('/');
  if (slash == std::string::npos) return one(text);
  const double den = one(trim(text.substr(slash + 1)));
  if (den == 0.0) throw ConfigError("zero denominator in '" + raw + "'");
  return one(trim(text.substr(0, slash))) / den;
}

void SweepConfig::validate() const {
  if (base.n != 2) throw ConfigError("sweeps are two dimensional only");
  if (eps_list.empty()) throw ConfigError("empty eps list");
  for (std::size_t k = 0; k < eps_list.size(); ++k) {
    if (k > 0 && !(eps_list[k] < eps_list[k - 1])) throw ConfigError("eps list must be strictly decreasing");
    ScaleConfig c = base;
    c.eps = eps_list[k];
    c.validate();
  }
  if (workers < 0) throw ConfigError("workers must be >= 0");
}

SweepConfig parse_sweep_config(std::istream& in) {
  SweepConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = "line " + std::to_string(lineno) + ": ";
    if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (value.empty()) throw ConfigError(where + "missing value for '" + key + "'");
    try {
      if (key == "n") cfg.base.n = parse_int(value);
      else if (key == "C0") cfg.base.C0 = parse_number(value);
      else if (key == "alpha") cfg.base.alpha = parse_number(value);
      else if (key == "alpha2") {
        const double a2 = parse_number(value);
        if (!(a2 > 0.0)) throw ConfigError("alpha2 must be positive");
        cfg.base.alpha = std::sqrt(a2);
      } else if (key == "l0") cfg.base.l0 = parse_number(value);
      else if (key == "l") cfg.base.l = parse_number(value);
      else if (key == "height") cfg.base.height = parse_number(value);
      else if (key == "eps") {
        cfg.eps_list.clear();
        for (const auto& item : split(value, ',')) cfg.eps_list.push_back(parse_number(item));
      } else if (key == "source") cfg.source = value;
      else if (key == "sigma") cfg.sigma = value;
      else if (key == "workers") cfg.workers = parse_int(value);
      else if (key == "eps_tol") cfg.eps_options.tol = parse_number(value);
      else if (key == "eps_max_sweeps") cfg.eps_options.max_sweeps = parse_int(value);
      else if (key == "hom_tol") cfg.hom_options.tol = parse_number(value);
      else throw ConfigError("unknown key '" + key + "'");
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

SweepConfig load_sweep_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  return parse_sweep_config(in);
}

bool ConvergenceReport::all_converged() const {
  return reference.converged &&
         std::all_of(rows.begin(), rows.end(), [](const ReportRow& r) { return r.converged; });
}

ConvergenceReport sweep(const SweepConfig& cfg) {
  cfg.validate();
  const fem::RectDomain domain{cfg.base.l, cfg.base.height};
  const MonotoneGraph sigma = MonotoneGraph::parse(cfg.sigma);
  const SourcePreset src = parse_source(cfg.source, domain);

  ConvergenceReport report;
  report.config = cfg;

  // Reference at half the interior size of the finest epsilon mesh.
  const double h = 0.5 * cfg.eps_list.back() / 4.0;
  const int nx = int(std::ceil(2.0 * domain.l / h - 1e-9));
  const int ny = int(std::ceil(domain.height / h - 1e-9));
  auto mesh = std::make_shared<const fem::Mesh>(fem::build_uniform_mesh(domain, nx, ny));
  ScaleConfig c = cfg.base;
  c.eps = cfg.eps_list.front();
  auto law = std::make_shared<const KineticLaw>(kinetic_law(sigma, c));
  const HomSolution ref = solve_hom(make_hom_problem(mesh, law, src.f), cfg.hom_options);
  report.reference = ref.diagnostics;
  report.reference_nodes = mesh->num_nodes();
  report.reference_h = std::max(2.0 * domain.l / nx, domain.height / ny);

  const std::size_t n = cfg.eps_list.size();
  report.rows.resize(n);
  unsigned workers = cfg.workers > 0 ? unsigned(cfg.workers) : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, unsigned(n));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t k = next++; k < n; k = next++) {
      report.rows[k] = solve_row(cfg, cfg.eps_list[k], sigma, src, ref.u, report.layer_height);
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  for (std::size_t k = 1; k < n; ++k) {
    report.rows[k].non_monotone = !(report.rows[k].l2_error < report.rows[k - 1].l2_error);
  }
  return report;
}

void write_report_csv(std::ostream& os, const ConvergenceReport& r) {
  os << kCsvHeader << '\n';
  for (const auto& row : r.rows) {
    os << fmt(row.eps) << ',' << fmt(row.l2_error) << ',' << fmt(row.grad_norm) << ','
       << fmt(row.beta_trace) << ',' << fmt(row.trace_gap) << ',' << fmt(row.interior_gap) << ','
       << fmt(row.layer_gap) << ',' << row.iterations << ',' << int(row.converged) << ','
       << int(row.non_monotone) << '\n';
  }
}

std::vector<ReportRow> read_report_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != kCsvHeader) throw ConfigError("not a convergence report CSV");
  std::vector<ReportRow> rows;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 10) throw ConfigError("bad report row '" + line + "'");
    auto num = [](const std::string& s) { return s == "nan" ? std::numeric_limits<double>::quiet_NaN() : parse_number(s); };
    ReportRow row;
    row.eps = num(f[0]);
    row.l2_error = num(f[1]);
    row.grad_norm = num(f[2]);
    row.beta_trace = num(f[3]);
    row.trace_gap = num(f[4]);
    row.interior_gap = num(f[5]);
    row.layer_gap = num(f[6]);
    row.iterations = parse_int(f[7]);
    row.converged = parse_int(f[8]) != 0;
    row.non_monotone = parse_int(f[9]) != 0;
    rows.push_back(row);
  }
  return rows;
}

void write_report_json(std::ostream& os, const ConvergenceReport& r) {
  using nlohmann::json;
  auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  const auto& c = r.config;
  json j;
  j["git_describe"] = git_describe();
  j["config"] = {{"n", c.base.n},         {"C0", c.base.C0},        {"alpha", c.base.alpha},
                 {"l0", c.base.l0},       {"l", c.base.l},          {"height", c.base.height},
                 {"eps", c.eps_list},     {"source", c.source},     {"source_origin", "toolkit preset"},
                 {"sigma", c.sigma},
                 {"workers", c.workers}};
  j["tolerances"] = {{"eps_kkt", c.eps_options.tol},
                     {"eps_max_sweeps", c.eps_options.max_sweeps},
                     {"hom_residual", c.hom_options.tol}};
  j["reference"] = {{"converged", r.reference.converged},
                    {"path", to_string(r.reference.path)},
                    {"newton_iterations", r.reference.newton_iterations},
                    {"picard_iterations", r.reference.picard_iterations},
                    {"residual", num(r.reference.residual)},
                    {"nodes", r.reference_nodes},
                    {"h", r.reference_h}};
  j["layer_height"] = r.layer_height;
  j["all_converged"] = r.all_converged();
  j["rows"] = json::array();
  for (const auto& row : r.rows) {
    j["rows"].push_back({{"eps", row.eps},
                         {"l2_error", num(row.l2_error)},
                         {"grad_norm", num(row.grad_norm)},
                         {"beta_trace", num(row.beta_trace)},
                         {"trace_gap", num(row.trace_gap)},
                         {"interior_gap", num(row.interior_gap)},
                         {"layer_gap", num(row.layer_gap)},
                         {"iterations", row.iterations},
                         {"converged", row.converged},
                         {"non_monotone", row.non_monotone},
                         {"wall_seconds", row.wall_seconds}});
  }
  os << j.dump(2) << '\n';
}

void report_emit(const ConvergenceReport& r, const std::filesystem::path& stem) {
  auto open = [](const std::filesystem::path& p) {
    std::ofstream os(p);
    if (!os) throw std::runtime_error("cannot write " + p.string());
    return os;
  };
  std::filesystem::path csv = stem, js = stem;
  csv += ".csv";
  js += ".json";
  {
    auto os = open(csv);
    write_report_csv(os, r);
    if (!os) throw std::runtime_error("write failed: " + csv.string());
  }
  auto os = open(js);
  write_report_json(os, r);
  if (!os) throw std::runtime_error("write failed: " + js.string());
}

std::string git_describe() { return CHOM_GIT_DESCRIBE; }

} // namespace chom
