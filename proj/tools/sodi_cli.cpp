// Command-line driver: solve, verify, converge and example51 subcommands.
//
// Exit codes: 0 pass, 1 verification failure, 2 input error, 3 solver
// failure.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <future>
#include <iostream>

#include "sodi/certificate.hpp"
#include "sodi/example51.hpp"
#include "sodi/io.hpp"
#include "sodi/solver.hpp"
#include "sodi/svg.hpp"
#include "sodi/verify.hpp"

namespace {

using sodi::ordered_json;

constexpr int kExitPass = 0;
constexpr int kExitVerifyFail = 1;
constexpr int kExitInputError = 2;
constexpr int kExitSolverFail = 3;

std::string timestamp_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

ordered_json report_to_json(const sodi::VerificationReport& rep) {
  ordered_json j;
  j["theorem"] = rep.theorem;
  j["pass"] = rep.pass;
  j["nontriviality"] = rep.nontriviality;
  ordered_json rows = ordered_json::array();
  for (const auto& c : rep.conditions) {
    ordered_json r;
    r["label"] = c.label;
    r["residual"] = c.residual;
    r["tol"] = c.tol;
    r["pass"] = c.pass;
    r["homogeneous"] = c.homogeneous;
    rows.push_back(r);
  }
  j["conditions"] = rows;
  ordered_json notes = ordered_json::array();
  for (const auto& n : rep.notes) notes.push_back(n);
  j["notes"] = notes;
  return j;
}

ordered_json solve_to_json(const sodi::SolveResult& res) {
  ordered_json j;
  j["objective"] = res.objective;
  j["feasibility"] = res.feasibility;
  j["stationarity"] = res.stationarity;
  j["outer_iters"] = res.outer_iters;
  j["converged"] = res.converged;
  j["polished"] = res.polished;
  if (!res.diagnostics.empty()) j["diagnostics"] = res.diagnostics;
  ordered_json hist = ordered_json::array();
  for (const auto& h : res.history) {
    ordered_json e;
    e["max_violation"] = h.max_violation;
    e["stationarity"] = h.stationarity;
    e["objective"] = h.objective;
    e["penalty"] = h.penalty;
    hist.push_back(e);
  }
  j["history"] = hist;
  return j;
}

ordered_json config_echo(const sodi::SolverConfig& cfg) {
  ordered_json j;
  j["max_outer"] = cfg.max_outer;
  j["max_inner"] = cfg.max_inner;
  j["penalty_init"] = cfg.penalty_init;
  j["penalty_growth"] = cfg.penalty_growth;
  j["grad_tol"] = cfg.grad_tol;
  j["feas_tol"] = cfg.feas_tol;
  j["seed"] = cfg.seed;
  j["polish"] = cfg.polish;
  return j;
}

void write_outputs(const std::string& out_path, const ordered_json& doc,
                   const std::string& csv,
                   const std::string& svg = std::string()) {
  sodi::save_text(out_path, sodi::canonical_dump(doc));
  const std::filesystem::path p(out_path);
  std::filesystem::path csv_path = p;
  csv_path.replace_extension(".csv");
  sodi::save_text(csv_path.string(), csv);
  if (!svg.empty()) {
    std::filesystem::path svg_path = p;
    svg_path.replace_extension(".svg");
    sodi::save_text(svg_path.string(), svg);
  }
}

std::string theorem_for_flavor(sodi::CertFlavor flavor) {
  switch (flavor) {
    case sodi::CertFlavor::W1Reduced: return "T4.2";
    case sodi::CertFlavor::W2Reduced: return "T4.3";
    default: return "T4.1";
  }
}

int cmd_solve(const std::string& problem_path, int N, double tol,
              std::uint64_t seed, const std::string& out_path) {
  const sodi::ProblemFile pf = sodi::load_problem(problem_path);
  const sodi::DiscreteProblem dp = sodi::discretize(pf.problem, N);

  sodi::SolverConfig cfg;
  cfg.seed = seed;
  const sodi::SolveResult res = sodi::solve(dp, cfg);

  const sodi::Certificate cert = sodi::certificate_from_multipliers(
      dp, res.trajectory, res.multipliers_raw, 1.0);
  sodi::VerifyOptions vopts;
  vopts.tol = tol;
  const std::string theorem = theorem_for_flavor(cert.flavor);
  const sodi::VerificationReport rep =
      sodi::verify_theorem(theorem, pf.problem, res.trajectory, cert, vopts);

  ordered_json doc;
  doc["format"] = "sodi-run-report";
  doc["generated_at"] = timestamp_now();
  doc["problem"] = problem_to_json(pf);
  doc["grid_steps"] = N;
  doc["config"] = config_echo(cfg);
  doc["solve"] = solve_to_json(res);
  doc["certificate"] = certificate_to_json(cert);
  ordered_json reps = ordered_json::array();
  reps.push_back(report_to_json(rep));
  doc["verifications"] = reps;

  if (!out_path.empty())
    write_outputs(out_path, doc, sodi::run_csv(dp, res.trajectory, &cert));

  std::cout << "objective " << sodi::format_double(res.objective)
            << "  feasibility " << sodi::format_double(res.feasibility)
            << "  stationarity " << sodi::format_double(res.stationarity)
            << "  converged " << (res.converged ? "yes" : "no")
            << "  verified[" << theorem << "] " << (rep.pass ? "yes" : "no")
            << "\n";

  if (!res.converged) return kExitSolverFail;
  return rep.pass ? kExitPass : kExitVerifyFail;
}

int cmd_verify(const std::string& problem_path,
               const std::string& trajectory_path,
               const std::string& certificate_path,
               const std::string& theorem, double tol, bool analytic,
               const std::string& out_path) {
  const sodi::ProblemFile pf = sodi::load_problem(problem_path);
  const sodi::GridTrajectory traj =
      sodi::trajectory_from_csv(sodi::load_text(trajectory_path));
  const sodi::Certificate cert = sodi::load_certificate(certificate_path);

  sodi::VerifyOptions opts;
  opts.tol = tol;
  opts.use_analytic = analytic;
  if (analytic && pf.analytic && pf.problem.n == 1) {
    sodi::Mat d1(1, traj.grid.nodes()), d2(1, traj.grid.nodes());
    for (int i = 0; i < traj.grid.nodes(); ++i) {
      d1(0, i) = pf.analytic->d1(traj.grid.time(i));
      d2(0, i) = pf.analytic->d2(traj.grid.time(i));
    }
    opts.traj_d1 = d1;
    opts.traj_d2 = d2;
  }

  const sodi::VerificationReport rep =
      sodi::verify_theorem(theorem, pf.problem, traj, cert, opts);

  for (const auto& c : rep.conditions)
    std::cout << (c.pass ? "[pass] " : "[FAIL] ") << rep.theorem << " "
              << c.label << "  residual " << sodi::format_double(c.residual)
              << "  tol " << sodi::format_double(c.tol) << "\n";
  std::cout << (rep.pass ? "PASS" : "FAIL") << "\n";

  if (!out_path.empty()) {
    ordered_json doc;
    doc["format"] = "sodi-verification-report";
    doc["generated_at"] = timestamp_now();
    doc["theorem"] = theorem;
    doc["tol"] = tol;
    doc["report"] = report_to_json(rep);
    sodi::save_text(out_path, sodi::canonical_dump(doc));
  }
  return rep.pass ? kExitPass : kExitVerifyFail;
}

int cmd_converge(const std::string& problem_path,
                 const std::vector<int>& n_list, bool analytic_check,
                 std::uint64_t seed, const std::string& out_path) {
  const sodi::ProblemFile pf = sodi::load_problem(problem_path);
  for (std::size_t i = 1; i < n_list.size(); ++i)
    if (n_list[i] <= n_list[i - 1])
      throw sodi::ConfigError("--n-list must be strictly ascending");

  // Independent instances; one solve per grid, run concurrently.
  std::vector<std::future<sodi::SolveResult>> futures;
  for (int N : n_list)
    futures.push_back(std::async(std::launch::async, [&pf, N, seed]() {
      sodi::SolverConfig cfg;
      cfg.seed = seed;
      return sodi::solve(sodi::discretize(pf.problem, N), cfg);
    }));

  std::vector<sodi::SolveResult> results;
  bool any_failed = false;
  for (auto& f : futures) {
    results.push_back(f.get());
    any_failed = any_failed || !results.back().converged;
  }

  const bool use_analytic = analytic_check && pf.analytic.has_value();
  std::vector<double> errors(n_list.size(), 0.0);
  if (use_analytic) {
    for (std::size_t i = 0; i < n_list.size(); ++i) {
      const auto& traj = results[i].trajectory;
      double e = 0.0;
      for (int j = 0; j < traj.grid.nodes(); ++j)
        e = std::max(e, std::abs(traj.values(0, j) -
                                 pf.analytic->value(traj.grid.time(j))));
      errors[i] = e;
    }
  } else {
    // Cauchy differences between successive grids at shared times.
    for (std::size_t i = 0; i + 1 < n_list.size(); ++i) {
      const auto& coarse = results[i].trajectory;
      const auto& fine = results[i + 1].trajectory;
      double e = 0.0;
      for (int j = 0; j < coarse.grid.nodes(); ++j) {
        const double t = coarse.grid.time(j);
        const double pos = t * fine.grid.steps();
        const int lo = std::min(static_cast<int>(pos),
                                fine.grid.steps() - 1);
        const double w = pos - lo;
        for (int c = 0; c < coarse.n(); ++c) {
          const double fv =
              (1.0 - w) * fine.values(c, lo) + w * fine.values(c, lo + 1);
          e = std::max(e, std::abs(coarse.values(c, j) - fv));
        }
      }
      errors[i] = e;
    }
  }

  ordered_json doc;
  doc["format"] = "sodi-convergence-report";
  doc["generated_at"] = timestamp_now();
  doc["problem"] = problem_to_json(pf);
  doc["analytic_check"] = use_analytic;
  ordered_json table = ordered_json::array();
  printf("%8s  %22s  %22s  %8s\n", "N", "objective",
         use_analytic ? "error" : "cauchy_diff", "order");
  for (std::size_t i = 0; i < n_list.size(); ++i) {
    ordered_json row;
    row["N"] = n_list[i];
    row["objective"] = results[i].objective;
    row["converged"] = results[i].converged;
    const bool have_err =
        use_analytic ? true : (i + 1 < n_list.size());
    if (have_err) row["error"] = errors[i];
    std::string order = "";
    if (i > 0 && have_err && errors[i] > 0.0 && errors[i - 1] > 0.0) {
      const double o = std::log(errors[i - 1] / errors[i]) /
                       std::log(static_cast<double>(n_list[i]) / n_list[i - 1]);
      row["order"] = o;
      order = sodi::format_double(o);
    }
    printf("%8d  %22s  %22s  %8s\n", n_list[i],
           sodi::format_double(results[i].objective).c_str(),
           have_err ? sodi::format_double(errors[i]).c_str() : "",
           order.c_str());
    table.push_back(row);
  }
  doc["table"] = table;

  std::string svg;
  if (use_analytic && n_list.size() >= 2) {
    sodi::SvgSeries s;
    s.label = "max error";
    for (std::size_t i = 0; i < n_list.size(); ++i) {
      s.x.push_back(n_list[i]);
      s.y.push_back(std::max(errors[i], 1e-18));
    }
    sodi::SvgOptions so;
    so.log_x = true;
    so.log_y = true;
    so.title = "grid refinement";
    so.x_label = "N";
    so.y_label = "max |x_N - reference|";
    svg = sodi::svg_line_chart({s}, so);
  }
  if (!out_path.empty()) {
    sodi::save_text(out_path, sodi::canonical_dump(doc));
    if (!svg.empty()) {
      std::filesystem::path p(out_path);
      p.replace_extension(".svg");
      sodi::save_text(p.string(), svg);
    }
  }
  return any_failed ? kExitSolverFail : kExitPass;
}

int cmd_example51_impl(int N, const std::string& out_path,
                       std::string& stage) {
  const sodi::ContinuousProblem pc = sodi::make_example51_problem();
  const sodi::DiscreteProblem dp = sodi::discretize(pc, N);
  const double delta = dp.grid.delta();

  stage = "solve";
  const sodi::SolveResult res = sodi::solve(dp);
  if (!res.converged) {
    std::cerr << "stage solve failed: " << res.diagnostics << "\n";
    return kExitSolverFail;
  }

  stage = "reconstruct";
  const sodi::Certificate cert = sodi::certificate_from_multipliers(
      dp, res.trajectory, res.multipliers_raw, 1.0);

  stage = "verify";
  // Continuous condition checks against both certificates.
  sodi::VerifyOptions fd_opts;
  fd_opts.tol = 10.0 * delta;
  const sodi::VerificationReport rep_solver =
      sodi::verify_special_w2(pc, res.trajectory, cert, fd_opts);

  const sodi::Certificate analytic = sodi::analytic_certificate_example51(N);
  const sodi::GridTrajectory arc = sodi::example51_arc(dp.grid);
  sodi::VerifyOptions an_opts;
  an_opts.tol = 1e-10;
  sodi::Mat d1(1, dp.grid.nodes()), d2(1, dp.grid.nodes());
  for (int i = 0; i < dp.grid.nodes(); ++i) {
    d1(0, i) = sodi::example51_arc_value(dp.grid.time(i)) / 3.0;
    d2(0, i) = sodi::example51_arc_value(dp.grid.time(i)) / 9.0;
  }
  an_opts.traj_d1 = d1;
  an_opts.traj_d2 = d2;
  const sodi::VerificationReport rep_analytic =
      sodi::verify_special_w2(pc, arc, analytic, an_opts);

  // Side-by-side table.
  double traj_err = 0.0, u_err = 0.0, a_err = 0.0;
  for (int i = 0; i <= N; ++i) {
    const double t = dp.grid.time(i);
    traj_err = std::max(traj_err, std::abs(res.trajectory.values(0, i) -
                                           sodi::example51_arc_value(t)));
    u_err = std::max(u_err, std::abs(cert.ustar(0, i) -
                                     sodi::example51_dual_u(t)));
    if (i <= cert.last_constrained_node)
      a_err = std::max(a_err, std::abs(cert.alphas(0, i) -
                                       sodi::example51_multiplier(t)));
  }

  printf("%6s  %12s  %12s  %12s  %12s  %12s  %12s\n", "t", "x", "exp(t/3)",
         "u*", "-exp((1-t)/3)", "alpha", "exact");
  const int step = std::max(1, N / 10);
  for (int i = 0; i <= N; i += step) {
    const double t = dp.grid.time(i);
    printf("%6.3f  %12.6f  %12.6f  %12.6f  %12.6f  ", t,
           res.trajectory.values(0, i), sodi::example51_arc_value(t),
           cert.ustar(0, i), sodi::example51_dual_u(t));
    if (i <= cert.last_constrained_node)
      printf("%12.6f  %12.6f\n", cert.alphas(0, i),
             sodi::example51_multiplier(t));
    else
      printf("%12s  %12.6f\n", "-", sodi::example51_multiplier(t));
  }
  printf("\nmax|x - exact| = %.3e   max|u* - exact| = %.3e   "
         "max|alpha - exact| = %.3e\n",
         traj_err, u_err, a_err);
  printf("objective (discrete) = %.8f   objective (trapezoid) = %.8f   "
         "exact = %.8f\n",
         res.objective, sodi::objective_continuous(pc, res.trajectory),
         std::exp(1.0 / 3.0));
  printf("verify[T5.2, solver certificate, fd derivatives]    %s\n",
         rep_solver.pass ? "pass" : "FAIL");
  printf("verify[T5.2, analytic certificate, analytic derivs] %s\n",
         rep_analytic.pass ? "pass" : "FAIL");

  if (!out_path.empty()) {
    ordered_json doc;
    doc["format"] = "sodi-example51-report";
    doc["generated_at"] = timestamp_now();
    doc["grid_steps"] = N;
    doc["solve"] = solve_to_json(res);
    doc["trajectory_error"] = traj_err;
    doc["dual_error"] = u_err;
    doc["multiplier_error"] = a_err;
    ordered_json reps = ordered_json::array();
    reps.push_back(report_to_json(rep_solver));
    reps.push_back(report_to_json(rep_analytic));
    doc["verifications"] = reps;

    sodi::SvgSeries s1{"solver", {}, {}}, s2{"exact", {}, {}};
    for (int i = 0; i <= N; ++i) {
      const double t = dp.grid.time(i);
      s1.x.push_back(t);
      s1.y.push_back(res.trajectory.values(0, i));
      s2.x.push_back(t);
      s2.y.push_back(sodi::example51_arc_value(t));
    }
    sodi::SvgOptions so;
    so.title = "trajectory overlay";
    so.x_label = "t";
    so.y_label = "x(t)";
    write_outputs(out_path, doc, sodi::run_csv(dp, res.trajectory, &cert),
                  sodi::svg_line_chart({s1, s2}, so));
  }

  if (!rep_solver.pass || !rep_analytic.pass) return kExitVerifyFail;
  return kExitPass;
}

int cmd_example51(int N, const std::string& out_path) {
  std::string stage = "setup";
  try {
    return cmd_example51_impl(N, out_path, stage);
  } catch (const std::exception& e) {
    std::cerr << "stage " << stage << " failed: " << e.what() << "\n";
    return stage == "setup" ? kExitInputError : kExitSolverFail;
  }
}

std::vector<int> parse_n_list(const std::string& text) {
  std::vector<int> out;
  std::istringstream is(text);
  std::string cell;
  while (std::getline(is, cell, ',')) {
    if (cell.empty()) continue;
    out.push_back(std::stoi(cell));
  }
  if (out.empty()) throw sodi::ConfigError("--n-list must not be empty");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "solver and condition checker for Bolza problems constrained by "
      "systems of second-order differential inequalities"};
  app.require_subcommand(1);

  std::string problem_path, trajectory_path, certificate_path, out_path;
  std::string theorem = "T4.1";
  std::string n_list_text;
  std::string analytic_flag = "on";
  int N = 100;
  double tol = 1e-6;
  std::uint64_t seed = 0;

  auto* solve_cmd = app.add_subcommand("solve", "discretize, solve, "
                                                "reconstruct and check");
  solve_cmd->add_option("--problem", problem_path, "problem JSON file")
      ->required();
  solve_cmd->add_option("--n", N, "grid steps (>= 4)")->required();
  solve_cmd->add_option("--tol", tol, "verification tolerance");
  solve_cmd->add_option("--seed", seed, "solver seed (config echo)");
  solve_cmd->add_option("--out", out_path, "report JSON path");

  auto* verify_cmd =
      app.add_subcommand("verify", "check a trajectory/certificate pair");
  verify_cmd->add_option("--problem", problem_path, "problem JSON file")
      ->required();
  verify_cmd->add_option("--trajectory", trajectory_path, "trajectory CSV")
      ->required();
  verify_cmd
      ->add_option("--certificate", certificate_path, "certificate JSON")
      ->required();
  verify_cmd->add_option("--theorem", theorem,
                         "condition set: T3.1 T4.1 T4.2 T4.3 T5.1 C5.1 "
                         "T5.2 C5.2 C5.3 T5.3");
  verify_cmd->add_option("--tol", tol, "verification tolerance");
  verify_cmd->add_option("--analytic-check", analytic_flag,
                         "use analytic derivative grids when present "
                         "(on/off)");
  verify_cmd->add_option("--out", out_path, "report JSON path");

  auto* converge_cmd =
      app.add_subcommand("converge", "solve across grid refinements");
  converge_cmd->add_option("--problem", problem_path, "problem JSON file")
      ->required();
  converge_cmd
      ->add_option("--n-list", n_list_text, "comma-separated grid sizes")
      ->required();
  converge_cmd->add_option("--analytic-check", analytic_flag,
                           "compare against the analytic block (on/off)");
  converge_cmd->add_option("--seed", seed, "solver seed");
  converge_cmd->add_option("--out", out_path, "report JSON path");

  auto* example_cmd =
      app.add_subcommand("example51", "end-to-end benchmark instance");
  example_cmd->add_option("--n", N, "grid steps (>= 4)");
  example_cmd->add_option("--out", out_path, "report JSON path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInputError;
  }

  try {
    if (solve_cmd->parsed()) return cmd_solve(problem_path, N, tol, seed,
                                              out_path);
    if (verify_cmd->parsed())
      return cmd_verify(problem_path, trajectory_path, certificate_path,
                        theorem, tol, analytic_flag != "off", out_path);
    if (converge_cmd->parsed())
      return cmd_converge(problem_path, parse_n_list(n_list_text),
                          analytic_flag != "off", seed, out_path);
    if (example_cmd->parsed()) return cmd_example51(N, out_path);
  } catch (const sodi::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitSolverFail;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInputError;
  }
  return kExitInputError;
}
