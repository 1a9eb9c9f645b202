#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dopf/case_io.hpp"
#include "dopf/local_solver.hpp"
#include "dopf/monitor.hpp"
#include "dopf/network_matrices.hpp"
#include "dopf/orientation.hpp"
#include "dopf/scheduler.hpp"

namespace {

constexpr int kExitConverged = 0;
constexpr int kExitBudget = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitDeadlock = 4;

dopf::CaseData load_case(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw dopf::CaseError("cannot open case file " + path);
  auto fmt = path.size() > 2 && path.substr(path.size() - 2) == ".m"
                 ? dopf::CaseFormat::MatpowerM
                 : dopf::CaseFormat::NativeJson;
  return dopf::parse_case(in, fmt);
}

dopf::Dag load_orientation_file(const std::string& path, const dopf::Graph& g) {
  std::ifstream in(path);
  if (!in) throw dopf::CaseError("cannot open orientation file " + path);
  nlohmann::json j = nlohmann::json::parse(in);
  dopf::Dag d;
  d.num_nodes = g.num_nodes();
  for (const auto& e : j.at("edges"))
    d.edges.emplace_back(g.index_of(e.at(0).get<int>()),
                         g.index_of(e.at(1).get<int>()));
  return d;
}

struct SolveOptions {
  std::string case_path;
  std::string orient_mode = "auto";
  std::string orient_file;
  std::string rho_mode = "uniform";
  double rho0 = 700.0;
  double eps = 1e-4;
  double drop_q = 0.0;
  unsigned seed = 0;
  std::string out;
  std::string diagnostics = "none";
  std::string diag_out;
  double tol_inner = 1e-9;
  int max_inner = 5000;
  long max_iters = 100000;
  int mbar = 10;
  int h0 = 2;
};

// JSON config whose keys mirror the long flag names (without dashes);
// flags given on the command line win over config values.
void apply_config_defaults(CLI::App& solve, SolveOptions& o,
                           const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CLI::ValidationError("--config", "cannot open " + path);
  nlohmann::json j = nlohmann::json::parse(in);
  auto overridden = [&](const std::string& key) {
    return solve.get_option("--" + key)->count() > 0;
  };
  auto set = [&](const std::string& key, auto& var) {
    if (j.contains(key) && !overridden(key))
      var = j.at(key).get<std::decay_t<decltype(var)>>();
  };
  set("case", o.case_path);
  set("orient", o.orient_mode);
  set("orient-file", o.orient_file);
  set("rho-mode", o.rho_mode);
  set("rho0", o.rho0);
  set("eps", o.eps);
  set("drop-q", o.drop_q);
  set("seed", o.seed);
  set("out", o.out);
  set("diagnostics", o.diagnostics);
  set("diag-out", o.diag_out);
  set("tol-inner", o.tol_inner);
  set("max-inner", o.max_inner);
  set("max-iters", o.max_iters);
  set("mbar", o.mbar);
  set("h0", o.h0);
}

nlohmann::json config_json(const SolveOptions& o) {
  return {{"case", o.case_path},     {"orient", o.orient_mode},
          {"orient-file", o.orient_file}, {"rho-mode", o.rho_mode},
          {"rho0", o.rho0},          {"eps", o.eps},
          {"drop-q", o.drop_q},      {"seed", o.seed},
          {"out", o.out},            {"diagnostics", o.diagnostics},
          {"tol-inner", o.tol_inner},{"max-inner", o.max_inner},
          {"max-iters", o.max_iters},{"mbar", o.mbar},
          {"h0", o.h0}};
}

int run_orient(const std::string& case_path, int mbar, int h0, unsigned seed) {
  dopf::CaseData cd = load_case(case_path);
  dopf::Graph g = dopf::build_graph(cd);
  dopf::OrientationState st = dopf::run_outdegree_bounding(
      g, mbar, h0, g.bus_ids, seed);
  nlohmann::json out;
  out["converged"] = st.converged;
  out["update_counts"] = st.update_count;
  if (!st.converged) {
    out["error"] = "out-degree bounding did not converge";
    std::cout << out.dump(2) << std::endl;
    return kExitBudget;
  }
  dopf::ColoringResult col = dopf::run_coloring(g, st, seed + 1);
  out["final_hbar"] = st.final_hbar();
  out["colors"] = col.zeta;
  out["diameter"] = dopf::longest_path(col.dag);
  nlohmann::json edges = nlohmann::json::array();
  for (auto [t, h] : col.dag.edges)
    edges.push_back({g.bus_ids[t], g.bus_ids[h]});
  out["dag_edges"] = edges;
  std::cout << out.dump(2) << std::endl;
  return kExitConverged;
}

int run_solve(const SolveOptions& o) {
  dopf::CaseData cd = load_case(o.case_path);
  dopf::Graph g = dopf::build_graph(cd);
  std::vector<dopf::LocalProblem> lps = dopf::build_local_problems(cd, g);

  dopf::Dag dag;
  if (o.orient_mode == "auto") {
    dag = dopf::auto_orient(g, o.mbar, o.h0, o.seed).dag;
  } else if (o.orient_mode == "arbitrary") {
    dag = dopf::random_orientation(g, o.seed);
  } else if (o.orient_mode == "file") {
    dag = load_orientation_file(o.orient_file, g);
  } else {
    throw CLI::ValidationError("--orient", "must be auto, file, or arbitrary");
  }
  auto ac = dopf::check_acyclic(dag);
  if (!ac.acyclic) {
    nlohmann::json out;
    out["status"] = "deadlock";
    out["error"] = "orientation contains a cycle";
    nlohmann::json cyc = nlohmann::json::array();
    for (int v : ac.witness_cycle) cyc.push_back(g.bus_ids[v]);
    out["witness_cycle"] = cyc;
    out["config"] = config_json(o);
    std::cout << out.dump(2) << std::endl;
    return kExitDeadlock;
  }

  std::vector<double> rho = dopf::weighted_rho(
      cd, g, o.rho0,
      o.rho_mode == "admittance" ? dopf::RhoMode::Admittance
                                 : dopf::RhoMode::Uniform);
  dopf::SimConfig sim;
  sim.seed = o.seed;
  sim.drop_q = o.drop_q;
  sim.eps = o.eps;
  sim.max_updates_per_bus = o.max_iters;
  sim.record_history = o.diagnostics == "full";
  dopf::SolverConfig solver;
  solver.tol_inner = o.tol_inner;
  solver.max_inner = o.max_inner;

  dopf::RunTrace tr = dopf::run(cd, g, lps, dag, rho, sim, solver);

  std::vector<double> V_by_epoch;
  nlohmann::json diag_summary;
  if (sim.record_history && tr.status == dopf::RunStatus::Converged) {
    dopf::MonitorContext ctx = dopf::MonitorContext::build(g, lps, dag, rho);
    dopf::ReferenceSolution ref =
        dopf::compute_reference(cd, g, lps, dag, rho);
    auto epochs = dopf::assemble_epochs(tr, ctx);
    std::string diag_path = !o.diag_out.empty() ? o.diag_out
                            : !o.out.empty()    ? o.out + ".diag.csv"
                                                : "";
    std::ofstream diag;
    if (!diag_path.empty()) diag.open(diag_path);
    if (diag)
      diag << "epoch,V,dV,rhs_eq14,slack_eq14,slack_A2a,slack_A2b,"
              "kkt_stat,kkt_feas\n";
    for (size_t n = 0; n < epochs.size(); ++n) {
      double V = dopf::lasalle_V(epochs[n], ref, ctx);
      V_by_epoch.push_back(V);
      if (!diag) continue;
      if (n + 1 < epochs.size()) {
        auto mono =
            dopf::check_monotonicity(epochs[n], epochs[n + 1], ref, ctx);
        auto a2 = dopf::check_lemma_A2(epochs[n + 1], epochs[n], ref, ctx);
        auto kkt = dopf::kkt_residuals(epochs[n + 1].W, epochs[n + 1].p, ctx);
        diag << n << ',' << V << ',' << mono.V_next - mono.V_n << ','
             << mono.rhs << ',' << mono.slack << ',' << a2.slack_a << ','
             << a2.slack_b << ',' << kkt.stationarity << ','
             << kkt.feasibility << '\n';
      } else {
        diag << n << ',' << V << ",,,,,,,\n";
      }
    }
    auto kkt = dopf::kkt_residuals(epochs.back().W, epochs.back().p, ctx);
    diag_summary = {{"kkt_stationarity", kkt.stationarity},
                    {"kkt_feasibility", kkt.feasibility},
                    {"kkt_complementarity", kkt.complementarity},
                    {"V_final", V_by_epoch.back()},
                    {"V_initial", V_by_epoch.front()}};
  }

  if (!o.out.empty()) {
    std::ofstream csv(o.out);
    csv << "tick,global_iter,norm_r,max_gamma,objective";
    if (!V_by_epoch.empty()) csv << ",V_lasalle";
    csv << '\n';
    for (const auto& row : tr.rows) {
      csv << row.tick << ',' << row.global_iter << ',' << row.norm_r << ','
          << row.max_gamma << ',' << row.objective;
      if (!V_by_epoch.empty()) {
        if (row.global_iter >= 0 &&
            row.global_iter < static_cast<long>(V_by_epoch.size()))
          csv << ',' << V_by_epoch[row.global_iter];
        else
          csv << ',';
      }
      csv << '\n';
    }
  }

  nlohmann::json out;
  switch (tr.status) {
    case dopf::RunStatus::Converged: out["status"] = "converged"; break;
    case dopf::RunStatus::BudgetExhausted: out["status"] = "budget"; break;
    case dopf::RunStatus::Infeasible: out["status"] = "infeasible"; break;
    case dopf::RunStatus::Deadlock: out["status"] = "deadlock"; break;
  }
  if (!tr.message.empty()) out["message"] = tr.message;
  out["iterations_per_bus"] = tr.iterations_per_bus();
  out["total_updates"] = tr.total_updates;
  out["ticks"] = tr.ticks;
  out["objective"] = tr.objective;
  out["max_gamma"] = tr.max_gamma;
  out["n_per_agent"] = tr.n_per_agent;
  if (!diag_summary.is_null()) out["diagnostics"] = diag_summary;
  out["config"] = config_json(o);
  std::cout << out.dump(2) << std::endl;
  switch (tr.status) {
    case dopf::RunStatus::Converged: return kExitConverged;
    case dopf::RunStatus::BudgetExhausted: return kExitBudget;
    case dopf::RunStatus::Infeasible: return kExitInfeasible;
    case dopf::RunStatus::Deadlock: return kExitDeadlock;
  }
  return kExitBudget;
}

struct TraceFile {
  std::string path;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> header;
};

int run_report(const std::vector<std::string>& traces, const std::string& out) {
  std::vector<TraceFile> files;
  for (const auto& path : traces) {
    std::ifstream in(path);
    if (!in) {
      std::cerr << "cannot open trace " << path << '\n';
      return 1;
    }
    TraceFile tf;
    tf.path = path;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
      std::vector<std::string> cells;
      std::stringstream ss(line);
      std::string cell;
      while (std::getline(ss, cell, ',')) cells.push_back(cell);
      if (first) {
        tf.header = cells;
        first = false;
      } else if (!cells.empty()) {
        tf.rows.push_back(cells);
      }
    }
    files.push_back(std::move(tf));
  }
  std::cout << "trace,rows,final_tick,final_global_iter,final_norm_r,"
               "final_max_gamma\n";
  double min_iter = -1, max_iter = -1;
  for (const auto& tf : files) {
    if (tf.rows.empty()) continue;
    const auto& last = tf.rows.back();
    std::cout << tf.path << ',' << tf.rows.size() << ',' << last[0] << ','
              << last[1] << ',' << last[2] << ',' << last[3] << '\n';
    double it = std::stod(last[1]);
    if (min_iter < 0 || it < min_iter) min_iter = it;
    if (it > max_iter) max_iter = it;
  }
  if (min_iter > 0 && max_iter / min_iter > 5.0)
    std::cerr << "note: iteration counts differ by more than 5x across traces"
              << std::endl;
  if (!out.empty()) {
    std::ofstream lf(out);
    lf << "trace,tick,global_iter,norm_r\n";
    for (const auto& tf : files)
      for (const auto& row : tf.rows)
        if (row.size() >= 3)
          lf << tf.path << ',' << row[0] << ',' << row[1] << ',' << row[2]
             << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed semidefinite optimal power flow"};
  app.require_subcommand(1);

  std::string orient_case;
  int mbar = 10, h0 = 2;
  unsigned orient_seed = 0;
  CLI::App* orient = app.add_subcommand("orient", "Build an acyclic orientation");
  orient->add_option("--case", orient_case, "case file (.m or .json)")
      ->required();
  orient->add_option("--mbar", mbar, "cap-raise patience (-1 = never raise)");
  orient->add_option("--h0", h0, "initial out-degree cap");
  orient->add_option("--seed", orient_seed, "activation-order seed");

  SolveOptions so;
  std::string config_path;
  CLI::App* solve = app.add_subcommand("solve", "Run the distributed solver");
  solve->add_option("--config", config_path, "JSON config mirroring the flags");
  solve->add_option("--case", so.case_path, "case file (.m or .json)");
  solve->add_option("--orient", so.orient_mode, "auto | file | arbitrary");
  solve->add_option("--orient-file", so.orient_file, "orientation JSON");
  solve->add_option("--rho-mode", so.rho_mode, "uniform | admittance");
  solve->add_option("--rho0", so.rho0, "base penalty");
  solve->add_option("--eps", so.eps, "stopping threshold on gamma");
  solve->add_option("--drop-q", so.drop_q, "conditional packet-drop probability");
  solve->add_option("--seed", so.seed, "simulation seed");
  solve->add_option("--out", so.out, "trace CSV path");
  solve->add_option("--diagnostics", so.diagnostics, "none | full");
  solve->add_option("--diag-out", so.diag_out, "diagnostics CSV path");
  solve->add_option("--tol-inner", so.tol_inner, "inner solver tolerance");
  solve->add_option("--max-inner", so.max_inner, "inner iteration cap");
  solve->add_option("--max-iters", so.max_iters, "per-bus iteration budget");
  solve->add_option("--mbar", so.mbar, "orientation cap-raise patience");
  solve->add_option("--h0", so.h0, "orientation initial cap");

  std::vector<std::string> report_traces;
  std::string report_out;
  CLI::App* report = app.add_subcommand("report", "Aggregate trace CSVs");
  report->add_option("--out", report_out, "long-format CSV path");
  report->add_option("traces", report_traces, "trace CSV files")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (orient->parsed()) return run_orient(orient_case, mbar, h0, orient_seed);
    if (solve->parsed()) {
      if (!config_path.empty()) apply_config_defaults(*solve, so, config_path);
      if (so.case_path.empty())
        throw CLI::ValidationError("--case", "a case file is required");
      return run_solve(so);
    }
    if (report->parsed()) return run_report(report_traces, report_out);
  } catch (const dopf::InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << std::endl;
    return kExitInfeasible;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
  return 0;
}
