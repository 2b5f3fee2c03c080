// rnnkit command-line front end: constraint solving, tiling planning,
// gradient/precision checks and the parity trainer.
//
// Exit codes: 0 success, 1 infeasible result or tolerance failure,
// 2 usage/input error.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "rnnkit/csp/json_io.hpp"
#include "rnnkit/csp/solver.hpp"
#include "rnnkit/plan/planner.hpp"
#include "rnnkit/rnn/gradcheck.hpp"
#include "rnnkit/rnn/random_init.hpp"
#include "rnnkit/rnn/tensor_io.hpp"
#include "rnnkit/tasks/parity.hpp"

namespace {

using nlohmann::ordered_json;
using rnnkit::csp::Int;

constexpr int kOk = 0;
constexpr int kInfeasible = 1;
constexpr int kUsage = 2;

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw std::invalid_argument("cannot open output file: " + out_path);
  out << text;
}

std::string preset_dir_from_env() {
  const char* dir = std::getenv("RNNKIT_GPU_DIR");
  return dir ? dir : "";
}

rnnkit::rnn::Variant parse_variant(const std::string& name) {
  auto v = rnnkit::rnn::variant_from_name(name);
  if (!v) throw std::invalid_argument("unknown variant: " + name + " (elman|lstm|gru|slstm)");
  return *v;
}

rnnkit::plan::RnnShape make_shape(const std::string& variant, Int head_dim, Int heads,
                                  Int batch, const std::string& dtype) {
  auto cell = rnnkit::rnn::cell_spec(parse_variant(variant));
  rnnkit::plan::RnnShape s;
  s.num_states = cell.num_states;
  s.num_gates = cell.num_gates;
  s.head_dim = head_dim;
  s.num_heads = heads;
  s.batch = batch;
  s.dtype = rnnkit::hw::dtype(dtype);
  return s;
}

struct CmdCommon {
  bool json = false;
  std::string out;
  std::uint64_t seed = 0;
};

int cmd_solve_csp(const std::string& problem_path, const CmdCommon& common) {
  std::ifstream in(problem_path);
  if (!in) throw std::invalid_argument("cannot open problem file: " + problem_path);
  std::stringstream ss;
  ss << in.rdbuf();
  auto problem = rnnkit::csp::problem_from_json(ss.str());
  auto solution = rnnkit::csp::solve(problem);
  emit(rnnkit::csp::solution_to_json(solution), common.out);
  return solution ? kOk : kInfeasible;
}

int cmd_plan(const std::string& variant, Int head_dim, Int heads, Int batch,
             const std::string& dtype, const std::string& gpu_arg, const std::string& pass,
             Int register_budget, Int threads_cap, const CmdCommon& common) {
  auto gpu = rnnkit::hw::resolve_gpu(gpu_arg, preset_dir_from_env());
  auto shape = make_shape(variant, head_dim, heads, batch, dtype);
  rnnkit::plan::PlannerOptions opts;
  if (register_budget > 0) opts.register_budget_override = register_budget;
  if (threads_cap > 0) opts.block_threads_cap_override = threads_cap;

  std::vector<rnnkit::plan::Pass> passes;
  if (pass == "forward") passes = {rnnkit::plan::Pass::Forward};
  else if (pass == "backward") passes = {rnnkit::plan::Pass::Backward};
  else if (pass == "both") passes = {rnnkit::plan::Pass::Forward, rnnkit::plan::Pass::Backward};
  else throw std::invalid_argument("--pass must be forward, backward or both");

  ordered_json all;
  std::string table;
  bool feasible = true;
  for (auto p : passes) {
    auto tp = rnnkit::plan::plan(shape, gpu, p, opts);
    const char* key = p == rnnkit::plan::Pass::Forward ? "forward" : "backward";
    if (!tp) {
      feasible = false;
      all[key] = ordered_json{{"status", "infeasible"}};
      table += std::string("tiling plan: ") + gpu.name + " " + key + " pass: infeasible\n";
      continue;
    }
    all[key] = ordered_json::parse(rnnkit::plan::plan_to_json(*tp));
    table += rnnkit::plan::plan_to_table(*tp);
  }
  emit(common.json ? all.dump(2) : table, common.out);
  return feasible ? kOk : kInfeasible;
}

int cmd_feasible_heads(const std::string& variant, const std::string& gpu_arg, Int min_dh,
                       Int max_dh, Int heads, Int batch, const std::string& dtype,
                       const std::string& pass, const CmdCommon& common) {
  auto gpu = rnnkit::hw::resolve_gpu(gpu_arg, preset_dir_from_env());
  auto base = make_shape(variant, std::max<Int>(min_dh, 1), heads, batch, dtype);
  bool both = pass != "forward";
  auto dims = rnnkit::plan::feasible_head_dims(base, gpu, both, min_dh, max_dh);
  if (common.json) {
    emit(ordered_json(dims).dump(), common.out);
  } else {
    std::ostringstream os;
    for (Int d : dims) os << d << "\n";
    emit(os.str(), common.out);
  }
  return kOk;
}

int cmd_gradcheck(const std::string& variant, int t, int dh, int heads, int batch,
                  std::uint64_t seed, int seeds, double tol, const CmdCommon& common) {
  ordered_json rows = ordered_json::array();
  double worst = 0.0;
  std::ostringstream table;
  table << "variant seed  d_inputs      d_bias        d_R           d_init\n";
  for (int k = 0; k < seeds; ++k) {
    rnnkit::rnn::GradCheckConfig cfg;
    cfg.variant = parse_variant(variant);
    cfg.seq_len = t;
    cfg.head_dim = dh;
    cfg.num_heads = heads;
    cfg.batch = batch;
    cfg.seed = seed + static_cast<std::uint64_t>(k);
    auto rep = rnnkit::rnn::gradient_check(cfg);
    worst = std::max(worst, rep.max_rel());
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%-7s %4llu %.3e    %.3e    %.3e    %.3e\n",
                  variant.c_str(), static_cast<unsigned long long>(cfg.seed),
                  rep.max_rel_inputs, rep.max_rel_bias, rep.max_rel_recurrent,
                  rep.max_rel_init_states);
    table << buf;
    rows.push_back(ordered_json{{"seed", cfg.seed},
                                {"d_inputs", rep.max_rel_inputs},
                                {"d_bias", rep.max_rel_bias},
                                {"d_R", rep.max_rel_recurrent},
                                {"d_initial_states", rep.max_rel_init_states}});
  }
  table << "max relative error: " << worst << " (tolerance " << tol << ")\n";
  if (common.json)
    emit(ordered_json{{"rows", rows}, {"max_rel", worst}, {"tolerance", tol}}.dump(2),
         common.out);
  else
    emit(table.str(), common.out);
  return worst < tol ? kOk : kInfeasible;
}

int cmd_precision_drift(const std::string& variant, int t, int dh, int heads,
                        const std::string& low_dtype, std::uint64_t seed,
                        const CmdCommon& common) {
  auto cell = rnnkit::rnn::cell_spec(parse_variant(variant));
  rnnkit::rnn::Rng rng(seed);
  auto params = rnnkit::rnn::random_params(cell, heads, dh, rng);
  auto batch = rnnkit::rnn::random_batch(cell, t, 1, heads, dh, rng);
  auto rows = rnnkit::rnn::precision_drift_report(cell, params, batch, low_dtype);
  emit(rnnkit::rnn::drift_to_csv(rows), common.out);
  return kOk;
}

int cmd_train_parity(const std::string& variant, int dh, int heads,
                     rnnkit::tasks::ParityConfig cfg, const std::string& lrs_arg,
                     const std::string& seeds_arg, const CmdCommon& common) {
  std::vector<double> lrs;
  for (std::stringstream ss(lrs_arg); ss.good();) {
    std::string tok;
    std::getline(ss, tok, ',');
    if (!tok.empty()) lrs.push_back(std::stod(tok));
  }
  std::vector<std::uint64_t> seeds;
  for (std::stringstream ss(seeds_arg); ss.good();) {
    std::string tok;
    std::getline(ss, tok, ',');
    if (!tok.empty()) seeds.push_back(std::stoull(tok));
  }
  auto report =
      rnnkit::tasks::train_parity(parse_variant(variant), dh, heads, cfg, lrs, seeds);

  ordered_json j;
  j["config"] = ordered_json{{"variant", variant},
                             {"head_dim", dh},
                             {"num_heads", heads},
                             {"train_len_max", cfg.train_len_max},
                             {"eval_len_min", cfg.eval_len_min},
                             {"eval_len_max", cfg.eval_len_max},
                             {"batch_size", cfg.batch_size},
                             {"steps", cfg.steps},
                             {"warmup_steps", cfg.warmup_steps},
                             {"cosine_floor", cfg.cosine_floor},
                             {"lrs", lrs},
                             {"seeds", seeds}};
  j["runs"] = ordered_json::array();
  for (const auto& r : report.runs) {
    ordered_json run{{"lr", r.lr},
                     {"seed", r.seed},
                     {"steps_run", r.steps_run},
                     {"diverged", r.diverged},
                     {"final_extrapolation_accuracy", r.final_accuracy}};
    run["eval_curve"] = ordered_json::array();
    for (auto [step, acc] : r.eval_curve)
      run["eval_curve"].push_back(ordered_json{{"step", step}, {"accuracy", acc}});
    // Subsampled loss curve keeps reports small.
    run["losses"] = ordered_json::array();
    std::size_t stride = std::max<std::size_t>(1, r.losses.size() / 200);
    for (std::size_t i = 0; i < r.losses.size(); i += stride)
      run["losses"].push_back(r.losses[i]);
    j["runs"].push_back(std::move(run));
  }
  j["best_lr"] = report.best_lr;
  j["best_extrapolation_accuracy"] = report.best_accuracy;
  emit(j.dump(2), common.out);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"integer-CSP solver, RNN kernel tiling planner and exact RNN reference engine"};
  app.require_subcommand(1);

  CmdCommon common;
  app.add_flag("--json", common.json, "machine-readable JSON output");
  app.add_option("--out", common.out, "write output to a file instead of stdout");
  app.add_option("--seed", common.seed, "default RNG seed");

  // solve-csp
  std::string problem_path;
  auto* solve_cmd = app.add_subcommand("solve-csp", "solve an integer CSP from a JSON file");
  solve_cmd->add_option("problem", problem_path, "problem JSON path")->required();

  // plan
  std::string variant = "lstm", gpu_arg = "H100", dtype = "bf16", pass = "forward";
  Int head_dim = 768, heads = 1, batch = 16, register_budget = 0, threads_cap = 0;
  auto* plan_cmd = app.add_subcommand("plan", "plan a fused-kernel tiling");
  plan_cmd->add_option("--variant", variant, "elman|lstm|gru|slstm")->capture_default_str();
  plan_cmd->add_option("--head-dim", head_dim, "head dimension")->capture_default_str();
  plan_cmd->add_option("--heads", heads, "number of heads")->capture_default_str();
  plan_cmd->add_option("--batch", batch, "batch size")->capture_default_str();
  plan_cmd->add_option("--dtype", dtype, "bf16|fp16|fp32|fp64")->capture_default_str();
  plan_cmd->add_option("--gpu", gpu_arg, "preset name or JSON path")->capture_default_str();
  plan_cmd->add_option("--pass", pass, "forward|backward|both")->capture_default_str();
  plan_cmd->add_option("--register-budget", register_budget,
                       "fixed register budget in bytes (skips the budget search)");
  plan_cmd->add_option("--block-threads-cap", threads_cap,
                       "absolute thread-block size cap");

  // feasible-heads
  Int min_dh = 1280, max_dh = 2700;
  std::string fh_variant = "lstm", fh_gpu = "H100", fh_dtype = "bf16", fh_pass = "both";
  Int fh_heads = 1, fh_batch = 16;
  auto* fh_cmd = app.add_subcommand("feasible-heads",
                                    "list head dimensions with a feasible fused plan");
  fh_cmd->add_option("--variant", fh_variant)->capture_default_str();
  fh_cmd->add_option("--gpu", fh_gpu)->capture_default_str();
  fh_cmd->add_option("--min", min_dh)->capture_default_str();
  fh_cmd->add_option("--max", max_dh)->capture_default_str();
  fh_cmd->add_option("--heads", fh_heads)->capture_default_str();
  fh_cmd->add_option("--batch", fh_batch)->capture_default_str();
  fh_cmd->add_option("--dtype", fh_dtype)->capture_default_str();
  fh_cmd->add_option("--pass", fh_pass, "forward|both")->capture_default_str();

  // gradcheck
  std::string gc_variant = "lstm";
  int gc_t = 8, gc_dh = 16, gc_heads = 2, gc_batch = 4, gc_seeds = 1;
  double gc_tol = 1e-6;
  auto* gc_cmd = app.add_subcommand("gradcheck",
                                    "finite-difference check of the backward pass");
  gc_cmd->add_option("--variant", gc_variant)->capture_default_str();
  gc_cmd->add_option("--t", gc_t, "sequence length")->capture_default_str();
  gc_cmd->add_option("--dh", gc_dh, "head dimension")->capture_default_str();
  gc_cmd->add_option("--heads", gc_heads)->capture_default_str();
  gc_cmd->add_option("--batch", gc_batch)->capture_default_str();
  gc_cmd->add_option("--seeds", gc_seeds, "number of seeds, starting at --seed")
      ->capture_default_str();
  gc_cmd->add_option("--tol", gc_tol, "max relative error tolerance")->capture_default_str();

  // precision-drift
  std::string pd_variant = "lstm", pd_dtype = "bf16";
  int pd_t = 512, pd_dh = 768, pd_heads = 1;
  auto* pd_cmd = app.add_subcommand("precision-drift",
                                    "per-step error percentiles of a low-precision run");
  pd_cmd->add_option("--variant", pd_variant)->capture_default_str();
  pd_cmd->add_option("--t", pd_t)->capture_default_str();
  pd_cmd->add_option("--dh", pd_dh)->capture_default_str();
  pd_cmd->add_option("--heads", pd_heads)->capture_default_str();
  pd_cmd->add_option("--dtype", pd_dtype, "bf16|fp32")->capture_default_str();

  // train-parity
  std::string tp_variant = "lstm", tp_lrs = "1e-2,1e-3,1e-4", tp_seeds = "1";
  int tp_dh = 16, tp_heads = 1;
  rnnkit::tasks::ParityConfig tp_cfg;
  auto* tp_cmd = app.add_subcommand("train-parity",
                                    "train on the parity task and measure extrapolation");
  tp_cmd->add_option("--variant", tp_variant)->capture_default_str();
  tp_cmd->add_option("--dh", tp_dh)->capture_default_str();
  tp_cmd->add_option("--heads", tp_heads)->capture_default_str();
  tp_cmd->add_option("--steps", tp_cfg.steps)->capture_default_str();
  tp_cmd->add_option("--batch", tp_cfg.batch_size)->capture_default_str();
  tp_cmd->add_option("--train-len-max", tp_cfg.train_len_max)->capture_default_str();
  tp_cmd->add_option("--warmup", tp_cfg.warmup_steps)->capture_default_str();
  tp_cmd->add_option("--eval-every", tp_cfg.eval_every)->capture_default_str();
  tp_cmd->add_option("--eval-sequences", tp_cfg.eval_sequences)->capture_default_str();
  tp_cmd->add_option("--lrs", tp_lrs, "comma-separated peak learning rates")
      ->capture_default_str();
  tp_cmd->add_option("--seeds", tp_seeds, "comma-separated seeds")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (solve_cmd->parsed()) return cmd_solve_csp(problem_path, common);
    if (plan_cmd->parsed())
      return cmd_plan(variant, head_dim, heads, batch, dtype, gpu_arg, pass,
                      register_budget, threads_cap, common);
    if (fh_cmd->parsed())
      return cmd_feasible_heads(fh_variant, fh_gpu, min_dh, max_dh, fh_heads, fh_batch,
                                fh_dtype, fh_pass, common);
    if (gc_cmd->parsed())
      return cmd_gradcheck(gc_variant, gc_t, gc_dh, gc_heads, gc_batch, common.seed,
                           gc_seeds, gc_tol, common);
    if (pd_cmd->parsed())
      return cmd_precision_drift(pd_variant, pd_t, pd_dh, pd_heads, pd_dtype, common.seed,
                                 common);
    if (tp_cmd->parsed()) {
      tp_cfg.seed = common.seed ? common.seed : 1;
      return cmd_train_parity(tp_variant, tp_dh, tp_heads, tp_cfg, tp_lrs, tp_seeds, common);
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
