// sk_adapt: command-line front end. Every command prints one JSON report
// {command, fingerprint, results, wall_time} unless --csv is given.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "skadapt/skadapt.hpp"

namespace {

using namespace skadapt;

struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct Globals {
  int workers = 0;
  bool csv = false;
  std::string command;
};

Instance load_nonempty(const std::string& path) {
  Instance inst = load_instance(path);
  if (inst.empty()) throw UsageError("instance '" + path + "' has no items");
  return inst;
}

std::string sidecar_path(const std::string& out) {
  const std::string ext = ".json";
  if (out.size() > ext.size() && out.compare(out.size() - ext.size(), ext.size(), ext) == 0)
    return out.substr(0, out.size() - ext.size()) + ".predictions.json";
  return out + ".predictions.json";
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw UsageError("malformed JSON in '" + path + "': " + e.what());
  }
  return j;
}

json ids_1based(std::span<const ItemId> ids) {
  json a = json::array();
  for (ItemId i : ids) a.push_back(i + 1);
  return a;
}

// `exact` entries are added to the results after rounding (instances must
// survive the round trip bit for bit).
void emit(const Globals& g, const json& results, const std::optional<Instance>& inst,
          std::chrono::steady_clock::time_point t0, const json& exact = json::object()) {
  json report;
  report["command"] = g.command;
  report["fingerprint"] = inst ? json(fingerprint(*inst)) : json(nullptr);
  report["results"] = results;
  report["wall_time"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  report = round_sig(report);
  for (auto it = exact.begin(); it != exact.end(); ++it) report["results"][it.key()] = it.value();
  std::cout << report.dump(2) << '\n';
}

void print_csv_row(const std::vector<double>& xs) {
  std::string line;
  for (std::size_t i = 0; i < xs.size(); ++i) line += (i ? "," : "") + num12(xs[i]);
  std::cout << line << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  using Clock = std::chrono::steady_clock;
  const auto t0 = Clock::now();
  Globals g;
  for (int i = 0; i < argc; ++i) g.command += (i ? " " : "") + std::string(argv[i]);

  CLI::App app{"Stochastic knapsack policies, exact oracles and gap experiments"};
  app.require_subcommand(1);
  app.add_option("--workers", g.workers, "Worker threads (default: SK_ADAPT_WORKERS or hardware)")
      ->check(CLI::NonNegativeNumber);
  app.add_flag("--csv", g.csv, "Print tables as CSV instead of JSON");

  std::function<int()> action;

  // phi
  std::string instance_path;
  double t = 1.0;
  auto* phi_cmd = app.add_subcommand("phi", "Fractional LP benchmark Phi(t)");
  phi_cmd->add_option("--instance", instance_path, "Instance JSON")->required();
  phi_cmd->add_option("--t", t, "Mass budget t")->check(CLI::NonNegativeNumber);
  phi_cmd->callback([&] {
    action = [&] {
      Instance inst = load_nonempty(instance_path);
      auto sol = phi(inst, t);
      json r = {{"t", sol.t}, {"value", sol.value}, {"x", sol.x},
                {"split_item", sol.split_item ? json(*sol.split_item + 1) : json(nullptr)},
                {"adapt_upper_bound", adapt_upper_bound(inst)}};
      emit(g, r, inst, t0);
      return 0;
    };
  });

  // eval
  std::string policy_text = "greedy0", method = "exact";
  std::uint64_t samples = 100'000, seed = 1;
  double ci_level = 0.99;
  bool trace = false;
  std::size_t node_budget = 4'000'000;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a policy exactly or by simulation");
  eval_cmd->add_option("--instance", instance_path, "Instance JSON")->required();
  eval_cmd->add_option("--policy", policy_text, "plan:3,1,2 | greedy0 | semi1 | semik:k=2,alpha=uniform | adaptive | "
                                                "large:eps=0.2 | threshold:k=99 | always | tree:@file.json");
  eval_cmd->add_option("--method", method, "exact, mc or auto")->check(CLI::IsMember({"exact", "mc", "auto"}));
  eval_cmd->add_option("--samples", samples, "Monte Carlo samples")->check(CLI::PositiveNumber);
  eval_cmd->add_option("--seed", seed, "Monte Carlo seed");
  eval_cmd->add_option("--ci", ci_level, "Confidence level for the interval")->check(CLI::Range(0.5, 0.999999));
  eval_cmd->add_option("--node-budget", node_budget, "State budget of the exact evaluator");
  eval_cmd->add_flag("--trace", trace, "Include the policy's construction trace");
  eval_cmd->callback([&] {
    action = [&] {
      Instance inst = load_nonempty(instance_path);
      auto pp = parse_policy(policy_text, inst);
      json r = {{"policy", policy_text}, {"method", method}};
      McConfig cfg{samples, seed, ci_level, g.workers};
      EvalOptions opt{node_budget};
      auto run_mc = [&] {
        auto mc = simulate(inst, pp.policy, cfg);
        r["method"] = "mc";
        r["value"] = mc.mean;
        r["std_error"] = mc.std_error;
        r["ci_halfwidth"] = mc.ci_halfwidth;
        r["ci_level"] = ci_level;
        r["overflow_prob"] = mc.overflow_freq;
        r["samples"] = mc.samples;
        r["seed"] = seed;
      };
      if (method == "mc") {
        run_mc();
      } else {
        try {
          auto ex = evaluate_exact(inst, pp.policy, opt);
          r["method"] = "exact";
          r["value"] = ex.expected_value;
          r["overflow_prob"] = ex.overflow_prob;
          r["queries_used"] = ex.queries_used;
          r["states"] = ex.states;
        } catch (const branch_explosion_error& e) {
          if (method == "exact") throw;
          r["exact_error"] = e.what();
          run_mc();
        }
      }
      if (const auto* plan = std::get_if<NonAdaptivePlan>(&pp.policy)) r["plan"] = ids_1based(plan->order);
      if (trace) r["trace"] = pp.trace;
      emit(g, r, inst, t0);
      return 0;
    };
  });

  // adapt
  std::string tree_out;
  auto* adapt_cmd = app.add_subcommand("adapt", "Optimal fully adaptive policy (exact, small n)");
  adapt_cmd->add_option("--instance", instance_path, "Instance JSON")->required();
  adapt_cmd->add_option("--tree-out", tree_out, "Write the optimal decision tree here");
  adapt_cmd->callback([&] {
    action = [&] {
      Instance inst = load_nonempty(instance_path);
      auto sol = optimal_adaptive(inst, !tree_out.empty());
      json r = {{"value", sol.value}, {"states", sol.states}, {"phi1", phi(inst, 1.0).value}};
      if (!tree_out.empty()) {
        save_json(tree_to_json(sol.tree), tree_out);
        r["tree"] = tree_out;
      }
      emit(g, r, inst, t0);
      return 0;
    };
  });

  // alg
  int k = 0;
  auto* alg_cmd = app.add_subcommand("alg", "Optimal policy with at most k observations (k = 0: non-adaptive)");
  alg_cmd->add_option("--instance", instance_path, "Instance JSON")->required();
  alg_cmd->add_option("--k", k, "Observation budget")->check(CLI::NonNegativeNumber);
  alg_cmd->add_option("--tree-out", tree_out, "Write the optimal decision tree here (k >= 1)");
  alg_cmd->callback([&] {
    action = [&] {
      Instance inst = load_nonempty(instance_path);
      json r = {{"k", k}};
      if (k == 0) {
        auto sol = optimal_nonadaptive(inst);
        r["value"] = sol.value;
        r["plan"] = ids_1based(sol.plan.order);
      } else {
        auto sol = optimal_k_semi_adaptive(inst, k, !tree_out.empty());
        r["value"] = sol.value;
        r["states"] = sol.states;
        if (!tree_out.empty()) {
          save_json(tree_to_json(sol.tree), tree_out);
          r["tree"] = tree_out;
        }
      }
      emit(g, r, inst, t0);
      return 0;
    };
  });

  // gap
  bool closed_form = false;
  int gap_k = 1;
  auto* gap_cmd = app.add_subcommand("gap", "Adaptivity gaps of an instance");
  gap_cmd->add_option("--instance", instance_path, "Instance JSON")->required();
  gap_cmd->add_option("--k", gap_k, "Observation budget for the 0-k / k-n split")->check(CLI::NonNegativeNumber);
  gap_cmd->add_flag("--closed-form", closed_form, "Report the family's closed-form gap from the predictions file");
  gap_cmd->callback([&] {
    action = [&] {
      Instance inst = load_nonempty(instance_path);
      json r;
      if (closed_form) {
        json pred = load_json_file(sidecar_path(instance_path));
        if (!pred.contains("gap")) throw UsageError("predictions file has no closed-form gap");
        if (pred.contains("fingerprint") && pred["fingerprint"] != fingerprint(inst))
          throw UsageError("predictions file does not belong to this instance");
        r = {{"closed_form", true}, {"gap", pred["gap"]}, {"family", pred.value("family", "")}};
      } else {
        auto rep = measure_gaps(inst, gap_k);
        r = {{"closed_form", false},        {"k", rep.k},
             {"adapt", rep.adapt_value},     {"alg", rep.alg_value},
             {"gap", rep.gap_full},          {"bound", rep.bound},
             {"pass", rep.pass}};
        if (rep.a_k_value) {
          r["a_k"] = *rep.a_k_value;
          r["gap_0k"] = *rep.gap_0k;
          r["gap_kn"] = *rep.gap_kn;
          r["product_slack"] = *rep.product_slack;
        }
      }
      emit(g, r, inst, t0);
      return 0;
    };
  });

  // family
  std::string out_path;
  auto* fam_cmd = app.add_subcommand("family", "Generate a named instance family");
  fam_cmd->require_subcommand(1);
  auto write_family = [&](const FamilyInstance& f) {
    json pred = f.predictions;
    pred["fingerprint"] = fingerprint(f.instance);
    json r = {{"predictions", pred}};
    if (!out_path.empty()) {
      save_json(instance_to_json(f.instance), out_path);
      save_json(round_sig(pred), sidecar_path(out_path));
      r["out"] = out_path;
      r["predictions_file"] = sidecar_path(out_path);
    }
    emit(g, r, f.instance, t0, out_path.empty() ? json{{"instance", instance_to_json(f.instance)}} : json::object());
    return 0;
  };
  std::size_t fam_n = 10;
  double fam_eps = 0.01, fam_p1 = -1.0, fam_p0 = 0.0, fam_a = 1e9, eps_base = 1e-3;
  std::vector<double> fam_p;
  std::string variant_text = "risky";
  int fam_k = 2;

  auto* bern = fam_cmd->add_subcommand("bernoulli-eps", "n items of value eps, size 1 w.p. eps else 0");
  bern->add_option("--eps", fam_eps, "eps")->check(CLI::Range(0.0, 1.0));
  bern->add_option("--n", fam_n, "Number of items")->check(CLI::PositiveNumber);
  bern->add_option("--variant", variant_text, "risky or nonrisky")->check(CLI::IsMember({"risky", "nonrisky"}));
  bern->add_option("--out", out_path, "Instance output file");
  bern->callback([&] {
    action = [&] { return write_family(make_bernoulli_eps(fam_eps, fam_n, parse_variant(variant_text))); };
  });

  auto* h2r = fam_cmd->add_subcommand("h2-risky", "Two-item-deep risky family with gap up to 1 + ln 2");
  h2r->add_option("--n", fam_n, "Number of large items")->check(CLI::PositiveNumber);
  h2r->add_option("--p1", fam_p1, "p_1 (default 1/2) with a uniform tail");
  h2r->add_option("--p", fam_p, "Explicit probabilities p_1..p_n")->delimiter(',');
  h2r->add_option("--out", out_path, "Instance output file");
  h2r->callback([&] {
    action = [&] {
      auto p = fam_p.empty() ? uniform_tail(fam_p1 < 0 ? 0.5 : fam_p1, fam_n) : fam_p;
      return write_family(make_h2_risky(p));
    };
  });

  auto* h2n = fam_cmd->add_subcommand("h2-nonrisky", "Non-risky family with terminal items, gap up to 1 + 1/e");
  h2n->add_option("--n", fam_n, "Number of terminal items")->check(CLI::PositiveNumber);
  h2n->add_option("--p0", fam_p0, "Overflow probability of item 0");
  h2n->add_option("--p1", fam_p1, "p_1 (default 1/e) with a uniform tail");
  h2n->add_option("--p", fam_p, "Explicit probabilities p_1..p_n (sum 1 - p0)")->delimiter(',');
  h2n->add_option("--a", fam_a, "Terminal parameter a");
  h2n->add_option("--out", out_path, "Instance output file");
  h2n->callback([&] {
    action = [&] {
      auto p = fam_p.empty() ? uniform_tail(fam_p1 < 0 ? std::exp(-1.0) : fam_p1, fam_n, 1.0 - fam_p0) : fam_p;
      return write_family(make_h2_nonrisky(fam_p0, p, fam_a));
    };
  });

  auto* nlb = fam_cmd->add_subcommand("noisy-lb", "Noisy risky family with gap 2 - 2^(1-k)");
  nlb->add_option("--k", fam_k, "Depth k")->check(CLI::PositiveNumber);
  nlb->add_option("--eps-base", eps_base, "Grid base eps (reciprocal of an integer)");
  nlb->add_option("--out", out_path, "Instance output file");
  nlb->callback([&] { action = [&] { return write_family(make_noisy_lb(fam_k, eps_base)); }; });

  RandomSpec rspec;
  std::string mode_text = "any";
  std::int64_t scale_i = 20, size_max_i = 30;
  auto* rnd = fam_cmd->add_subcommand("random", "Seeded random instance");
  rnd->add_option("--n", rspec.n, "Number of items")->check(CLI::PositiveNumber);
  rnd->add_option("--atoms", rspec.atoms, "Maximum atoms per item")->check(CLI::PositiveNumber);
  rnd->add_option("--seed", rspec.seed, "Seed");
  rnd->add_option("--scale", scale_i, "Grid units per capacity")->check(CLI::PositiveNumber);
  rnd->add_option("--size-max", size_max_i, "Largest atom size in grid units")->check(CLI::NonNegativeNumber);
  rnd->add_option("--value-lo", rspec.value_lo, "Smallest value");
  rnd->add_option("--value-hi", rspec.value_hi, "Largest value");
  rnd->add_option("--variant", variant_text, "risky or nonrisky")->check(CLI::IsMember({"risky", "nonrisky"}));
  rnd->add_option("--mode", mode_text, "any, small or large")->check(CLI::IsMember({"any", "small", "large"}));
  rnd->add_option("--eps", rspec.eps, "Small/large threshold for the restricted modes");
  rnd->add_option("--out", out_path, "Instance output file");
  rnd->callback([&] {
    action = [&] {
      rspec.scale = scale_i;
      rspec.size_max = size_max_i;
      rspec.variant = parse_variant(variant_text);
      rspec.mode = mode_text == "small" ? RandomMode::SmallOnly : mode_text == "large" ? RandomMode::LargeOnly : RandomMode::Any;
      FamilyInstance f{make_random(rspec)};
      f.predictions = {{"family", "random"}, {"seed", rspec.seed}};
      return write_family(f);
    };
  });

  // bounds
  auto* bounds_cmd = app.add_subcommand("bounds", "Numerical certificates and recursions");
  bounds_cmd->require_subcommand(1);
  int grid = 200;
  std::optional<double> gamma_fixed;
  bool fixed_t = false;
  auto* ct = bounds_cmd->add_subcommand("certify-t", "min-max constant of the non-adaptive greedy");
  ct->add_option("--grid", grid, "Lattice points per axis")->check(CLI::Range(50, 5000));
  ct->add_option("--gamma", gamma_fixed, "Hold gamma fixed");
  ct->callback([&] {
    action = [&] {
      auto r = certify_T(grid, resolve_workers(g.workers), gamma_fixed);
      emit(g,
           {{"grid", grid}, {"min_found", r.min_found}, {"grid_min", r.grid_min},
            {"argmin", {{"alpha", r.argmin[0]}, {"beta", r.argmin[1]}, {"gamma", r.argmin[2]}}},
            {"points", r.points}, {"reference", std::sqrt(5.0) - 2.0}},
           std::nullopt, t0);
      return 0;
    };
  });
  auto* ctp = bounds_cmd->add_subcommand("certify-tprime", "min-max constant of the one-query greedy");
  ctp->add_option("--grid", grid, "Lattice points per axis")->check(CLI::Range(10, 1000));
  ctp->add_flag("--fixed-t", fixed_t, "Use the fallback t instead of optimizing it");
  ctp->callback([&] {
    action = [&] {
      auto r = certify_Tprime(grid, resolve_workers(g.workers), !fixed_t);
      emit(g,
           {{"grid", grid},
            {"optimize_t", !fixed_t},
            {"min_found", r.min_found},
            {"grid_min", r.grid_min},
            {"argmin", {{"alpha", r.argmin[0]}, {"beta", r.argmin[1]}, {"gamma", r.argmin[2]}, {"p", r.argmin[3]}}},
            {"points", r.points},
            {"pruned", r.pruned}},
           std::nullopt, t0);
      return 0;
    };
  });
  int rec_k = 50;
  auto* rec = bounds_cmd->add_subcommand("recursion", "Gap recursions G_1..G_k");
  rec->add_option("--variant", variant_text, "risky or nonrisky")->check(CLI::IsMember({"risky", "nonrisky"}));
  rec->add_option("--k", rec_k, "Number of terms")->check(CLI::PositiveNumber);
  rec->callback([&] {
    action = [&] {
      auto seq = variant_text == "risky" ? risky_recursion(rec_k) : nonrisky_recursion(rec_k);
      if (g.csv) {
        print_csv_row(seq);
        return 0;
      }
      emit(g, {{"variant", variant_text}, {"k", rec_k}, {"sequence", seq}}, std::nullopt, t0);
      return 0;
    };
  });
  double ex_eps = 0.01;
  int horizon = 0;
  std::size_t ex_items = 0;
  auto* ex1 = bounds_cmd->add_subcommand("example1", "Stopping threshold for Bernoulli(eps) items (risky)");
  ex1->add_option("--eps", ex_eps, "eps in (0, 0.1]");
  ex1->add_option("--horizon", horizon, "MDP horizon (default 10/eps)");
  ex1->add_option("--n-items", ex_items, "Items available to the threshold policy (default: horizon)");
  ex1->callback([&] {
    action = [&] {
      int h = horizon > 0 ? horizon : static_cast<int>(std::ceil(10.0 / ex_eps));
      auto r = example1_mdp(ex_eps, h, ex_items);
      emit(g,
           {{"eps", r.eps}, {"horizon", r.horizon}, {"threshold", r.threshold},
            {"value_estimate", r.value_estimate}, {"overflow_estimate", r.overflow_estimate},
            {"n_items", r.n_items}, {"threshold_value", r.threshold_value},
            {"threshold_overflow", r.threshold_overflow}},
           std::nullopt, t0);
      return 0;
    };
  });

  // reproduce
  bool quick = false;
  std::vector<int> only;
  std::uint64_t rseed = reproduce::Options{}.seed;
  auto* rep_cmd = app.add_subcommand("reproduce", "Run the numbered reproduction checks");
  rep_cmd->add_flag("--quick", quick, "Smaller corpora and grids, same tolerances");
  rep_cmd->add_option("--only", only, "Run only these criteria (comma separated)")->delimiter(',');
  rep_cmd->add_option("--seed", rseed, "Corpus seed");
  rep_cmd->callback([&] {
    action = [&] {
      reproduce::Options opt{quick, g.workers, rseed};
      auto res = reproduce::run(opt, std::set<int>(only.begin(), only.end()), [](const reproduce::Criterion& c) {
        std::cerr << reproduce::format_line(c) << std::flush;
      });
      bool all = !res.empty();
      for (const auto& c : res) all = all && c.pass();
      if (g.csv) {
        std::cout << "criterion,pass,seconds,title\n";
        for (const auto& c : res)
          std::cout << c.id << ',' << (c.pass() ? "pass" : "fail") << ',' << num12(c.seconds) << ",\"" << c.title
                    << "\"\n";
      } else {
        json table = json::array();
        for (const auto& c : res) table.push_back(reproduce::to_json(c));
        emit(g, {{"quick", quick}, {"all_pass", all}, {"criteria", table}}, std::nullopt, t0);
      }
      return all ? 0 : 1;
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  try {
    return action ? action() : 2;
  } catch (const size_limit_error& e) {
    std::cerr << "size limit: " << e.what() << '\n';
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const json::exception& e) {
    std::cerr << "error: malformed input: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
