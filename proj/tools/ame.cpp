// Copyright 2026 The AME Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// ame: command-line front end for the aggregate-market solver.

#include <openssl/sha.h>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ame/ame.hpp"

namespace {

using nlohmann::json;

enum Exit { kOk = 0, kValidation = 1, kSolver = 2, kProperty = 3 };

struct Flags {
  std::string scenario;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> samples;
  std::optional<int> grid;
  std::optional<double> tol;
  std::size_t exchange = 0;
  std::vector<std::string> only;
};

std::string sha256_hex(const std::string& data) {
  unsigned char md[SHA256_DIGEST_LENGTH];
  SHA256(reinterpret_cast<const unsigned char*>(data.data()), data.size(), md);
  std::ostringstream out;
  for (unsigned char c : md) {
    out << std::hex << std::setw(2) << std::setfill('0') << int{c};
  }
  return out.str();
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// --tol loosens or tightens every numerical tolerance at once.
void apply_overrides(ame::ScenarioFile& sf, const Flags& f) {
  if (f.tol) {
    if (!(*f.tol > 0.0)) throw ame::ValidationError("--tol", "must be positive");
    sf.solver.quad_tol = *f.tol;
    sf.solver.breakpoint_tol = *f.tol;
    sf.game.refine_tol = *f.tol;
    sf.game.eq_tol = *f.tol;
  }
  sf.game.solver = sf.solver;
  if (f.seed || f.samples) {
    ame::SimSettings sim = sf.sim.value_or(ame::SimSettings{});
    if (f.seed) sim.seed = *f.seed;
    if (f.samples) sim.samples = *f.samples;
    sf.sim = sim;
  }
}

ame::ScenarioFile load(const Flags& f) {
  if (f.scenario.empty()) {
    throw ame::ValidationError("--scenario", "required for this subcommand");
  }
  auto sf = ame::load_scenario(f.scenario);
  apply_overrides(sf, f);
  for (const auto& w : sf.warnings) std::cerr << "warning: " << w << "\n";
  return sf;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ame::ValidationError("--out", "cannot write " + path);
  out << text;
}

// Wraps a payload in the run record and writes it to --out or stdout.
void emit(const Flags& f, const std::string& subcommand,
          const std::optional<ame::ScenarioFile>& sf, json result) {
  json record = {{"timestamp", utc_now()},
                 {"subcommand", subcommand},
                 {"scenario_hash",
                  sf ? json(sha256_hex(ame::to_json(*sf).dump())) : json(nullptr)},
                 {"result", std::move(result)}};
  if (sf && !sf->warnings.empty()) record["warnings"] = sf->warnings;
  const std::string text = record.dump(2) + "\n";
  if (f.out.empty()) {
    std::cout << text;
  } else {
    write_text(f.out, text);
  }
}

// Summaries go to stdout when the record goes to a file, else to stderr.
std::ostream& human(const Flags& f) {
  return f.out.empty() ? std::cerr : std::cout;
}

std::vector<double> plot_grid(const ame::BiddingFunction& beta, int points) {
  const auto& os = beta.order_statistics();
  std::vector<double> v;
  for (int i = 0; i < points; ++i) {
    v.push_back(os.lo() + (os.hi() - os.lo()) * i / (points - 1.0));
  }
  for (std::size_t ell = 1; ell <= beta.exchange_count(); ++ell) {
    if (beta.sells(ell)) v.push_back(beta.breakpoint(ell));
  }
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

int cmd_solve(const Flags& f) {
  const auto sf = load(f);
  const auto beta = ame::solve_bidding(sf.market, sf.solver);
  emit(f, "solve", sf, ame::to_json(beta, plot_grid(beta, f.grid.value_or(21))));
  return kOk;
}

int cmd_emit_bidding(const Flags& f) {
  const auto sf = load(f);
  if (f.out.empty()) throw ame::ValidationError("--out", "CSV path required");
  const auto beta = ame::solve_bidding(sf.market, sf.solver);
  const auto v = plot_grid(beta, f.grid.value_or(1001));
  std::ostringstream csv;
  csv << std::setprecision(17) << "v,beta\n";
  for (double x : v) csv << x << "," << beta(x) << "\n";
  write_text(f.out, csv.str());
  Flags side = f;
  side.out = f.out + ".json";
  emit(side, "emit-bidding", sf, ame::to_json(beta, {}));
  human(side) << "wrote " << v.size() << " points to " << f.out << "\n";
  return kOk;
}

int cmd_revenue(const Flags& f) {
  const auto sf = load(f);
  const auto rep = ame::revenue_report(sf.market, sf.solver);
  emit(f, "revenue", sf, ame::to_json(rep));
  auto& h = human(f);
  h << std::setprecision(6) << "| exchange | mechanism | lambda | breakpoint "
    << "| revenue |\n|---|---|---|---|---|\n";
  for (const auto& e : rep.per_exchange) {
    h << "| " << e.index << " | " << ame::kind_name(e.mechanism.kind) << "_"
      << e.mechanism.reserve << " | " << e.lambda << " | " << e.breakpoint
      << " | " << e.revenue << " |\n";
  }
  h << "weighted total " << rep.weighted_total << ", welfare " << rep.welfare;
  if (rep.myerson) h << ", Myerson " << *rep.myerson;
  h << "\n";
  return kOk;
}

int cmd_simulate(const Flags& f) {
  const auto sf = load(f);
  const auto sim = sf.sim.value_or(ame::SimSettings{});
  const auto beta = ame::solve_bidding(sf.market, sf.solver);
  ame::SimConfig<ame::BiddingFunction> sc{sim.samples, sim.seed, beta.market(),
                                          beta};
  const auto mc = ame::estimate(sc);
  json analytic = json::array();
  json z = json::array();
  for (std::size_t ell = 1; ell <= beta.exchange_count(); ++ell) {
    const double exact = ame::exchange_revenue(beta, ell, sf.solver.quad_tol);
    analytic.push_back(exact);
    const double se = mc.per_exchange_stderr[ell - 1];
    z.push_back(se > 0.0 ? (mc.per_exchange_mean[ell - 1] - exact) / se : 0.0);
  }
  json result = ame::to_json(mc);
  result["seed"] = sim.seed;
  result["market"] = ame::to_json(beta.market());
  result["analytic_revenue"] = analytic;
  result["z_scores"] = z;
  emit(f, "simulate", sf, result);
  auto& h = human(f);
  h << std::setprecision(6)
    << "| exchange | mean | stderr | analytic | z |\n|---|---|---|---|---|\n";
  for (std::size_t k = 0; k < analytic.size(); ++k) {
    h << "| " << k << " | " << mc.per_exchange_mean[k] << " | "
      << mc.per_exchange_stderr[k] << " | " << analytic[k].get<double>()
      << " | " << z[k].get<double>() << " |\n";
  }
  return kOk;
}

int cmd_best_response(const Flags& f) {
  auto sf = load(f);
  if (f.grid) sf.game.coarse_grid = *f.grid;
  if (f.exchange >= sf.market.exchanges.size()) {
    throw ame::ValidationError("--exchange", "out of range");
  }
  const auto br = ame::best_response(sf.market, f.exchange, sf.kinds, sf.game);
  for (const auto& p : br.failed_probes) std::cerr << "probe failed: " << p << "\n";
  emit(f, "best-response", sf, ame::to_json(br));
  return kOk;
}

int cmd_equilibrium(const Flags& f) {
  auto sf = load(f);
  if (f.grid) sf.game.coarse_grid = *f.grid;
  const auto eq = ame::iterated_best_response(sf.market, sf.max_iters,
                                              sf.game.eq_tol, sf.kinds, sf.game);
  emit(f, "equilibrium", sf, ame::to_json(eq));
  human(f) << (eq.converged ? "converged" : "not converged") << " after "
           << eq.iterations << " sweeps, max gain " << eq.max_gain << "\n";
  return kOk;
}

// Property checks on one scenario's market.
std::vector<ame::CriterionResult> scenario_properties(
    const ame::ScenarioFile& sf) {
  using ame::Check;
  const auto& cfg = sf.market;
  const auto t0 = std::chrono::steady_clock::now();
  ame::CriterionResult r;
  r.id = "scenario";
  r.title = "Properties of the scenario market";
  auto check = [&](std::string label, double computed, std::string rel,
                   double bound) {
    bool ok = rel == "<=" ? computed <= bound : computed > bound;
    r.checks.push_back({std::move(label), bound, computed, 0.0, rel, ok});
  };
  try {
    const auto beta = ame::solve_bidding(cfg, sf.solver);
    const auto& dist = cfg.dist;
    const auto values = ame::quantile_grid(dist, 200);
    check("regret_audit", ame::regret_audit(beta, values, 2000, sf.solver.quad_tol),
          "<=", 1e-4);
    double over = 0.0, drop = 0.0, prev = 0.0;
    for (double v : values) {
      over = std::max(over, beta(v) - v);
      drop = std::max(drop, prev - beta(v));
      prev = beta(v);
    }
    check("max(beta(v) - v)", over, "<=", 1e-12);
    check("max decrease of beta", drop, "<=", 1e-12);
    const std::size_t m = cfg.exchanges.size();
    for (std::size_t j = 0; j < m; ++j) {
      try {
        const auto cmp = ame::verify_fp_dominates_sp(cfg, j, sf.solver);
        const bool strict = m >= 2 && cfg.exchanges[j].lambda < 1.0;
        check("FP - SP margin, exchange " + std::to_string(j), cmp.margin,
              strict ? ">" : ">=", strict ? 1e-6 : -1e-9);
      } catch (const ame::HypothesisViolated&) {
        // the dominance property does not apply to this exchange
      }
    }
    bool all_fp0 = m >= 2, common = m >= 2;
    for (const auto& e : cfg.exchanges) {
      all_fp0 = all_fp0 && e.mechanism == ame::first_price(0.0);
      common = common && e.mechanism.kind == ame::MechanismKind::FirstPrice &&
               e.mechanism.reserve == cfg.exchanges[0].mechanism.reserve;
    }
    if (all_fp0) {
      double best = -1.0;
      for (int k = 1; k <= 20; ++k) {
        best = std::max(best,
                        ame::deviation_gain_zero_reserve(cfg, 0.01 * k, sf.solver).gain);
      }
      check("zero-reserve deviation gain", best, ">", 1e-6);
    } else if (common && cfg.exchanges[0].mechanism.reserve >= 2.0 * sf.game.fd_step) {
      check("|symmetric instability|",
            std::abs(ame::symmetric_instability(cfg, sf.game)), ">", 1e-5);
    }
  } catch (const std::exception& e) {
    r.error = e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                  .count();
  r.pass = r.error.empty();
  for (const auto& c : r.checks) r.pass = r.pass && c.pass;
  return {r};
}

int report(const Flags& f, const std::string& subcommand,
           const std::optional<ame::ScenarioFile>& sf,
           const std::vector<ame::CriterionResult>& results, json extra = {}) {
  json arr = json::array();
  bool ok = true;
  for (const auto& r : results) {
    arr.push_back(ame::to_json(r));
    ok = ok && r.pass;
  }
  json result = {{"pass", ok}, {"criteria", arr}};
  if (!extra.is_null()) result["options"] = extra;
  emit(f, subcommand, sf, result);
  human(f) << "\n" << ame::markdown_table(results);
  return ok ? kOk : kProperty;
}

int cmd_verify(const Flags& f) {
  if (!f.scenario.empty()) {
    const auto sf = load(f);
    return report(f, "verify", sf, scenario_properties(sf));
  }
  ame::ReproOptions opts;
  opts.only = {"cor4", "thm1", "thm2", "thm3", "regret"};
  if (f.tol) {
    opts.solver.quad_tol = opts.solver.breakpoint_tol = *f.tol;
    opts.game.refine_tol = opts.game.eq_tol = *f.tol;
  }
  const auto results = ame::run_repro(opts, [&](const ame::CriterionResult& r) {
    human(f) << ame::summary_line(r) << std::endl;
  });
  return report(f, "verify", std::nullopt, results);
}

int cmd_repro(const Flags& f) {
  ame::ReproOptions opts;
  opts.only = f.only;
  std::optional<ame::ScenarioFile> sf;
  if (!f.scenario.empty()) {
    // Only the solver and game settings of the file are used.
    sf = load(f);
    opts.solver = sf->solver;
    opts.game = sf->game;
  }
  if (f.tol) {
    if (!(*f.tol > 0.0)) throw ame::ValidationError("--tol", "must be positive");
    opts.solver.quad_tol = opts.solver.breakpoint_tol = *f.tol;
    opts.game.refine_tol = opts.game.eq_tol = *f.tol;
  }
  if (f.seed) opts.seed = *f.seed;
  if (f.samples) opts.mc_samples = *f.samples;
  const auto results = ame::run_repro(opts, [&](const ame::CriterionResult& r) {
    human(f) << ame::summary_line(r) << std::endl;
  });
  json options = {{"tol", f.tol ? json(*f.tol) : json(nullptr)},
                  {"seed", opts.seed},
                  {"mc_samples", opts.mc_samples},
                  {"only", opts.only}};
  return report(f, "repro", sf, results, options);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bidding equilibria and reserve competition in aggregate ad markets"};
  app.require_subcommand(1);
  Flags flags;

  auto common = [&](CLI::App* sub, bool scenario_required) {
    auto* opt = sub->add_option("--scenario", flags.scenario, "scenario JSON file");
    if (scenario_required) opt->required();
    sub->add_option("--out", flags.out, "output path (default stdout)");
    sub->add_option("--seed", flags.seed, "random seed");
    sub->add_option("--samples", flags.samples, "Monte Carlo samples")
        ->check(CLI::PositiveNumber);
    sub->add_option("--grid", flags.grid, "grid size")->check(CLI::Range(3, 1 << 24));
    sub->add_option("--tol", flags.tol, "override all numerical tolerances")
        ->check(CLI::PositiveNumber);
  };

  struct Sub {
    const char* name;
    const char* help;
    bool needs_scenario;
    int (*run)(const Flags&);
  };
  const Sub subs[] = {
      {"solve", "solve the bidding equilibrium", true, cmd_solve},
      {"emit-bidding", "write beta(v) as CSV plus a JSON sidecar", true,
       cmd_emit_bidding},
      {"revenue", "per-exchange revenue, welfare and the Myerson benchmark", true,
       cmd_revenue},
      {"simulate", "Monte Carlo estimate of every exchange's revenue", true,
       cmd_simulate},
      {"best-response", "best (kind, reserve) for one exchange", true,
       cmd_best_response},
      {"equilibrium", "iterated best response between exchanges", true,
       cmd_equilibrium},
      {"verify", "property suite on a scenario, or the dominance and stability criteria", false,
       cmd_verify},
      {"repro", "run every acceptance criterion", false, cmd_repro},
  };
  std::vector<std::pair<CLI::App*, const Sub*>> registered;
  for (const auto& s : subs) {
    auto* sub = app.add_subcommand(s.name, s.help);
    common(sub, s.needs_scenario);
    if (std::string(s.name) == "best-response") {
      sub->add_option("--exchange", flags.exchange, "0-based exchange index");
    }
    if (std::string(s.name) == "repro") {
      sub->add_option("--only", flags.only, "criterion ids")
          ->delimiter(',')
          ->check(CLI::IsMember(ame::criterion_ids()));
    }
    registered.emplace_back(sub, &s);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  try {
    for (const auto& [sub, s] : registered) {
      if (sub->parsed()) return s->run(flags);
    }
  } catch (const ame::SolverDiverged& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kSolver;
  } catch (const ame::DegenerateSegment& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kSolver;
  } catch (const ame::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kSolver;
  }
  return kValidation;
}
