#include "commands.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "fradrc/analysis.hpp"
#include "fradrc/grid.hpp"
#include "fradrc/stability.hpp"
#include "svg.hpp"

namespace fradrc::cli {

namespace fs = std::filesystem;

namespace {

class OutDir {
 public:
  explicit OutDir(const std::string& dir) : dir_(dir) {
    if (!dir_.empty()) fs::create_directories(dir_);
  }
  bool enabled() const { return !dir_.empty(); }

  // Written to a temporary name first, then renamed into place.
  void write(const std::string& name, const std::string& content) const {
    if (dir_.empty()) return;
    const fs::path target = fs::path(dir_) / name;
    const fs::path tmp = fs::path(dir_) / (name + ".tmp");
    {
      std::ofstream f(tmp, std::ios::binary);
      if (!f) throw Error("cannot write " + tmp.string());
      f << content;
      if (!f) throw Error("write failed for " + tmp.string());
    }
    fs::rename(tmp, target);
  }

 private:
  std::string dir_;
};

Scenario load(const Options& o) {
  Scenario sc = load_scenario(o.config);
  if (o.oracle_filters)
    for (auto& d : sc.designs) d.eso.bank = FilterBank::GlOracle;
  return sc;
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(v[i]);
  return s;
}

std::string join(const std::vector<Rational>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + v[i].str();
  return s;
}

bool b_matches(const Scenario& sc, const AdrcDesign& d) {
  return std::fabs(sc.plant.b - d.eso.b0) <= 1e-12 * std::fabs(sc.plant.b);
}

struct LoopInfo {
  std::optional<Margins> approx, exact;
  double lf_gain = 0.0;
  Rational lf_order;
};

FracRational exact_loop(const Scenario& sc, const AdrcDesign& d) {
  if (d.eso.variant == Variant::IFO) return open_loop_tf(sc.plant, d).exact;
  return open_loop_generic(sc.plant, d);
}

LoopInfo loop_info(const Scenario& sc, const AdrcDesign& d) {
  LoopInfo li;
  const FracRational g = approx_open_loop(d);
  const Term& n = g.num().terms().back();
  const Term& dn = g.den().terms().back();
  li.lf_gain = n.coeff / dn.coeff;
  li.lf_order = dn.order - n.order;
  const double lo = sc.freq.lo, hi = sc.freq.hi;
  try {
    li.approx = margins(g, lo, hi);
  } catch (const NotFound&) {
  }
  try {
    li.exact = margins(exact_loop(sc, d), lo, hi);
  } catch (const NotFound&) {
  }
  return li;
}

std::optional<StabilityReport> sector(const Scenario& sc, const AdrcDesign& d, LambdaConvention conv) {
  if (!b_matches(sc, d)) return std::nullopt;
  return sector_check(char_poly_closed(sc.plant, d, conv));
}

std::string traj_csv(const SimResult& r) {
  std::ostringstream os;
  os << "t,r,y,u";
  for (std::size_t i = 0; i < r.z.size(); ++i) os << ",z" << i + 1;
  os << ",f_hat,f_true,d\n";
  for (std::size_t k = 0; k < r.samples(); ++k) {
    os << fmt(r.t[k]) << ',' << fmt(r.r[k]) << ',' << fmt(r.y[k]) << ',' << fmt(r.u[k]);
    for (const auto& z : r.z) os << ',' << fmt(z[k]);
    os << ',' << fmt(r.f_hat[k]) << ',' << fmt(r.f_true[k]) << ',' << fmt(r.d[k]) << '\n';
  }
  return os.str();
}

const char* kMetricsHeader =
    "design,rise_time,peak_time,overshoot,settling_time,steady_state_error,y_max,y_ss,dist_max_deviation,"
    "dist_recovery_time\n";

std::string metrics_row(const std::string& name, const StepMetrics& m) {
  std::ostringstream os;
  os << name << ',' << fmt(m.rise_time) << ',' << fmt(m.peak_time) << ',' << fmt(m.overshoot) << ','
     << fmt(m.settling_time) << ',' << fmt(m.steady_state_error) << ',' << fmt(m.y_max) << ',' << fmt(m.y_ss)
     << ',' << fmt(m.dist_max_deviation) << ',' << fmt(m.dist_recovery_time) << '\n';
  return os.str();
}

SimResult simulate(const Scenario& sc, const AdrcDesign& d) {
  if (!has_tracking(d)) throw ConfigError(d.name + ": simulation needs tracking gains (kp, kd)");
  return closed_loop_simulate(sc.plant, d, sc.sim.ref, sc.sim.dist, sc.sim.dt, sc.sim.T);
}

// Runs f(i) for i in [0, n) concurrently; results come back in index order.
template <class F>
auto parallel_map(std::size_t n, F f) {
  using R = decltype(f(std::size_t{0}));
  std::vector<std::future<R>> futs;
  for (std::size_t i = 0; i < n; ++i) futs.push_back(std::async(std::launch::async, f, i));
  std::vector<R> out;
  for (auto& fu : futs) out.push_back(fu.get());
  return out;
}

void require_sim(const Scenario& sc, const char* what) {
  if (!sc.sim.present) throw ConfigError(std::string(what) + " needs a [sim] section");
}

std::vector<double> sweep_list(const Options& o, const Scenario& sc) {
  const auto& k = o.k.empty() ? sc.sweep_k : o.k;
  if (k.empty()) throw ConfigError("sweep needs multipliers: [sweep] K = ... or --k");
  for (double v : k)
    if (!(v > 0)) throw ConfigError("sweep multipliers must be > 0");
  return k;
}

struct SweepOut {
  std::map<double, StepMetrics> by_k;
  std::vector<SimResult> sims;
  double fluctuation = 0.0;
};

SweepOut run_sweep(const Scenario& sc, const AdrcDesign& d, const std::vector<double>& ks) {
  SweepOut s;
  s.sims = parallel_map(ks.size(), [&](std::size_t i) { return simulate(sc, scale_gain(d, ks[i])); });
  for (std::size_t i = 0; i < ks.size(); ++i) {
    if (s.sims[i].diverged)
      throw NumericalFailure(d.name + ": simulation diverged at K = " + fmt(ks[i]));
    s.by_k[ks[i]] = step_metrics(s.sims[i], sc.sim.ref, sc.sim.dist, sc.sim.band);
  }
  s.fluctuation = overshoot_fluctuation(s.by_k, sc.sim.ref);
  return s;
}

}  // namespace

int cmd_design(const Options& o, std::ostream& log) {
  const Scenario sc = load(o);
  const OutDir out(o.out);
  std::ostringstream os;
  int rc = kOk;
  os << "scenario " << sc.name << "\n";
  os << "plant a = [" << join(sc.plant.a) << "], b = " << fmt(sc.plant.b) << "\n";
  for (const auto& d : sc.designs) {
    const auto& e = d.eso;
    os << "\ndesign " << d.name << "\n";
    os << "  variant = " << to_string(e.variant) << "\n";
    os << "  q = [" << join(e.q()) << "]\n";
    if (e.variant == Variant::IFO)
      os << "  n = " << e.orders.n << ", chi = " << e.orders.chi.str() << ", gamma = " << e.orders.gamma.str()
         << ", nu = " << e.orders.nu.str() << "\n";
    for (const auto& w : e.orders.warnings) os << "  warning: " << w << "\n";
    os << "  omega0 = " << fmt(e.omega0) << ", b0 = " << fmt(e.b0) << ", fs = " << fmt(e.fs) << "\n";
    os << "  L = [" << join(e.L) << "]\n";
    const auto obs = sector_check(char_poly_observer(e, o.convention));
    os << "  observer sector = " << to_string(obs.verdict) << ", margin = " << fmt(obs.min_arg_margin)
       << " rad, lambda = " << obs.lambda.str() << ", degree = " << obs.degree << "\n";
    if (obs.verdict != Verdict::Stable) rc = kUnstable;
    if (!has_tracking(d)) {
      os << "  tracking: none (observer only)\n";
      continue;
    }
    os << "  kp = " << fmt(d.trk.kp) << ", kd = [" << join(d.trk.kd) << "]\n";
    if (e.variant == Variant::IFO) {
      os << "  omega_c = " << fmt(d.trk.omega_c) << ", omega_g = " << fmt(d.trk.omega_g) << "\n";
      os << "  filter corner = " << fmt(d.trk.omega_c) << " (nominal), "
         << fmt(std::pow(d.trk.omega_c, 1.0 / e.orders.gamma.to_double())) << " (unity magnitude)\n";
    }
    const LoopInfo li = loop_info(sc, d);
    os << "  low-frequency gain = " << fmt(li.lf_gain) << " / s^" << li.lf_order.str() << "\n";
    if (li.approx)
      os << "  approx loop: crossover = " << fmt(li.approx->omega_gc)
         << " rad/s, phase margin = " << fmt(li.approx->phase_margin) << " deg\n";
    else
      os << "  approx loop: no crossover\n";
    if (li.exact)
      os << "  exact loop: crossover = " << fmt(li.exact->omega_gc) << " rad/s, phase margin = "
         << fmt(li.exact->phase_margin) << " deg" << (li.exact->multiple ? " (multiple crossings)" : "") << "\n";
    const auto rep = sector(sc, d, o.convention);
    if (!rep) {
      os << "  sector check skipped: b != b0\n";
    } else {
      os << "  sector = " << to_string(rep->verdict) << ", margin = " << fmt(rep->min_arg_margin)
         << " rad, lambda = " << rep->lambda.str() << ", degree = " << rep->degree
         << (rep->condition_warning ? ", condition warning" : "") << "\n";
      if (rep->verdict != Verdict::Stable) rc = kUnstable;
    }
  }
  log << os.str();
  out.write("design.txt", os.str());
  return rc;
}

int cmd_simulate(const Options& o, std::ostream& log) {
  const Scenario sc = load(o);
  if (!sc.sim.present && !sc.mse.present) throw ConfigError(o.config + ": nothing to simulate ([sim] or [mse] needed)");
  const OutDir out(o.out);
  int rc = kOk;
  if (sc.sim.present) {
    const auto sims = parallel_map(sc.designs.size(), [&](std::size_t i) { return simulate(sc, sc.designs[i]); });
    std::string table = kMetricsHeader;
    std::vector<Series> plot;
    for (std::size_t i = 0; i < sims.size(); ++i) {
      const auto& d = sc.designs[i];
      out.write("traj_" + d.name + ".csv", traj_csv(sims[i]));
      plot.push_back({d.name, sims[i].t, sims[i].y});
      if (sims[i].diverged) {
        log << d.name << ": diverged at t = " << fmt(sims[i].t.empty() ? 0.0 : sims[i].t.back()) << "\n";
        rc = kNumerical;
        continue;
      }
      const StepMetrics m = step_metrics(sims[i], sc.sim.ref, sc.sim.dist, sc.sim.band);
      std::ostringstream ms;
      write_metrics(ms, m);
      out.write("metrics_" + d.name + ".txt", ms.str());
      table += metrics_row(d.name, m);
    }
    plot.push_back({"reference", {0.0, sc.sim.T}, {sc.sim.ref, sc.sim.ref}});
    out.write("metrics.csv", table);
    out.write("step.svg", svg_plot({sc.name + " step response", "t [s]", "y"}, plot));
    log << table;
  }
  if (sc.mse.present) {
    std::string table = "design,ideal_order,mse,excluded\n";
    std::vector<Series> plot;
    for (const auto& d : sc.designs) {
      const MseResult r = mse_delta(eso_transfer(d.eso, sc.plant).P, ideal_order(d), sc.mse.grid);
      std::ostringstream ds;
      write_delta_csv(ds, r);
      out.write("delta_" + d.name + ".csv", ds.str());
      table += d.name + "," + fmt(ideal_order(d)) + "," + fmt(r.mse) + "," + std::to_string(r.excluded) + "\n";
      Series s{d.name, r.omegas, {}};
      for (const auto& v : r.delta) s.y.push_back(20 * std::log10(std::abs(v)));
      plot.push_back(std::move(s));
    }
    out.write("mse.csv", table);
    out.write("delta.svg", svg_plot({sc.name + " estimation error", "omega [rad/s]", "|delta| [dB]", true}, plot));
    log << table;
  }
  return rc;
}

int cmd_freq(const Options& o, std::ostream& log) {
  const Scenario sc = load(o);
  const OutDir out(o.out);
  const auto grid = log_space(sc.freq.lo, sc.freq.hi, sc.freq.points_per_decade);
  std::string table = "design,loop,omega_gc,phase_margin,crossings\n";
  std::vector<Series> plot;
  for (const auto& d : sc.designs) {
    if (!has_tracking(d)) {
      log << d.name << ": observer only, no loop to analyse\n";
      continue;
    }
    const std::pair<std::string, FracRational> loops[] = {{"approx", approx_open_loop(d)},
                                                          {"exact", exact_loop(sc, d)}};
    for (const auto& [kind, g] : loops) {
      std::ostringstream bs;
      write_bode_csv(bs, g, grid);
      out.write("bode_" + d.name + "_" + kind + ".csv", bs.str());
      Series s{d.name + " " + kind, grid, {}};
      for (double w : grid) s.y.push_back(20 * std::log10(std::abs(g.eval_jw(w))));
      plot.push_back(std::move(s));
      try {
        const Margins m = margins(g, sc.freq.lo, sc.freq.hi);
        table += d.name + "," + kind + "," + fmt(m.omega_gc) + "," + fmt(m.phase_margin) + "," +
                 std::to_string(m.crossings.size()) + "\n";
      } catch (const NotFound&) {
        table += d.name + "," + kind + ",nan,nan,0\n";
      }
    }
  }
  out.write("margins.csv", table);
  out.write("bode.svg", svg_plot({sc.name + " open-loop magnitude", "omega [rad/s]", "|G| [dB]", true}, plot));
  log << table;
  return kOk;
}

int cmd_stability(const Options& o, std::ostream& log) {
  const Scenario sc = load(o);
  const OutDir out(o.out);
  int rc = kOk;
  std::string table = "design,loop,verdict,min_arg_margin,lambda,degree,stride,residual,condition_warning\n";
  for (const auto& d : sc.designs) {
    if (has_tracking(d) && !b_matches(sc, d))
      throw PreconditionError(d.name + ": sector check requires b == b0 (b = " + fmt(sc.plant.b) +
                              ", b0 = " + fmt(d.eso.b0) + ")");
    // Observer-only designs are checked on the observer error dynamics.
    const StabilityReport r = sector_check(has_tracking(d) ? char_poly_closed(sc.plant, d, o.convention)
                                                           : char_poly_observer(d.eso, o.convention));
    std::ostringstream cs, js;
    write_report_csv(cs, r);
    write_report_json(js, r);
    out.write("stability_" + d.name + ".csv", cs.str());
    out.write("stability_" + d.name + ".json", js.str());
    table += d.name + "," + (has_tracking(d) ? "closed" : "observer") + "," + to_string(r.verdict) + "," + fmt(r.min_arg_margin) + "," + r.lambda.str() + "," +
             std::to_string(r.degree) + "," + std::to_string(r.stride) + "," + fmt(r.residual) + "," +
             (r.condition_warning ? "1" : "0") + "\n";
    if (r.verdict != Verdict::Stable) rc = kUnstable;
  }
  out.write("stability.csv", table);
  log << table;
  return rc;
}

int cmd_sweep(const Options& o, std::ostream& log) {
  const Scenario sc = load(o);
  require_sim(sc, "sweep");
  const auto ks = sweep_list(o, sc);
  const OutDir out(o.out);
  std::string table = "design,K,rise_time,peak_time,overshoot,settling_time,y_max\n";
  std::string fl = "design,fluctuation\n";
  for (const auto& d : sc.designs) {
    const SweepOut s = run_sweep(sc, d, ks);
    std::vector<Series> plot;
    for (std::size_t i = 0; i < ks.size(); ++i) {
      const StepMetrics& m = s.by_k.at(ks[i]);
      table += d.name + "," + fmt(ks[i]) + "," + fmt(m.rise_time) + "," + fmt(m.peak_time) + "," +
               fmt(m.overshoot) + "," + fmt(m.settling_time) + "," + fmt(m.y_max) + "\n";
      plot.push_back({"K = " + fmt(ks[i]), s.sims[i].t, s.sims[i].y});
    }
    fl += d.name + "," + fmt(s.fluctuation) + "\n";
    out.write("sweep_" + d.name + ".svg", svg_plot({d.name + " gain sweep", "t [s]", "y"}, plot));
  }
  out.write("sweep.csv", table);
  out.write("fluctuation.csv", fl);
  log << table << fl;
  return kOk;
}

int cmd_compare(const Options& o, std::ostream& log) {
  const Scenario sc = load(o);
  const OutDir out(o.out);
  int rc = kOk;
  std::ostringstream sum;
  sum << "scenario=" << sc.name << "\n";
  std::vector<SimResult> sims;
  if (sc.sim.present)
    sims = parallel_map(sc.designs.size(), [&](std::size_t i) { return simulate(sc, sc.designs[i]); });
  std::vector<Series> plot;
  for (std::size_t i = 0; i < sc.designs.size(); ++i) {
    const auto& d = sc.designs[i];
    const std::string p = d.name + ".";
    const auto obs = sector_check(char_poly_observer(d.eso, o.convention));
    sum << p << "observer_verdict=" << to_string(obs.verdict) << "\n"
        << p << "observer_margin=" << fmt(obs.min_arg_margin) << "\n";
    if (sc.mse.present)
      sum << p << "mse=" << fmt(mse_delta(eso_transfer(d.eso, sc.plant).P, ideal_order(d), sc.mse.grid).mse) << "\n";
    if (!has_tracking(d)) continue;
    const LoopInfo li = loop_info(sc, d);
    sum << p << "lf_gain=" << fmt(li.lf_gain) << "\n";
    if (li.approx)
      sum << p << "crossover=" << fmt(li.approx->omega_gc) << "\n"
          << p << "phase_margin=" << fmt(li.approx->phase_margin) << "\n";
    if (li.exact)
      sum << p << "exact_crossover=" << fmt(li.exact->omega_gc) << "\n"
          << p << "exact_phase_margin=" << fmt(li.exact->phase_margin) << "\n";
    if (const auto rep = sector(sc, d, o.convention)) {
      sum << p << "verdict=" << to_string(rep->verdict) << "\n" << p << "sector_margin=" << fmt(rep->min_arg_margin)
          << "\n";
      if (rep->verdict != Verdict::Stable) rc = kUnstable;
    }
    if (sc.sim.present) {
      if (sims[i].diverged) throw NumericalFailure(d.name + ": simulation diverged");
      const StepMetrics m = step_metrics(sims[i], sc.sim.ref, sc.sim.dist, sc.sim.band);
      sum << p << "rise_time=" << fmt(m.rise_time) << "\n"
          << p << "peak_time=" << fmt(m.peak_time) << "\n"
          << p << "overshoot=" << fmt(m.overshoot) << "\n"
          << p << "settling_time=" << fmt(m.settling_time) << "\n"
          << p << "steady_state_error=" << fmt(m.steady_state_error) << "\n"
          << p << "y_max=" << fmt(m.y_max) << "\n"
          << p << "y_end=" << fmt(sims[i].y.back()) << "\n";
      if (sc.sim.dist.kind == DisturbanceProfile::Kind::Step)
        sum << p << "dist_max_deviation=" << fmt(m.dist_max_deviation) << "\n"
            << p << "dist_recovery_time=" << fmt(m.dist_recovery_time) << "\n";
      plot.push_back({d.name, sims[i].t, sims[i].y});
      out.write("traj_" + d.name + ".csv", traj_csv(sims[i]));
      if (!sc.sweep_k.empty() || !o.k.empty())
        sum << p << "fluctuation=" << fmt(run_sweep(sc, d, sweep_list(o, sc)).fluctuation) << "\n";
    }
  }
  if (!plot.empty()) out.write("compare.svg", svg_plot({sc.name, "t [s]", "y"}, plot));
  out.write("summary.txt", sum.str());
  log << sum.str();
  return rc;
}

int run(int argc, char** argv) {
  CLI::App app{"Fractional-order ADRC design, simulation and stability toolkit", "fradrc"};
  app.require_subcommand(1);
  Options o;
  std::string conv = "lcm";
  std::string klist;
  using Cmd = int (*)(const Options&, std::ostream&);
  const std::pair<const char*, Cmd> cmds[] = {
      {"design", cmd_design},       {"simulate", cmd_simulate}, {"freq", cmd_freq},
      {"stability", cmd_stability}, {"sweep", cmd_sweep},       {"compare", cmd_compare},
  };
  const char* help[] = {"print the design summary and sector verdict",
                        "closed-loop trajectories, step metrics and estimation-error curves",
                        "open-loop Bode data and margins",
                        "commensurate sector test of the closed loop",
                        "gain-multiplier sweep and overshoot fluctuation",
                        "all metrics for every design in one summary"};
  std::vector<CLI::App*> subs;
  for (std::size_t i = 0; i < std::size(cmds); ++i) {
    auto* s = app.add_subcommand(cmds[i].first, help[i]);
    s->add_option("--config", o.config, "scenario INI file")->required()->check(CLI::ExistingFile);
    s->add_option("--out", o.out, "output directory");
    s->add_flag("--oracle-filters", o.oracle_filters, "use the long-memory GL filters for every fractional state");
    s->add_option("--lambda-convention", conv, "commensurate base: lcm (default) or paper")
        ->check(CLI::IsMember({"lcm", "paper"}));
    if (std::string(cmds[i].first) == "sweep" || std::string(cmds[i].first) == "compare")
      s->add_option("--k", klist, "comma-separated gain multipliers");
    subs.push_back(s);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }
  try {
    o.convention = parse_lambda_convention(conv);
    if (!klist.empty()) {
      std::stringstream ss(klist);
      std::string item;
      while (std::getline(ss, item, ',')) o.k.push_back(std::stod(item));
    }
  } catch (const std::exception& e) {
    std::cerr << "error: bad option value: " << e.what() << "\n";
    return kUsage;
  }
  for (std::size_t i = 0; i < subs.size(); ++i) {
    if (!subs[i]->parsed()) continue;
    try {
      return cmds[i].second(o, std::cout);
    } catch (const ConfigError& e) {
      std::cerr << "config error: " << e.what() << "\n";
      return kValidation;
    } catch (const NumericalFailure& e) {
      std::cerr << "numerical failure: " << e.what() << "\n";
      return kNumerical;
    } catch (const FitFailure& e) {
      std::cerr << "numerical failure: " << e.what() << "\n";
      return kNumerical;
    } catch (const PoisonedState& e) {
      std::cerr << "numerical failure: " << e.what() << "\n";
      return kNumerical;
    } catch (const DegenerateSystem& e) {
      std::cerr << "numerical failure: " << e.what() << "\n";
      return kNumerical;
    } catch (const NotFound& e) {
      std::cerr << "numerical failure: " << e.what() << "\n";
      return kNumerical;
    } catch (const Error& e) {
      std::cerr << "validation error: " << e.what() << "\n";
      return kValidation;
    } catch (const std::filesystem::filesystem_error& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kUsage;
    }
  }
  return kUsage;
}

}  // namespace fradrc::cli
