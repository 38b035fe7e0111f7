#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "robustiv/robustiv.hpp"

using namespace robustiv;
using json = nlohmann::ordered_json;

namespace {

constexpr int kSchemaVersion = 1;

json num(double v, const std::string& anchor) { return {{"value", v}, {"anchor", anchor}}; }

json ivl(const MaybeEmptyInterval& i, const std::string& anchor) {
  if (!i) return {{"empty", true}, {"anchor", anchor}};
  return {{"lo", i->lo}, {"hi", i->hi}, {"anchor", anchor}};
}

json opt_num(const std::optional<double>& v, const std::string& anchor) {
  if (!v) return {{"value", nullptr}, {"anchor", anchor}};
  return num(*v, anchor);
}

json probs_json(const TypeProbabilities& p, const std::string& anchor) {
  return {{"p_a", p.p_a}, {"p_c", p.p_c}, {"p_df", p.p_df}, {"p_n", p.p_n}, {"anchor", anchor}};
}

json gamma_json(const GammaSet& g, const std::string& anchor) {
  json j;
  j["anchor"] = anchor;
  j["menu"] = to_string(g.menu);
  j["case"] = g.case_tag;
  j["empty"] = g.empty();
  json entries = json::object();
  for (std::size_t i = 0; i < kGammaSize; ++i) {
    const auto& e = g.entries[i];
    json x{{"kind", to_string(e.kind)}};
    if (e.kind != EntryKind::Empty) {
      x["lo"] = e.lo;
      x["hi"] = e.hi;
    }
    entries[component_name(i)] = x;
  }
  j["entries"] = entries;
  j["linked_constraints"] = g.linked_constraints;
  return j;
}

json cell_json(const CellStats& cs) {
  json j;
  j["n"] = cs.n_total;
  j["n_arm"] = {{"z0", cs.n_arm[0]}, {"z1", cs.n_arm[1]}};
  json cells = json::array();
  for (int d = 0; d < 2; ++d)
    for (int z = 0; z < 2; ++z)
      cells.push_back({{"d", d},
                       {"z", z},
                       {"n", cs.n[d][z]},
                       {"p_d_given_z", cs.p[d][z]},
                       {"e_y_1d_given_z", cs.ey[d][z]},
                       {"mean_y", cs.mean[d][z] ? json(*cs.mean[d][z]) : json(nullptr)}});
  j["cells"] = cells;
  j["first_stage"] = num(cs.first_stage(), "first_stage: E[D|Z=1] - E[D|Z=0]");
  j["itt"] = num(cs.itt(), "itt: E[Y|Z=1] - E[Y|Z=0]");
  if (classify_first_stage(cs.first_stage()) != FirstStageSign::Zero)
    j["iv_estimand"] = num(cs.itt() / cs.first_stage(), "iv_estimand: itt / first_stage");
  return j;
}

json inference_json(const A3Inference& inf) {
  json j;
  j["level"] = inf.level;
  j["instrument_swapped"] = inf.instrument_swapped;
  j["alpha"] = num(inf.estimates.alpha, "a3_inference.alpha");
  j["gamma"] = num(inf.estimates.gamma, "a3_inference.gamma");
  json b = json::array();
  for (const auto& x : inf.bounds)
    b.push_back({{"parameter", x.name},
                 {"bound", ivl(Interval{x.lb, x.ub}, "a3_inference.bound")},
                 {"se_lb", x.se_lb},
                 {"se_ub", x.se_ub},
                 {"ci", ivl(x.ci, "a3_inference.imbens_manski")},
                 {"c_bar", x.c_bar}});
  j["bounds"] = b;
  j["substitutions"] = inf.variances.substitutions;
  return j;
}

struct DataFlags {
  std::string path;
  ColumnMap cols;
  std::optional<double> range_lo, range_hi;
  std::optional<std::size_t> bins;
  std::string set_class = "borel";
  std::string mean_method = "sharp";
  std::string trim = "fractional";
  std::size_t grid = 101;
  unsigned threads = 0;
  double level = 0.95;
  std::string out;
  bool text = false;
  bool slices = false;

  void add(CLI::App* app, bool analysis) {
    app->add_option("--data", path, "CSV file with a header row")->required();
    app->add_option("--y", cols.y, "outcome column")->capture_default_str();
    app->add_option("--d", cols.d, "treatment column")->capture_default_str();
    app->add_option("--z", cols.z, "instrument column")->capture_default_str();
    app->add_option("--out", out, "write the JSON report here instead of stdout");
    app->add_flag("--text", text, "human-readable summary instead of JSON");
    if (!analysis) return;
    app->add_option("--range-lo", range_lo, "lower end of the outcome support");
    app->add_option("--range-hi", range_hi, "upper end of the outcome support");
    app->add_option("--bins", bins, "equal-width bins for continuous outcomes");
    app->add_option("--set-class", set_class, "borel | intervals")->capture_default_str();
    app->add_option("--mean-method", mean_method, "sharp | outer")->capture_default_str();
    app->add_option("--trim", trim, "fractional | nearest-rank")->capture_default_str();
    app->add_option("--grid", grid, "interior p_df grid points")->capture_default_str();
    app->add_option("--threads", threads, "worker threads (0: ROBUSTIV_THREADS or hardware)");
    app->add_option("--level", level, "confidence level")->capture_default_str();
    app->add_flag("--slices", slices, "include per-p_df slices in the report");
  }

  AnalysisOptions options() const {
    AnalysisOptions o;
    o.validity.bins = bins;
    if (set_class == "borel") o.validity.set_class = SetClass::Borel;
    else if (set_class == "intervals") o.validity.set_class = SetClass::Intervals;
    else throw Error(ErrorKind::BadInput, "--set-class must be borel or intervals");
    if (mean_method == "sharp") o.mean_method = MeanMethod::SharpEnvelope;
    else if (mean_method == "outer") o.mean_method = MeanMethod::OuterClosedForm;
    else throw Error(ErrorKind::BadInput, "--mean-method must be sharp or outer");
    if (trim == "fractional") o.trim_rule = TrimRule::Fractional;
    else if (trim == "nearest-rank") o.trim_rule = TrimRule::NearestRank;
    else throw Error(ErrorKind::BadInput, "--trim must be fractional or nearest-rank");
    if (range_lo || range_hi) {
      if (!range_lo || !range_hi) throw Error(ErrorKind::BadOutcomeRange, "give both --range-lo and --range-hi");
      o.range = OutcomeRange{*range_lo, *range_hi};
    }
    o.grid_points = grid;
    o.threads = threads;
    return o;
  }
};

void emit(const json& j, const std::string& out) {
  if (out.empty()) {
    std::cout << j.dump(2) << "\n";
    return;
  }
  std::ofstream f(out);
  if (!f) throw Error(ErrorKind::BadInput, "cannot write " + out);
  f << j.dump(2) << "\n";
}

json validity_json(const Sample& s, const AnalysisOptions& o) {
  json j;
  auto cs = cell_stats(s);
  auto sl = late_inequality_slack(s, o.validity);
  j["set_class"] = to_string(o.validity.set_class);
  j["slack_d0"] = num(sl.d0, "late_inequality.slack_d0");
  j["slack_d1"] = num(sl.d1, "late_inequality.slack_d1");
  j["overlap_statistic"] = num(overlap_statistic(s, o.validity), "overlap.max_d_integral_sup_z_minus_1");
  auto grid = default_grid(s, o.validity.bins);
  j["grid"] = {{"kind", grid.kind == OutcomeGrid::Kind::Atoms ? "atoms" : "bins"}, {"cells", grid.cells()}};
  auto pdf = pdf_bounds(s, o.validity);
  j["pdf_bounds"] = ivl(pdf.interval, "a2.defier_share_set");
  j["pdf_lower_source"] = to_string(pdf.lower_source);
  j["tau"] = o.validity.tau;
  j["first_stage_sign"] = to_string(classify_first_stage(cs.first_stage()));
  try {
    auto er = er_check_a3(s, o.trim_rule);
    j["er_check_a3"] = {{"mu_10a", opt_num(er.mu_10a, "a3.mu_10a")},
                        {"mu_11a_set", ivl(er.id_set_mu_11a, "a3.mu_11a")},
                        {"mu_01n", opt_num(er.mu_01n, "a3.mu_01n")},
                        {"mu_00n_set", ivl(er.id_set_mu_00n, "a3.mu_00n")},
                        {"reject_er", er.reject_er},
                        {"instrument_swapped", er.instrument_swapped}};
  } catch (const Error& e) {
    j["er_check_a3"] = {{"unavailable", e.what()}};
  }
  return j;
}

json a3_report_json(const Sample& s, const AnalysisOptions& o) {
  auto cs = cell_stats(s);
  const bool swap = classify_first_stage(cs.first_stage()) == FirstStageSign::Negative;
  if (classify_first_stage(cs.first_stage()) == FirstStageSign::Zero) return {{"unavailable", "first stage is zero"}};
  auto rep = a3_effect_bounds(swap ? s.relabeled() : s, o.range, o.trim_rule);
  json j;
  j["computed_on_swapped_instrument"] = swap;
  j["probs"] = probs_json(rep.probs, "a3.type_shares");
  j["alpha"] = num(rep.alpha, "a3.trim_share_cell_11");
  j["gamma"] = num(rep.gamma, "a3.trim_share_cell_00");
  j["mu_10a"] = opt_num(rep.mu_10a, "a3.mu_10a");
  j["mu_01n"] = opt_num(rep.mu_01n, "a3.mu_01n");
  j["mu_11a"] = ivl(rep.mu_11a_bounds, "a3.mu_11a");
  j["mu_00n"] = ivl(rep.mu_00n_bounds, "a3.mu_00n");
  j["delta_1a"] = ivl(rep.delta_1a_bounds, "a3.delta_1a");
  j["delta_0n"] = ivl(rep.delta_0n_bounds, "a3.delta_0n");
  j["delta_1c_plus_theta_0c"] = ivl(rep.total_c_bounds, "a3.delta_1c_plus_theta_0c");
  j["itt"] = num(rep.itt, "itt");
  return j;
}

json a2_json(const A2Result& r, bool slices) {
  json j;
  j["pdf_bounds"] = ivl(r.pdf.interval, "a2.defier_share_set");
  j["pdf_lower"] = r.pdf.lower;
  j["pdf_upper"] = r.pdf.upper;
  j["overlap_ok"] = r.pdf.overlap_ok;
  j["summary"] = gamma_json(r.summary, "a2.identified_set");
  json disc = json::array();
  for (std::size_t i = 0; i < kGammaSize; ++i)
    if (r.disconnected[i]) disc.push_back(component_name(i));
  j["disconnected"] = disc;
  std::size_t skipped = 0;
  for (const auto& s : r.slices) skipped += s.skipped;
  j["slices_total"] = r.slices.size();
  j["slices_skipped"] = skipped;
  if (slices) {
    json arr = json::array();
    for (const auto& s : r.slices) {
      json x{{"p_df", s.p_df}, {"kind", to_string(s.kind)}, {"skipped", s.skipped}};
      if (!s.set.empty()) {
        const auto& e1 = s.set.theta(0, ComplianceType::c);
        const auto& e2 = s.set.theta(0, ComplianceType::df);
        x["theta_c"] = {{"kind", to_string(e1.kind)}, {"lo", e1.lo}, {"hi", e1.hi}};
        x["theta_df"] = {{"kind", to_string(e2.kind)}, {"lo", e2.lo}, {"hi", e2.hi}};
      }
      arr.push_back(x);
    }
    j["slices"] = arr;
  }
  return j;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

std::string fmt(const MaybeEmptyInterval& i) { return i ? "[" + fmt(i->lo) + ", " + fmt(i->hi) + "]" : "empty"; }

void print_text(const json& rep, std::ostream& os) {
  const auto& cs = rep["cell_stats"];
  os << "n = " << cs["n"] << ", first stage = " << fmt(cs["first_stage"]["value"].get<double>()) << "\n";
  const auto& v = rep["validity"];
  os << "slack_d0 = " << fmt(v["slack_d0"]["value"].get<double>()) << ", slack_d1 = "
     << fmt(v["slack_d1"]["value"].get<double>()) << ", overlap = " << fmt(v["overlap_statistic"]["value"].get<double>())
     << "\n";
  os << "active menus:";
  for (const auto& m : rep["robust"]["active_menus"]) os << " " << m.get<std::string>();
  os << "\n";
  for (const char* key : {"a1", "a3"}) {
    const auto& g = rep[key];
    os << key << ": " << (g["empty"].get<bool>() ? "empty" : g["case"].get<std::string>()) << "\n";
  }
  os << "a2: " << (rep["a2"]["summary"]["empty"].get<bool>() ? "empty" : "nonempty") << "\n";
  if (rep.contains("inference") && rep["inference"].contains("bounds"))
    for (const auto& b : rep["inference"]["bounds"])
      os << "  " << b["parameter"].get<std::string>() << ": [" << fmt(b["bound"]["lo"].get<double>()) << ", "
         << fmt(b["bound"]["hi"].get<double>()) << "], CI [" << fmt(b["ci"]["lo"].get<double>()) << ", "
         << fmt(b["ci"]["hi"].get<double>()) << "]\n";
}

int cmd_analyze(const DataFlags& f) {
  auto s = load_csv(f.path, f.cols);
  auto o = f.options();
  json rep;
  rep["schema_version"] = kSchemaVersion;
  rep["command"] = "analyze";
  rep["input"] = {{"path", f.path}, {"y", f.cols.y}, {"d", f.cols.d}, {"z", f.cols.z}};
  auto cs = cell_stats(s);
  rep["cell_stats"] = cell_json(cs);
  auto r = resolve_range(s, o.range);
  rep["outcome_range"] = {{"lo", r.lo}, {"hi", r.hi}};
  rep["validity"] = validity_json(s, o);
  auto rb = robust_bound(s, o);
  rep["a1"] = gamma_json(rb.a1, "a1.identified_set");
  rep["a1"]["type_shares"] = probs_json(type_probabilities_a1(s), "a1.type_shares");
  rep["a2"] = a2_json(rb.a2, f.slices);
  rep["a3"] = gamma_json(rb.a3, "a3.identified_set");
  rep["a3_effects"] = a3_report_json(s, o);
  json menus = json::array();
  for (auto m : rb.active_menus) menus.push_back(to_string(m));
  json disc = json::array();
  for (std::size_t i = 0; i < kGammaSize; ++i)
    if (rb.disconnected[i]) disc.push_back(component_name(i));
  rep["robust"] = {{"active_menus", menus},
                   {"result", gamma_json(rb.result, "robust.union")},
                   {"disconnected", disc},
                   {"diagnostics",
                    {{"slack_d0", rb.diagnostics.slacks.d0},
                     {"slack_d1", rb.diagnostics.slacks.d1},
                     {"overlap_statistic", rb.diagnostics.overlap},
                     {"first_stage", rb.diagnostics.first_stage},
                     {"first_stage_sign", to_string(rb.diagnostics.first_stage_sign)},
                     {"tau", rb.diagnostics.tau}}}};
  try {
    rep["inference"] = inference_json(a3_inference(s, f.level));
  } catch (const Error& e) {
    rep["inference"] = {{"unavailable", e.what()}};
  }
  if (f.text) {
    print_text(rep, std::cout);
    if (!f.out.empty()) emit(rep, f.out);
  } else {
    emit(rep, f.out);
  }
  return 0;
}

int cmd_test(const DataFlags& f) {
  auto s = load_csv(f.path, f.cols);
  auto o = f.options();
  json rep;
  rep["schema_version"] = kSchemaVersion;
  rep["command"] = "test";
  rep["validity"] = validity_json(s, o);
  auto a1 = identified_set_a1(s, o);
  auto pdf = pdf_bounds(s, o.validity);
  rep["a1_rejected"] = a1.empty();
  rep["a2_rejected"] = !pdf.interval;
  if (f.text) {
    std::cout << "A1 (RA+ER+MON): " << (a1.empty() ? "rejected" : "not rejected") << "\n"
              << "A2 (RA+ER): " << (pdf.interval ? "not rejected, p_df in " + fmt(pdf.interval) : "rejected") << "\n";
    return 0;
  }
  emit(rep, f.out);
  return 0;
}

int cmd_ci(const DataFlags& f) {
  auto s = load_csv(f.path, f.cols);
  auto inf = a3_inference(s, f.level);
  json rep;
  rep["schema_version"] = kSchemaVersion;
  rep["command"] = "ci";
  rep["inference"] = inference_json(inf);
  if (f.text) {
    for (const auto& b : inf.bounds)
      std::cout << b.name << ": [" << fmt(b.lb) << ", " << fmt(b.ub) << "], CI " << fmt(b.ci) << ", c_bar "
                << fmt(b.c_bar) << "\n";
    return 0;
  }
  emit(rep, f.out);
  return 0;
}

struct SimFlags {
  DgpConfig cfg;
  std::string model = "auto";
  std::string out;
  std::string latents;
};

DgpConfig resolve(const SimFlags& f) {
  DgpConfig c = f.cfg;
  if (f.model == "auto") c.model = CovarianceModel::Auto;
  else if (f.model == "independent") c.model = CovarianceModel::Independent;
  else if (f.model == "correlated") c.model = CovarianceModel::CorrelatedCosts;
  else throw Error(ErrorKind::BadInput, "--model must be auto, independent or correlated");
  return c;
}

int cmd_simulate(const SimFlags& f) {
  auto cfg = resolve(f);
  auto sim = simulate(cfg);
  {
    std::ofstream os(f.out);
    if (!os) throw Error(ErrorKind::BadInput, "cannot write " + f.out);
    write_csv(os, sim.sample);
  }
  if (!f.latents.empty()) {
    std::ofstream os(f.latents);
    if (!os) throw Error(ErrorKind::BadInput, "cannot write " + f.latents);
    write_latents_csv(os, sim);
  }
  std::cerr << "wrote " << sim.sample.size() << " rows to " << f.out << "\n";
  return 0;
}

// ---- replicate ----

struct Check {
  std::string name;
  double observed = 0.0;
  double expected = 0.0;
  double tol = 0.0;
  bool pass = false;
  std::string note;
};

struct Report {
  std::string target;
  std::vector<Check> checks;
  json extra = json::object();

  void near(const std::string& name, double obs, double exp, double tol) {
    checks.push_back({name, obs, exp, tol, std::abs(obs - exp) <= tol, ""});
  }
  void flag(const std::string& name, bool ok, const std::string& note) { checks.push_back({name, ok, 1.0, 0.0, ok, note}); }
  bool ok() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }
  int finish(const std::string& out) const {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["command"] = "replicate";
    j["target"] = target;
    json arr = json::array();
    for (const auto& c : checks) {
      std::cout << (c.pass ? "PASS " : "FAIL ") << target << " " << c.name;
      if (c.note.empty())
        std::cout << " observed=" << c.observed << " expected=" << c.expected << " tol=" << c.tol;
      else
        std::cout << " (" << c.note << ")";
      std::cout << "\n";
      arr.push_back({{"name", c.name}, {"observed", c.observed}, {"expected", c.expected}, {"tolerance", c.tol},
                     {"pass", c.pass}, {"note", c.note}});
    }
    j["checks"] = arr;
    j["extra"] = extra;
    j["pass"] = ok();
    if (!out.empty()) emit(j, out);
    return ok() ? 0 : 1;
  }
};

struct ReplicateFlags {
  std::string which;
  std::string data;
  std::size_t n = 10000000;
  std::uint64_t seed = 7;
  std::string out;
  std::string csv = "figure2.csv";
  unsigned threads = 0;
};

int replicate_table1(const ReplicateFlags& f) {
  DgpConfig cfg;
  cfg.n = f.n;
  cfg.seed = f.seed;
  cfg.threads = f.threads;
  auto sim = simulate(cfg);
  auto mc = mc_truth(sim.latents);
  auto cs = cell_stats(sim.sample);
  Report r{"table1", {}, {}};
  r.near("p_df", mc.shares.p_df, 0.170836, 0.0005);
  r.near("p_a", mc.shares.p_a, 0.079284, 0.0005);
  r.near("p_c", mc.shares.p_c, 0.075601, 0.0005);
  r.near("p_n", mc.shares.p_n, 0.674279, 0.0005);
  r.near("LATE_c", mc.late_of(ComplianceType::c), 4.925344, 0.01);
  r.near("LATE_df", mc.late_of(ComplianceType::df), 1.231659, 0.01);
  r.near("E[D|Z=0]-E[D|Z=1]", -cs.first_stage(), 0.0956, 0.001);
  r.near("IV estimand", cs.itt() / cs.first_stage(), -1.6874, 0.05);
  auto truth = analytic_truth(cfg);
  const double n = static_cast<double>(cfg.n);
  for (auto t : kAllTypes) {
    const double p = truth[t];
    const double se = std::sqrt(p * (1 - p) / n);
    r.near(std::string("analytic p_") + to_string(t) + " (4 MC se)", mc.shares[t], p, 4 * se);
  }
  r.extra = {{"n", cfg.n}, {"seed", cfg.seed}};
  return r.finish(f.out);
}

int replicate_figure2(const ReplicateFlags& f) {
  DgpConfig cfg;
  cfg.n = f.n;
  cfg.seed = f.seed;
  cfg.threads = f.threads;
  auto sim = simulate(cfg);
  auto mc = mc_truth(sim.latents);
  auto cs = cell_stats(sim.sample);
  AnalysisOptions o;
  o.threads = f.threads;
  A2Engine eng(sim.sample, o);
  Report r{"figure2", {}, {}};
  if (!eng.pdf().interval) {
    r.flag("defier set nonempty", false, "A2 rejected on this sample");
    return r.finish(f.out);
  }
  const double lo = eng.pdf().interval->lo, hi = eng.pdf().interval->hi;
  const std::size_t G = o.grid_points;
  std::ofstream csv(f.csv);
  csv << "p_df,theta_c_lo,theta_c_hi,theta_df_lo,theta_df_hi,late_c,late_df,iv_estimand\n";
  const double iv = cs.itt() / cs.first_stage();
  const double late_c = mc.late_of(ComplianceType::c), late_df = mc.late_of(ComplianceType::df);
  bool all_positive = true;
  double min_lower = INFINITY;
  for (std::size_t k = 1; k <= G; ++k) {
    const double p = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(G + 1);
    auto sl = eng.late_bounds_at(p);
    if (!sl.theta_c_bounds || !sl.theta_df_bounds) {
      all_positive = false;
      continue;
    }
    min_lower = std::min({min_lower, sl.theta_c_bounds->lo, sl.theta_df_bounds->lo});
    all_positive = all_positive && sl.theta_c_bounds->lo > 0.0 && sl.theta_df_bounds->lo > 0.0;
    char buf[256];
    std::snprintf(buf, sizeof buf, "%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g\n", p, sl.theta_c_bounds->lo,
                  sl.theta_c_bounds->hi, sl.theta_df_bounds->lo, sl.theta_df_bounds->hi, late_c, late_df, iv);
    csv << buf;
  }
  r.flag("lower bounds of theta_c and theta_df > 0 at every interior grid point", all_positive,
         "smallest lower bound " + fmt(min_lower));
  const double step = (hi - lo) / static_cast<double>(G + 1);
  const double p_true = mc.shares.p_df;
  bool covered = false;
  std::string where;
  for (double p : {p_true, p_true - step, p_true + step}) {
    const double q = std::clamp(p, lo, std::nextafter(hi, lo));
    if (std::abs(q - p_true) > step) continue;
    auto sl = eng.late_bounds_at(q);
    if (sl.theta_c_bounds && sl.theta_df_bounds && sl.theta_c_bounds->contains(late_c) &&
        sl.theta_df_bounds->contains(late_df)) {
      covered = true;
      where = "p_df=" + fmt(q) + " theta_c " + fmt(sl.theta_c_bounds) + " theta_df " + fmt(sl.theta_df_bounds);
      break;
    }
  }
  r.flag("true LATE_c and LATE_df inside the bands at the true p_df (+-grid step)", covered,
         covered ? where : "true p_df=" + fmt(p_true) + ", set [" + fmt(lo) + ", " + fmt(hi) + "]");
  r.flag("IV estimand below both lower bounds", iv < min_lower, "iv=" + fmt(iv));
  r.extra = {{"csv", f.csv}, {"pdf_set", {lo, hi}}, {"true_p_df", p_true}, {"late_c", late_c}, {"late_df", late_df}};
  std::cout << "series written to " << f.csv << "\n";
  return r.finish(f.out);
}

int replicate_appendix_d(const ReplicateFlags& f) {
  DgpConfig cfg;
  cfg.rho = 0.33;
  cfg.n = f.n;
  cfg.seed = f.seed;
  cfg.threads = f.threads;
  auto sim = simulate(cfg);
  auto mc = mc_truth(sim.latents);
  Report r{"appendixD", {}, {}};
  ValidityOptions vi;
  vi.set_class = SetClass::Intervals;
  auto b = pdf_bounds(sim.sample, vi);
  r.near("p_df set lower (interval class)", b.lower, 0.165, 0.005);
  r.near("p_df set upper", b.upper, 0.167, 0.005);
  r.flag("overlap statistic > 0", b.overlap > 0.0, "overlap=" + std::to_string(b.overlap));
  AnalysisOptions o;
  o.validity = vi;
  o.threads = f.threads;
  auto a2 = identified_set_a2(sim.sample, o);
  r.flag("A2 identified set reported empty", a2.summary.empty(), a2.summary.case_tag);
  r.near("true p_df", mc.shares.p_df, 0.1356, 0.001);
  auto bb = pdf_bounds(sim.sample, ValidityOptions{});
  r.extra = {{"borel_lower", bb.lower}, {"borel_upper", bb.upper}, {"true_p_df", mc.shares.p_df}};
  return r.finish(f.out);
}

int replicate_card(const ReplicateFlags& f) {
  if (f.data.empty())
    throw Error(ErrorKind::MissingData, "replicate card needs --data (the NLSYM extract is not distributed)");
  auto s = load_csv(f.data, ColumnMap{"lwage", "college", "nearc4"});
  Report r{"card", {}, {}};
  auto cs = cell_stats(s);
  const double n = static_cast<double>(s.size());
  double md = 0, mz = 0, my = 0;
  for (std::size_t i = 0; i < s.size(); ++i) md += s.d(i), mz += s.z(i), my += s.y(i);
  r.near("N", n, 3010, 0);
  r.near("mean(D)", md / n, 0.271, 0.0005);
  r.near("mean(Z)", mz / n, 0.682, 0.0005);
  r.near("mean(Y)", my / n, 6.262, 0.0005);
  r.near("first stage", cs.first_stage(), 0.07, 0.005);
  auto inf = a3_inference(s);
  const auto& e = inf.estimates;
  r.near("p_a", e.p_a, 0.2247, 0.0005);
  r.near("p_c", e.p_c, 0.0685, 0.0005);
  r.near("p_n", e.p_n, 0.7068, 0.0005);
  const std::array<std::array<double, 4>, 3> table{{{-0.0831, 0.2639, -0.1595, 0.3414},
                                                     {0.0813, 0.2308, 0.0415, 0.2707},
                                                     {-0.9655, 1.6753, -1.0372, 1.7490}}};
  for (std::size_t i = 0; i < 3; ++i) {
    const auto& b = inf.bounds[i];
    r.near(b.name + " lower", b.lb, table[i][0], 0.005);
    r.near(b.name + " upper", b.ub, table[i][1], 0.005);
    r.near(b.name + " CI lower", b.ci->lo, table[i][2], 0.01);
    r.near(b.name + " CI upper", b.ci->hi, table[i][3], 0.01);
  }
  AnalysisOptions o;
  o.validity.bins = 1000;
  o.trim_rule = TrimRule::NearestRank;
  o.threads = f.threads;
  const double ov = overlap_statistic(s, o.validity);
  r.near("overlap statistic (1000 equal-width bins)", ov, 0.036, 0.01);
  auto rb = robust_bound(s, o);
  r.flag("A1 identified set empty", rb.a1.empty(), rb.a1.case_tag);
  r.flag("A2 identified set empty", rb.a2.summary.empty(), rb.a2.summary.case_tag);
  r.flag("active menus = {A3}", rb.active_menus.size() == 1 && rb.active_menus[0] == AssumptionMenu::A3, "");
  r.extra = {{"overlap_default_grid", overlap_statistic(s, ValidityOptions{})},
             {"overlap_atoms_note", "the statistic depends on the density estimator; see README"}};
  return r.finish(f.out);
}

int cmd_replicate(const ReplicateFlags& f) {
  if (f.which == "table1") return replicate_table1(f);
  if (f.which == "figure2") return replicate_figure2(f);
  if (f.which == "appendixD") return replicate_appendix_d(f);
  if (f.which == "card") return replicate_card(f);
  throw Error(ErrorKind::BadInput, "unknown target " + f.which);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bounds on treatment effects with a possibly invalid binary instrument"};
  app.require_subcommand(1);

  DataFlags analyze_f, test_f, ci_f;
  auto* analyze = app.add_subcommand("analyze", "identified sets under every assumption menu, plus the robust bound");
  analyze_f.add(analyze, true);
  auto* test = app.add_subcommand("test", "testable implications of the assumption menus");
  test_f.add(test, true);
  auto* ci = app.add_subcommand("ci", "confidence intervals for the bounds without the exclusion restriction");
  ci_f.add(ci, false);
  ci->add_option("--level", ci_f.level, "confidence level")->capture_default_str();

  SimFlags sim_f;
  auto* sim = app.add_subcommand("simulate", "draw from the double-hurdle design");
  sim->add_option("--rho", sim_f.cfg.rho, "correlation of each cost shock with the instrument shock")->capture_default_str();
  sim->add_option("--n", sim_f.cfg.n, "rows")->capture_default_str();
  sim->add_option("--seed", sim_f.cfg.seed, "seed")->capture_default_str();
  sim->add_option("--beta-scale", sim_f.cfg.beta_scale)->capture_default_str();
  sim->add_option("--u-scale", sim_f.cfg.u_scale)->capture_default_str();
  sim->add_option("--model", sim_f.model, "auto | independent | correlated")->capture_default_str();
  sim->add_flag("--flip-instrument", sim_f.cfg.flip_instrument, "emit 1 - Z");
  sim->add_option("--threads", sim_f.cfg.threads);
  sim->add_option("--out", sim_f.out, "output CSV (y,d,z)")->required();
  sim->add_option("--emit-latents", sim_f.latents, "sidecar CSV with D0,D1,T,Y1,Y0");

  ReplicateFlags rep_f;
  auto* rep = app.add_subcommand("replicate", "compare against published numbers");
  rep->add_option("which", rep_f.which, "table1 | figure2 | appendixD | card")
      ->required()
      ->check(CLI::IsMember({"table1", "figure2", "appendixD", "card"}));
  rep->add_option("--data", rep_f.data, "NLSYM extract with columns lwage,college,nearc4 (card only)");
  rep->add_option("--n", rep_f.n, "simulation size")->capture_default_str();
  rep->add_option("--seed", rep_f.seed, "simulation seed")->capture_default_str();
  rep->add_option("--out", rep_f.out, "JSON report");
  rep->add_option("--csv", rep_f.csv, "figure2 series")->capture_default_str();
  rep->add_option("--threads", rep_f.threads);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*analyze) return cmd_analyze(analyze_f);
    if (*test) return cmd_test(test_f);
    if (*ci) return cmd_ci(ci_f);
    if (*sim) return cmd_simulate(sim_f);
    if (*rep) return cmd_replicate(rep_f);
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.kind()) << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
