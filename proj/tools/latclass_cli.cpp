// Command-line driver: fit, explore, dims, profile, swiss, conjecture, bic.
// Every artifact embeds the full run configuration and is byte-reproducible
// for a fixed seed.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "latclass/dimension.hpp"
#include "latclass/em.hpp"
#include "latclass/fixtures.hpp"
#include "latclass/geometry.hpp"
#include "latclass/io.hpp"
#include "latclass/model.hpp"
#include "latclass/newton.hpp"
#include "latclass/symmetry.hpp"
#include "latclass/table.hpp"

namespace fs = std::filesystem;
using namespace latclass;

namespace {

constexpr int kExitParse = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitVerification = 4;

// "4,5" lists axes; "2x16" repeats an axis size (here: sixteen binary axes)
std::vector<int> parse_dims(const std::string& text) {
  std::vector<int> dims;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    const auto xpos = tok.find('x');
    if (xpos == std::string::npos) {
      dims.push_back(std::stoi(tok));
    } else {
      const int d = std::stoi(tok.substr(0, xpos));
      const int times = std::stoi(tok.substr(xpos + 1));
      for (int i = 0; i < times; ++i) dims.push_back(d);
    }
  }
  if (dims.empty()) throw parse_error(parse_error::kind::malformed, "empty dims");
  return dims;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::string csv_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

JsonValue config_json(const std::string& subcommand,
                      const std::vector<std::pair<std::string, JsonValue>>& fields) {
  JsonValue cfg = JsonValue::object();
  cfg.set("subcommand", subcommand);
  for (auto& [k, v] : fields) cfg.set(k, v);
  return cfg;
}

JsonValue matrix_json(const Eigen::MatrixXd& M) {
  JsonValue rows = JsonValue::array();
  for (int i = 0; i < M.rows(); ++i) {
    JsonValue row = JsonValue::array();
    for (int j = 0; j < M.cols(); ++j) row.push(JsonValue(M(i, j)));
    rows.push(std::move(row));
  }
  return rows;
}

std::string table_csv(const std::vector<int>& dims, const Eigen::VectorXd& flat,
                      const std::string& config_line) {
  std::string out = "# config: " + config_line + "\n";
  if (dims.size() == 2) {
    for (int i = 0; i < dims[0]; ++i) {
      for (int j = 0; j < dims[1]; ++j) {
        if (j) out += ",";
        out += csv_num(flat[i * dims[1] + j]);
      }
      out += "\n";
    }
  } else {
    for (int c = 0; c < flat.size(); ++c) {
      if (c) out += ",";
      out += csv_num(flat[c]);
    }
    out += "\n";
  }
  return out;
}

JsonValue critical_point_json(const CriticalPoint& pt) {
  JsonValue obj = JsonValue::object();
  obj.set("loglik", pt.loglik);
  obj.set("classification", to_string(pt.classification));
  obj.set("multiplicity", pt.multiplicity);
  obj.set("gradient_norm", pt.gradient_norm);
  obj.set("hessian_condition_number", pt.hessian_condition);
  obj.set("fitted_counts", JsonValue::number_array(pt.fitted_counts));
  obj.set("theta", param_to_json(pt.representative));
  if (pt.has_canonical) {
    obj.set("canonical_table", matrix_json(pt.canonical));
    obj.set("canonical_exhaustive", pt.canonical_exhaustive);
  }
  return obj;
}

std::string critical_point_text(const CriticalPointSet& set, const std::vector<int>& dims) {
  std::string out = "# config: explore seed=" + std::to_string(set.seed) + "\n";
  char line[160];
  std::snprintf(line, sizeof(line),
                "%d starts (+%d pattern starts), %d converged, %d unconverged, "
                "%zu distinct points, %d absorbed stragglers\n",
                set.n_starts, set.n_symmetric_starts, set.n_converged, set.n_unconverged,
                set.points.size(), set.n_absorbed);
  out += line;
  for (std::size_t k = 0; k < set.points.size(); ++k) {
    const auto& pt = set.points[k];
    std::snprintf(line, sizeof(line), "\n#%zu  loglik %.6f  %s  multiplicity %d\n", k + 1,
                  pt.loglik, to_string(pt.classification), pt.multiplicity);
    out += line;
    if (dims.size() == 2) {
      for (int i = 0; i < dims[0]; ++i) {
        out += "  ";
        for (int j = 0; j < dims[1]; ++j) {
          if (j) out += "  ";
          out += format_ratio(pt.fitted_counts[i * dims[1] + j]);
        }
        out += "\n";
      }
    }
  }
  return out;
}

struct CommonOpts {
  std::string table_path;
  std::string dims_text;
  int r = 2;
  std::uint64_t seed = 0;
  int starts = 1;
  int threads = 0;
  std::string out_dir = ".";
};

ContingencyTable load_input_table(const std::string& path) {
  return load_table_file(path);
}

int run_fit(const CommonOpts& opt, const std::string& algo, int max_iter, double rel_tol,
            double grad_tol, bool trace) {
  ContingencyTable t = load_input_table(opt.table_path);
  ModelSpec spec{t.dims(), opt.r};
  spec.validate();

  JsonValue cfg = config_json(
      "fit", {{"table", opt.table_path},
              {"r", opt.r},
              {"algo", algo},
              {"starts", opt.starts},
              {"seed", opt.seed},
              {"max_iter", max_iter},
              {"rel_tol", rel_tol},
              {"grad_tol", grad_tol},
              {"threads", opt.threads}});

  ExploreConfig ex;
  ex.em = EMConfig{max_iter, rel_tol, 1e-10, opt.seed};
  ex.newton.grad_tol = grad_tol;
  ex.polish = (algo != "em");
  ex.threads = opt.threads;

  FitResult best;
  JsonValue points = JsonValue::array();
  std::vector<NewtonTraceRow> trace_rows;
  if (algo == "newton" && opt.starts == 1) {
    Rng rng(stream_seed(opt.seed, 0));
    best = newton_fit(ParamPoint::random(spec, rng), t, ex.newton,
                      trace ? &trace_rows : nullptr);
  } else if (opt.starts == 1) {
    Rng rng(stream_seed(opt.seed, 0));
    best = em_fit(ParamPoint::random(spec, rng), t, ex.em);
    if (ex.polish) best = newton_fit(best.theta, t, ex.newton, trace ? &trace_rows : nullptr);
  } else {
    CriticalPointSet set = multistart_explore(t, spec, opt.starts, opt.seed, ex);
    if (set.points.empty()) {
      std::fprintf(stderr, "no converged run\n");
      return kExitNumerical;
    }
    for (const auto& pt : set.points) points.push(critical_point_json(pt));
    const CriticalPoint& top = set.points.front();
    best.theta = top.representative;
    best.fitted = top.fitted;
    best.loglik = top.loglik;
    best.converged = true;
    best.gradient_norm = top.gradient_norm;
    best.classification = top.classification;
    best.hessian_condition = top.hessian_condition;
    best.algorithm = ex.polish ? "em+newton" : "em";
  }

  JsonValue doc = JsonValue::object();
  doc.set("config", std::move(cfg));
  doc.set("fit", fit_result_to_json(best));
  if (opt.starts > 1) doc.set("critical_points", std::move(points));

  fs::create_directories(opt.out_dir);
  write_text(fs::path(opt.out_dir) / "fit_result.json", doc.dump() + "\n");
  write_text(fs::path(opt.out_dir) / "fitted_table.csv",
             table_csv(t.dims(), best.fitted.p * static_cast<double>(t.total()),
                       "fit seed=" + std::to_string(opt.seed)));
  if (trace && !trace_rows.empty()) {
    std::string csv = "# config: fit seed=" + std::to_string(opt.seed) + " algo=" + algo +
                      "\niteration,loglik,grad_norm,step,shift\n";
    for (const auto& row : trace_rows) {
      csv += std::to_string(row.iteration) + "," + csv_num(row.loglik) + "," +
             csv_num(row.grad_norm) + "," + csv_num(row.step) + "," + csv_num(row.shift) +
             "\n";
    }
    write_text(fs::path(opt.out_dir) / "newton_trace.csv", csv);
  }
  std::printf("loglik %.10f (%s, %s)\n", best.loglik, best.algorithm.c_str(),
              to_string(best.classification));
  return 0;
}

int run_explore(const CommonOpts& opt) {
  ContingencyTable t = load_input_table(opt.table_path);
  ModelSpec spec{t.dims(), opt.r};
  ExploreConfig ex;
  ex.threads = opt.threads;
  CriticalPointSet set = multistart_explore(t, spec, opt.starts, opt.seed, ex);

  JsonValue doc = JsonValue::object();
  doc.set("config", config_json("explore", {{"table", opt.table_path},
                                            {"r", opt.r},
                                            {"starts", opt.starts},
                                            {"seed", opt.seed},
                                            {"threads", opt.threads}}));
  doc.set("n_starts", set.n_starts);
  doc.set("n_symmetric_starts", set.n_symmetric_starts);
  doc.set("n_converged", set.n_converged);
  doc.set("n_unconverged", set.n_unconverged);
  doc.set("n_absorbed", set.n_absorbed);
  JsonValue points = JsonValue::array();
  for (const auto& pt : set.points) points.push(critical_point_json(pt));
  doc.set("points", std::move(points));

  fs::create_directories(opt.out_dir);
  write_text(fs::path(opt.out_dir) / "critical_points.json", doc.dump() + "\n");
  const std::string text = critical_point_text(set, t.dims());
  write_text(fs::path(opt.out_dir) / "critical_points.txt", text);
  std::fputs(text.c_str(), stdout);
  return 0;
}

int run_dims(const std::string& dims_text, int r, bool table1, int samples,
             std::uint64_t seed, const std::string& out_dir) {
  std::vector<ModelSpec> models;
  if (table1) {
    models = dimension_survey_models();
  } else {
    models.push_back(ModelSpec{parse_dims(dims_text), r});
  }

  JsonValue doc = JsonValue::object();
  doc.set("config", config_json("dims", {{"dims", dims_text},
                                         {"r", r},
                                         {"table1", table1},
                                         {"samples", samples},
                                         {"seed", seed}}));
  JsonValue rows = JsonValue::array();
  std::string text = "# config: dims seed=" + std::to_string(seed) + " samples=" +
                     std::to_string(samples) + "\n";
  text += "model            r   effective  standard  complete  deficiency\n";
  for (const auto& spec : models) {
    DimensionReport rep = dimension_report(spec, samples, seed);
    JsonValue row = JsonValue::object();
    row.set("dims", JsonValue::int_array(spec.dims));
    row.set("r", spec.classes);
    row.set("effective", rep.effective);
    row.set("standard", rep.standard);
    row.set("complete", rep.complete);
    row.set("expected", rep.expected);
    row.set("deficiency", rep.deficiency);
    row.set("samples_used", rep.samples_used);
    row.set("rank_tolerance", rep.rank_tolerance);
    if (spec.order() == 2) {
      row.set("two_way_deficiency", rep.determinantal_deficiency);
      row.set("two_way_rank_constraint_active", rep.determinantal_valid);
    }
    rows.push(std::move(row));

    std::string name;
    for (std::size_t l = 0; l < spec.dims.size(); ++l) {
      if (l) name += "x";
      name += std::to_string(spec.dims[l]);
    }
    char line[120];
    std::snprintf(line, sizeof(line), "%-16s %-3d %-10d %-9d %-9d %d\n", name.c_str(),
                  spec.classes, rep.effective, rep.standard, rep.complete, rep.deficiency);
    text += line;
  }
  doc.set("rows", std::move(rows));

  fs::create_directories(out_dir);
  write_text(fs::path(out_dir) / "dims.json", doc.dump() + "\n");
  write_text(fs::path(out_dir) / "dims.txt", text);
  std::fputs(text.c_str(), stdout);
  return 0;
}

int run_profile(const CommonOpts& opt, double pin_value, int grid, double lo, double hi,
                int node_starts, double min_prominence) {
  ContingencyTable t = load_input_table(opt.table_path);
  ModelSpec spec{t.dims(), opt.r};
  ProfileGridConfig cfg;
  cfg.resolution = grid;
  cfg.lo = lo;
  cfg.hi = hi;
  cfg.fixed_value = pin_value;
  cfg.starts = node_starts;
  cfg.min_prominence_rel = min_prominence;
  cfg.seed = opt.seed;
  cfg.threads = opt.threads;
  ProfileGrid res = profile_loglik_grid(t, spec, cfg);

  const std::string cfg_line = "profile seed=" + std::to_string(opt.seed) +
                               " pin=" + csv_num(pin_value) + " grid=" + std::to_string(grid);
  std::string csv = "# config: " + cfg_line + "\n";
  csv += "a11\\a21";
  for (int j = 0; j < grid; ++j) csv += "," + csv_num(res.nodes[j]);
  csv += "\n";
  for (int i = 0; i < grid; ++i) {
    csv += csv_num(res.nodes[i]);
    for (int j = 0; j < grid; ++j) csv += "," + csv_num(res.value(i, j));
    csv += "\n";
  }

  double best_peak = -std::numeric_limits<double>::infinity();
  for (const auto& pk : res.peaks) best_peak = std::max(best_peak, pk.value);
  JsonValue peaks = JsonValue::array();
  for (const auto& pk : res.peaks) {
    JsonValue obj = JsonValue::object();
    obj.set("a11", pk.c1);
    obj.set("a21", pk.c2);
    obj.set("value", pk.value);
    obj.set("prominence", pk.prominence);
    obj.set("classification", pk.value >= best_peak - 1e-3 ? "global" : "local");
    peaks.push(std::move(obj));
  }
  JsonValue doc = JsonValue::object();
  doc.set("config", config_json("profile", {{"table", opt.table_path},
                                            {"r", opt.r},
                                            {"pin", pin_value},
                                            {"grid", grid},
                                            {"lo", lo},
                                            {"hi", hi},
                                            {"starts", node_starts},
                                            {"seed", opt.seed}}));
  doc.set("n_peaks", static_cast<long long>(res.peaks.size()));
  doc.set("peaks", std::move(peaks));

  fs::create_directories(opt.out_dir);
  write_text(fs::path(opt.out_dir) / "profile_grid.csv", csv);
  write_text(fs::path(opt.out_dir) / "profile_peaks.json", doc.dump() + "\n");
  std::printf("%zu peaks\n", res.peaks.size());
  return 0;
}

int run_swiss(double a11, double b11, int grid, double lo, double hi,
              const std::string& out_dir) {
  JsonValue doc = JsonValue::object();
  doc.set("config", config_json("swiss", {{"a11", a11},
                                          {"b11", b11},
                                          {"grid", grid},
                                          {"lo", lo},
                                          {"hi", hi}}));
  JsonValue points = JsonValue::array();
  auto eval_point = [&](double a, double b) {
    JsonValue obj = JsonValue::object();
    obj.set("a11", a);
    obj.set("b11", b);
    try {
      ParamPoint theta = swiss_surface_point(a, b);
      obj.set("in_domain", true);
      obj.set("lambda1", theta.lambda[0]);
      obj.set("residual", swiss_surface_residual(a, b, theta.lambda[0]));
      ProbTable p = accounting_map(theta, ModelSpec{{4, 4}, 2});
      double err = 0.0;
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
          const bool same_block = (i < 2) == (j < 2);
          err = std::max(err,
                         std::abs(p.p[i * 4 + j] - (same_block ? 3.0 / 40 : 2.0 / 40)));
        }
      obj.set("block_table_error", err);
      obj.set("theta", param_to_json(theta));
    } catch (const out_of_domain& e) {
      obj.set("in_domain", false);
      obj.set("reason", std::string(e.what()));
    }
    points.push(std::move(obj));
  };
  if (grid > 0) {
    for (int i = 0; i < grid; ++i)
      for (int j = 0; j < grid; ++j) {
        const double step = grid > 1 ? (hi - lo) / (grid - 1) : 0.0;
        eval_point(lo + i * step, lo + j * step);
      }
  } else {
    eval_point(a11, b11);
  }
  doc.set("points", std::move(points));
  fs::create_directories(out_dir);
  write_text(fs::path(out_dir) / "swiss_surface.json", doc.dump() + "\n");
  std::puts("surface written");
  return 0;
}

int run_conjecture(int n, double x, double y, int starts, std::uint64_t seed, int threads,
                   bool assert_true, const std::string& out_dir) {
  ExploreConfig ex;
  ex.threads = threads;
  ConjectureReport rep = verify_conjecture(n, x, y, starts, seed, ex);

  JsonValue doc = JsonValue::object();
  doc.set("config", config_json("conjecture", {{"n", n},
                                               {"x", x},
                                               {"y", y},
                                               {"starts", starts},
                                               {"seed", seed},
                                               {"threads", threads}}));
  doc.set("verdict", rep.verdict);
  doc.set("value_matches", rep.value_matches);
  doc.set("table_matches", rep.table_matches);
  doc.set("best_loglik", rep.best_loglik);
  doc.set("conjectured_loglik", rep.conjectured_loglik);
  doc.set("distinct_points", rep.distinct_points);
  doc.set("best_table", matrix_json(rep.best_table));
  doc.set("conjectured_table", matrix_json(rep.conjectured));
  fs::create_directories(out_dir);
  write_text(fs::path(out_dir) / "conjecture.json", doc.dump() + "\n");
  std::printf("verdict %s (best %.6f vs conjectured %.6f)\n",
              rep.verdict ? "true" : "false", rep.best_loglik, rep.conjectured_loglik);
  if (assert_true && !rep.verdict) return kExitVerification;
  return 0;
}

int run_bic(double loglik, const std::string& dims_text, int r, long long N,
            const std::string& out_dir) {
  ModelSpec spec{parse_dims(dims_text), r};
  spec.validate();
  const double value = bic(loglik, spec, N);
  JsonValue doc = JsonValue::object();
  doc.set("config", config_json("bic", {{"loglik", loglik},
                                        {"dims", dims_text},
                                        {"r", r},
                                        {"N", N}}));
  doc.set("dimension", spec.standard_dimension());
  doc.set("bic", value);
  fs::create_directories(out_dir);
  write_text(fs::path(out_dir) / "bic.json", doc.dump() + "\n");
  std::printf("bic %.5f (dimension %d)\n", value, spec.standard_dimension());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"latent class models for contingency tables"};
  app.require_subcommand(1);

  CommonOpts opt;

  auto* fit = app.add_subcommand("fit", "maximum likelihood fit of a table");
  std::string algo = "em";
  int max_iter = 10000;
  double rel_tol = 1e-10, grad_tol = 1e-8;
  bool trace = false;
  fit->add_option("--table", opt.table_path, "table file (JSON or CSV)")->required();
  fit->add_option("--r", opt.r, "latent classes");
  fit->add_option("--algo", algo, "em | newton | both")
      ->check(CLI::IsMember({"em", "newton", "both"}));
  fit->add_option("--starts", opt.starts, "random starts");
  fit->add_option("--seed", opt.seed, "rng seed");
  fit->add_option("--max-iter", max_iter, "em iteration cap");
  fit->add_option("--rel-tol", rel_tol, "relative log-likelihood tolerance");
  fit->add_option("--grad-tol", grad_tol, "newton gradient tolerance");
  fit->add_option("--threads", opt.threads, "worker threads (0 = auto)");
  fit->add_option("--out", opt.out_dir, "output directory");
  fit->add_flag("--trace", trace, "write the per-iteration newton trace CSV");

  auto* explore = app.add_subcommand("explore", "multistart critical-point enumeration");
  explore->add_option("--table", opt.table_path)->required();
  explore->add_option("--r", opt.r);
  explore->add_option("--starts", opt.starts);
  explore->add_option("--seed", opt.seed);
  explore->add_option("--threads", opt.threads);
  explore->add_option("--out", opt.out_dir);

  auto* dims = app.add_subcommand("dims", "model dimensions and deficiency");
  std::string dims_text;
  bool table1 = false;
  int samples = 5;
  std::uint64_t dims_seed = 0;
  std::string dims_out = ".";
  int dims_r = 2;
  dims->add_option("--dims", dims_text, "axis sizes, e.g. 4,5 or 2x16");
  dims->add_option("--r", dims_r);
  dims->add_flag("--table1", table1, "run the whole 21-model survey");
  dims->add_option("--samples", samples, "Jacobian sample points");
  dims->add_option("--seed", dims_seed);
  dims->add_option("--out", dims_out);

  auto* profile = app.add_subcommand("profile", "profile log-likelihood grid");
  double pin_value = 0.2, lo = 14.0 / 90.0, hi = 63.0 / 90.0;
  int grid = 50, node_starts = 10;
  std::string pin_text = "a31=0.2";
  profile->add_option("--table", opt.table_path)->required();
  profile->add_option("--r", opt.r);
  profile->add_option("--pin", pin_text, "pinned third coordinate, e.g. a31=0.2");
  profile->add_option("--grid", grid, "grid resolution per coordinate");
  profile->add_option("--lo", lo, "first node position");
  profile->add_option("--hi", hi, "last node position");
  profile->add_option("--starts", node_starts, "em starts per node");
  double min_prom = 1.5e-3;
  profile->add_option("--min-prominence", min_prom, "prominence floor relative to the grid value range");
  profile->add_option("--seed", opt.seed);
  profile->add_option("--threads", opt.threads);
  profile->add_option("--out", opt.out_dir);

  auto* swiss = app.add_subcommand("swiss", "the 4x4 stationary surface family");
  double a11 = 0.3474, b11 = 0.3474, s_lo = 0.31, s_hi = 0.45;
  int s_grid = 0;
  std::string swiss_out = ".";
  swiss->add_option("--a11", a11);
  swiss->add_option("--b11", b11);
  swiss->add_option("--grid", s_grid, "sweep an n x n grid instead of one point");
  swiss->add_option("--lo", s_lo);
  swiss->add_option("--hi", s_hi);
  swiss->add_option("--out", swiss_out);

  auto* conj = app.add_subcommand("conjecture", "verify the block-diagonal maximizer");
  int c_n = 4, c_starts = 500;
  double c_x = 4, c_y = 2;
  std::uint64_t c_seed = 0;
  int c_threads = 0;
  bool c_assert = false;
  std::string c_out = ".";
  conj->add_option("--n", c_n)->required();
  conj->add_option("--x", c_x);
  conj->add_option("--y", c_y);
  conj->add_option("--starts", c_starts);
  conj->add_option("--seed", c_seed);
  conj->add_option("--threads", c_threads);
  conj->add_flag("--assert", c_assert, "exit nonzero when the verdict is false");
  conj->add_option("--out", c_out);

  auto* bic_cmd = app.add_subcommand("bic", "Bayesian information criterion");
  double bic_ll = 0.0;
  std::string bic_dims;
  int bic_r = 2;
  long long bic_n = 1;
  std::string bic_out = ".";
  bic_cmd->add_option("--loglik", bic_ll)->required();
  bic_cmd->add_option("--dims", bic_dims, "e.g. 2x16")->required();
  bic_cmd->add_option("--r", bic_r)->required();
  bic_cmd->add_option("--N", bic_n)->required();
  bic_cmd->add_option("--out", bic_out);

  CLI11_PARSE(app, argc, argv);

  try {
    if (fit->parsed()) return run_fit(opt, algo, max_iter, rel_tol, grad_tol, trace);
    if (explore->parsed()) return run_explore(opt);
    if (dims->parsed()) {
      if (!table1 && dims_text.empty()) {
        std::fprintf(stderr, "dims: need --dims or --table1\n");
        return kExitParse;
      }
      return run_dims(dims_text, dims_r, table1, samples, dims_seed, dims_out);
    }
    if (profile->parsed()) {
      const auto eq = pin_text.find('=');
      pin_value = std::stod(eq == std::string::npos ? pin_text : pin_text.substr(eq + 1));
      return run_profile(opt, pin_value, grid, lo, hi, node_starts, min_prom);
    }
    if (swiss->parsed()) return run_swiss(a11, b11, s_grid, s_lo, s_hi, swiss_out);
    if (conj->parsed())
      return run_conjecture(c_n, c_x, c_y, c_starts, c_seed, c_threads, c_assert, c_out);
    if (bic_cmd->parsed()) return run_bic(bic_ll, bic_dims, bic_r, bic_n, bic_out);
  } catch (const parse_error& e) {
    std::fprintf(stderr, "parse error: %s\n", e.what());
    return kExitParse;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "invalid input: %s\n", e.what());
    return kExitParse;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return kExitNumerical;
  }
  return 0;
}
