#include "splitknock/cli.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "splitknock/errors.hpp"
#include "splitknock/evaluation.hpp"
#include "splitknock/filter.hpp"
#include "splitknock/io.hpp"
#include "splitknock/knockoff_copy.hpp"
#include "splitknock/screening.hpp"
#include "splitknock/serialize.hpp"

namespace splitknock::cli {
namespace {

using serialize::Json;

// Inputs shared by the commands that read a dataset and a transform.
struct InputFlags {
  std::string x;
  std::string y;
  std::string d;
  std::string transform;
  std::string edges;
};

void add_transform_flags(CLI::App& app, InputFlags& in) {
  app.add_option("--d", in.d, "D as dense CSV (m x p) or a row,col,value triplet file");
  app.add_option("--transform", in.transform, "built-in D: identity, line, graph or stacked")
      ->check(CLI::IsMember({"identity", "line", "graph", "stacked"}));
  app.add_option("--edges", in.edges, "edge list (tail,head; 1-based) for --transform graph");
}

LinearTransform load_transform(const InputFlags& in, Index p) {
  if (!in.d.empty() && !in.transform.empty()) {
    throw Error(ErrorKind::InvalidParameter, "give either --d or --transform, not both");
  }
  if (!in.d.empty()) return LinearTransform::custom(io::read_transform_matrix(in.d, p));
  if (in.transform.empty()) throw Error(ErrorKind::InvalidParameter, "one of --d or --transform is required");
  if (in.transform == "identity") return make_transform(TransformKind::Identity, p);
  if (in.transform == "line") return make_transform(TransformKind::LineDifference, p);
  if (in.transform == "stacked") return make_transform(TransformKind::Stacked, p);
  if (in.edges.empty()) throw Error(ErrorKind::InvalidParameter, "--transform graph needs --edges FILE");
  const std::vector<Edge> edges = io::read_edges(in.edges);
  return make_transform(TransformKind::GraphDifference, p, edges);
}

Dataset load_dataset(const InputFlags& in) {
  Matrix x = io::read_csv(in.x).values;
  Vector y = io::read_vector(in.y);
  if (x.rows() != y.size()) {
    throw Error(ErrorKind::DimensionMismatch, "X has " + std::to_string(x.rows()) + " rows but y has " +
                                                  std::to_string(y.size()) + " entries");
  }
  return Dataset(std::move(x), std::move(y));
}

std::map<std::string, std::string> digests(std::initializer_list<std::string> paths) {
  std::map<std::string, std::string> out;
  for (const auto& p : paths) {
    if (!p.empty()) out[p] = serialize::sha256_file(p);
  }
  return out;
}

Index default_n1(Index n) { return std::max<Index>(1, static_cast<Index>(std::llround(0.4 * static_cast<double>(n)))); }

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f || !(f << text)) throw Error(ErrorKind::InvalidParameter, "cannot write '" + path + "'");
}

template <typename F>
int guarded(CLI::App& app, const Args& args, std::ostream& out, std::ostream& err, F&& body) {
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  try {
    return body();
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return is_validation_error(e.kind()) ? kExitValidation : kExitNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumeric;
  }
}

std::string fixed(double v, int digits = 6) {
  if (!std::isfinite(v)) return serialize::format_double(v);
  std::ostringstream s;
  s << std::setprecision(digits) << v;
  return s.str();
}

void print_summary(const SelectionResult& r, Index n, Index p, Index m, std::ostream& os) {
  os << "split knockoff  n=" << n << " p=" << p << " m=" << m << " tested=" << r.coordinates.size()
     << " nu=" << fixed(r.config.nu) << " q=" << fixed(r.config.q) << " variant="
     << (r.config.plus ? "knockoff+" : "knockoff") << " split=" << (r.diagnostics.sample_split ? "yes" : "no")
     << '\n';
  os << "threshold T = " << fixed(r.T) << ", selected " << r.selected.size() << '\n';
  if (r.selected.empty()) return;
  os << std::setw(10) << "coord" << std::setw(14) << "Z" << std::setw(14) << "Z_tilde" << std::setw(14) << "W"
     << std::setw(6) << "sign" << '\n';
  for (std::size_t k = 0; k < r.selected.size(); ++k) {
    const auto pos = std::find(r.coordinates.begin(), r.coordinates.end(), r.selected[k]) - r.coordinates.begin();
    os << std::setw(10) << r.selected[k] + 1 << std::setw(14) << fixed(r.Z(pos)) << std::setw(14)
       << fixed(r.Z_tilde(pos)) << std::setw(14) << fixed(r.W(pos)) << std::setw(6)
       << (r.signs[k] > 0 ? "+" : "-") << '\n';
  }
}

}  // namespace

std::vector<double> parse_nu_grid(std::string_view spec) {
  auto bad = [&]() -> std::vector<double> {
    throw Error(ErrorKind::InvalidParameter,
                "invalid nu grid '" + std::string(spec) + "', expected LO:HI:STEP in log10(nu)");
  };
  double parts[3];
  std::size_t start = 0;
  for (int k = 0; k < 3; ++k) {
    const auto colon = spec.find(':', start);
    if ((k < 2) != (colon != std::string_view::npos)) return bad();
    std::string_view field = spec.substr(start, k < 2 ? colon - start : std::string_view::npos);
    if (!field.empty() && field.front() == '+') field.remove_prefix(1);
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), parts[k]);
    if (field.empty() || ec != std::errc() || ptr != field.data() + field.size() || !std::isfinite(parts[k])) {
      return bad();
    }
    start = colon + 1;
  }
  const double lo = parts[0];
  const double hi = parts[1];
  const double step = parts[2];
  if (!(step > 0.0) || hi < lo) return bad();
  const double count = std::floor((hi - lo) / step + 1e-9) + 1.0;
  if (count > 10000.0) return bad();
  std::vector<double> out;
  for (int k = 0; k < static_cast<int>(count); ++k) out.push_back(std::pow(10.0, lo + k * step));
  return out;
}

int cmd_filter(const Args& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Run the split knockoff filter on a dataset", "splitknock filter"};
  InputFlags in;
  SplitConfig config;
  std::optional<Index> n1;
  bool no_split = false;
  bool hd = false;
  std::optional<double> lambda_beta;
  std::optional<double> lambda_gamma;
  std::string out_path;
  app.add_option("--x", in.x, "design matrix CSV (n x p)")->required();
  app.add_option("--y", in.y, "response CSV (n values)")->required();
  add_transform_flags(app, in);
  app.add_option("--nu", config.nu, "variable-splitting parameter nu > 0")->capture_default_str();
  app.add_option("--q", config.q, "target directional FDR level in (0, 1)")->capture_default_str();
  app.add_flag("--plus", config.plus, "use the knockoff+ threshold");
  app.add_option("--n1", n1, "rows in the path-estimation half (default 40% of n)");
  app.add_option("--seed", config.seed, "seed for the sample split")->capture_default_str();
  app.add_flag("--no-split", no_split, "use the full data for both the path and the copy");
  app.add_flag("--hd", hd, "screen beta and gamma features on the path half first");
  app.add_option("--lambda-beta", lambda_beta, "beta screening level (default: 5-fold CV)");
  app.add_option("--lambda-gamma", lambda_gamma, "gamma screening level (default: largest set that fits n2)");
  app.add_option("--lambda-count", config.lambda_count, "points on the lambda grid")->capture_default_str();
  app.add_flag("--allow-nonconverged", config.allow_nonconverged, "keep going if the path solver stalls");
  app.add_option("--out", out_path, "write the JSON result here instead of standard output");
  config.plus = false;

  return guarded(app, args, out, err, [&]() {
    const auto started = serialize::utc_timestamp();
    const Dataset data = load_dataset(in);
    const LinearTransform transform = load_transform(in, data.p());
    if (no_split && hd) throw Error(ErrorKind::InvalidParameter, "--no-split and --hd cannot be combined");
    if (!hd && (lambda_beta || lambda_gamma)) {
      throw Error(ErrorKind::InvalidParameter, "--lambda-beta / --lambda-gamma need --hd");
    }
    config.n1 = no_split ? 0 : n1.value_or(default_n1(data.n()));

    SelectionResult result;
    Json screen;
    if (no_split) {
      if (data.n() < transform.m() + transform.p()) {
        throw Error(ErrorKind::InsufficientSamples,
                    "without sample splitting the filter needs n >= m + p, got n = " + std::to_string(data.n()) +
                        ", m + p = " + std::to_string(transform.m() + transform.p()));
      }
      result = run_no_split(data, transform, config);
    } else if (hd) {
      HdOptions options;
      options.lambda_beta = lambda_beta;
      options.lambda_gamma = lambda_gamma;
      HdResult hd_result = run_hd_pipeline(data, transform, config, options);
      result = std::move(hd_result.selection);
      screen = Json::object();
      screen["lambda_beta"] = hd_result.screen.lambda_beta;
      screen["lambda_gamma"] = hd_result.screen.lambda_gamma;
      Json sb = Json::array();
      for (const Index i : hd_result.screen.S_beta) sb.push_back(i + 1);
      Json sg = Json::array();
      for (const Index i : hd_result.screen.S_gamma) sg.push_back(i + 1);
      screen["S_beta"] = sb;
      screen["S_gamma"] = sg;
    } else {
      result = run_split_knockoff(data, transform, config);
    }

    Json doc = serialize::to_json(result);
    if (!screen.is_null()) doc["screen"] = screen;
    serialize::RunManifest manifest;
    manifest.command = "filter";
    manifest.config = serialize::to_json(config);
    manifest.config["mode"] = no_split ? "no-split" : (hd ? "hd" : "split");
    manifest.config["transform"] = in.d.empty() ? in.transform : "custom";
    manifest.input_digests = digests({in.x, in.y, in.d, in.edges});
    manifest.seed = config.seed;
    manifest.wall_clock = started;
    doc["manifest"] = serialize::to_json(manifest);
    const std::string text = serialize::dump(doc) + "\n";
    if (out_path.empty()) {
      out << text;
      print_summary(result, data.n(), data.p(), transform.m(), err);
    } else {
      write_text(out_path, text);
      print_summary(result, data.n(), data.p(), transform.m(), out);
    }
    return kExitOk;
  });
}

int cmd_simulate(const Args& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Monte-Carlo experiment on a simulated scenario", "splitknock simulate"};
  ExperimentSpec spec;
  std::string scenario = "d2";
  std::string grid = "0:2:0.2";
  std::string mode = "split";
  std::string out_csv;
  std::string aggregate_csv;
  const unsigned cores = std::max(1u, std::thread::hardware_concurrency());
  spec.jobs = static_cast<int>(cores);
  app.add_option("--scenario", scenario, "d1 (identity), d2 (line differences) or d3 (both stacked)")
      ->check(CLI::IsMember({"d1", "d2", "d3"}))
      ->capture_default_str();
  app.add_option("--n", spec.n, "rows")->capture_default_str();
  app.add_option("--p", spec.p, "features")->capture_default_str();
  app.add_option("--rho", spec.rho, "AR(1) correlation of the design")->capture_default_str();
  app.add_option("--sigma", spec.sigma, "noise standard deviation")->capture_default_str();
  app.add_option("--n1", spec.n1, "rows in the path-estimation half")->capture_default_str();
  app.add_option("--q", spec.q, "target directional FDR level")->capture_default_str();
  app.add_option("--nu-grid", grid, "LO:HI:STEP in log10(nu)")->capture_default_str();
  app.add_option("--reps", spec.replicates, "replicates per nu")->capture_default_str();
  app.add_option("--seed", spec.base_seed, "base seed; replicate k uses seed + k")->capture_default_str();
  app.add_option("--mode", mode, "split, no-split or hd")
      ->check(CLI::IsMember({"split", "no-split", "hd"}))
      ->capture_default_str();
  app.add_flag("--cv-nu", spec.cv_nu, "choose nu per replicate by cross validation over the grid");
  app.add_option("--folds", spec.cv_folds, "folds for --cv-nu")->capture_default_str();
  app.add_option("--lambda-count", spec.lambda_count, "points on the lambda grid")->capture_default_str();
  app.add_option("--jobs", spec.jobs, "worker threads (default: available cores)");
  app.add_option("--out-csv", out_csv, "tidy per-replicate CSV (default: standard output)");
  app.add_option("--aggregate-csv", aggregate_csv, "per-nu summary CSV (default: <out-csv stem>.aggregate.csv)");

  return guarded(app, args, out, err, [&]() {
    const auto started = serialize::utc_timestamp();
    spec.scenario = scenario;
    spec.transform = scenario == "d1"   ? TransformKind::Identity
                     : scenario == "d2" ? TransformKind::LineDifference
                                        : TransformKind::Stacked;
    spec.mode = mode == "split" ? ExperimentMode::Split
                : mode == "hd"  ? ExperimentMode::Hd
                                : ExperimentMode::NoSplit;
    spec.nu_grid = parse_nu_grid(grid);
    const ExperimentReport report = run_experiment(spec);

    std::ostringstream tidy;
    serialize::write_tidy_csv(report, tidy);
    std::ostringstream aggregate;
    serialize::write_aggregate_csv(report, aggregate);

    serialize::RunManifest manifest;
    manifest.command = "simulate";
    Json cfg = Json::object();
    cfg["scenario"] = scenario;
    cfg["mode"] = mode;
    cfg["n"] = spec.n;
    cfg["p"] = spec.p;
    cfg["rho"] = spec.rho;
    cfg["sigma"] = spec.sigma;
    cfg["n1"] = spec.n1;
    cfg["q"] = spec.q;
    cfg["nu_grid"] = grid;
    cfg["cv_nu"] = spec.cv_nu;
    cfg["folds"] = spec.cv_folds;
    cfg["reps"] = spec.replicates;
    cfg["lambda_count"] = spec.lambda_count;
    manifest.config = cfg;
    manifest.seed = spec.base_seed;
    manifest.wall_clock = started;

    if (out_csv.empty()) {
      out << tidy.str();
      if (!aggregate_csv.empty()) write_text(aggregate_csv, aggregate.str());
    } else {
      if (aggregate_csv.empty()) {
        const auto dot = out_csv.rfind(".csv");
        aggregate_csv = (dot != std::string::npos && dot + 4 == out_csv.size() ? out_csv.substr(0, dot) : out_csv) +
                        ".aggregate.csv";
      }
      write_text(out_csv, tidy.str());
      write_text(aggregate_csv, aggregate.str());
      write_text(out_csv + ".manifest.json", serialize::dump(serialize::to_json(manifest)) + "\n");
      out << aggregate.str();
    }
    Index failed = 0;
    for (const auto& rec : report.records) failed += rec.failed ? 1 : 0;
    if (failed > 0) err << failed << " of " << report.records.size() << " replicate runs failed\n";
    return kExitOk;
  });
}

int cmd_cv_nu(const Args& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cross-validate nu on the path-estimation half", "splitknock cv-nu"};
  InputFlags in;
  std::string grid = "0:2:0.2";
  int folds = 5;
  std::optional<Index> n1;
  std::uint64_t seed = 0;
  std::string out_path;
  app.add_option("--x", in.x, "design matrix CSV (n x p)")->required();
  app.add_option("--y", in.y, "response CSV (n values)")->required();
  add_transform_flags(app, in);
  app.add_option("--nu-grid", grid, "LO:HI:STEP in log10(nu)")->capture_default_str();
  app.add_option("--folds", folds, "number of folds")->capture_default_str();
  app.add_option("--n1", n1, "rows in the path-estimation half (default 40% of n)");
  app.add_option("--seed", seed, "seed for the split and the folds")->capture_default_str();
  app.add_option("--out", out_path, "also write the table and a manifest as JSON");

  return guarded(app, args, out, err, [&]() {
    const auto started = serialize::utc_timestamp();
    const Dataset data = load_dataset(in);
    const LinearTransform transform = load_transform(in, data.p());
    const std::vector<double> nu_grid = parse_nu_grid(grid);
    SplitConfig config;
    config.n1 = n1.value_or(default_n1(data.n()));
    config.seed = seed;
    config.validate(data.n());
    Rng split_rng(seed);
    const DataSplit split = split_samples(data.n(), config.n1, split_rng);
    Rng fold_rng(derive_seed(seed, 2));
    const CvResult cv = cv_select_nu(restrict_rows(data, split.idx1), transform.D(), nu_grid, folds, fold_rng);

    out << "nu_star," << serialize::format_double(cv.nu_star) << '\n';
    out << "log10_nu,nu,cv_mse\n";
    Json table = Json::array();
    for (const auto& row : cv.table) {
      out << serialize::format_double(std::log10(row.nu)) << ',' << serialize::format_double(row.nu) << ','
          << serialize::format_double(row.mse) << '\n';
      table.push_back(Json{{"nu", row.nu}, {"cv_mse", row.mse}});
    }
    if (!out_path.empty()) {
      Json doc = Json::object();
      doc["schema"] = std::string(serialize::kSchema);
      doc["nu_star"] = cv.nu_star;
      doc["table"] = table;
      serialize::RunManifest manifest;
      manifest.command = "cv-nu";
      manifest.config = Json{{"nu_grid", grid}, {"folds", folds}, {"n1", config.n1}};
      manifest.input_digests = digests({in.x, in.y, in.d, in.edges});
      manifest.seed = seed;
      manifest.wall_clock = started;
      doc["manifest"] = serialize::to_json(manifest);
      write_text(out_path, serialize::dump(doc) + "\n");
    }
    return kExitOk;
  });
}

int cmd_copy_check(const Args& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Build the knockoff copy and print its residuals", "splitknock copy-check"};
  InputFlags in;
  double nu = 1.0;
  std::uint64_t seed = 0;
  std::vector<Index> random_dims;
  std::string out_path;
  app.add_option("--x", in.x, "copy-half design CSV (n2 x p)");
  add_transform_flags(app, in);
  app.add_option("--nu", nu, "variable-splitting parameter nu > 0")->capture_default_str();
  app.add_option("--seed", seed, "seed for --random")->capture_default_str();
  app.add_option("--random", random_dims, "synthetic Gaussian X2 and D: P M N2")->expected(3);
  app.add_option("--out", out_path, "also write the residuals and a manifest as JSON");

  return guarded(app, args, out, err, [&]() {
    const auto started = serialize::utc_timestamp();
    Matrix x2;
    LinearTransform transform;
    if (!random_dims.empty()) {
      if (!in.x.empty()) throw Error(ErrorKind::InvalidParameter, "give either --x or --random, not both");
      const Index p = random_dims[0];
      const Index m = random_dims[1];
      const Index n2 = random_dims[2];
      if (p < 1 || m < 1 || n2 < 1) throw Error(ErrorKind::InvalidParameter, "--random needs positive P M N2");
      Rng rng(seed);
      x2.resize(n2, p);
      for (Index j = 0; j < p; ++j) {
        for (Index i = 0; i < n2; ++i) x2(i, j) = rng.normal();
      }
      if (in.d.empty() && in.transform.empty()) {
        Matrix d(m, p);
        for (Index j = 0; j < p; ++j) {
          for (Index i = 0; i < m; ++i) d(i, j) = rng.normal();
        }
        transform = LinearTransform::custom(std::move(d));
      } else {
        transform = load_transform(in, p);
      }
    } else {
      if (in.x.empty()) throw Error(ErrorKind::InvalidParameter, "one of --x or --random is required");
      x2 = io::read_csv(in.x).values;
      transform = load_transform(in, x2.cols());
    }
    const Index n2 = x2.rows();
    const AugmentedDesign aug = build_augmented(Dataset(x2, Vector::Zero(n2)), transform.D(), nu);
    if (aug.n2 < aug.m + aug.p) {
      throw Error(ErrorKind::InsufficientSamples,
                  "copy construction needs n2 >= m + p, got n2 = " + std::to_string(aug.n2) +
                      ", m + p = " + std::to_string(aug.m + aug.p));
    }
    const SymMatrix c_nu = compute_C_nu(aug);
    const Vector s = s_equicorrelated(c_nu, nu);
    const KnockoffCopy copy = construct_copy(aug, s, c_nu);
    const CopyResiduals res = copy_residuals(copy, aug);
    const double bottom_max = copy.A_tilde.bottomRows(aug.m).cwiseAbs().maxCoeff();

    constexpr double kTol = 1e-8;
    out << "n2," << aug.n2 << "\np," << aug.p << "\nm," << aug.m << "\nnu," << serialize::format_double(nu)
        << "\ns," << serialize::format_double(s.size() > 0 ? s(0) : 0.0) << '\n';
    out << "gram," << serialize::format_double(res.gram) << '\n'
        << "cross," << serialize::format_double(res.cross) << '\n'
        << "self," << serialize::format_double(res.self) << '\n'
        << "bottom_block," << serialize::format_double(res.bottom_block) << '\n'
        << "converts_x2," << serialize::format_double(res.converts_x2) << '\n'
        << "top_gram," << serialize::format_double(res.top_gram) << '\n'
        << "bottom_block_max_abs," << serialize::format_double(bottom_max) << '\n';
    const bool ok = res.within(kTol);
    out << (ok ? "all residuals <= 1e-8\n" : "residual above 1e-8\n");

    if (!out_path.empty()) {
      Json doc = Json::object();
      doc["schema"] = std::string(serialize::kSchema);
      doc["s"] = s.size() > 0 ? s(0) : 0.0;
      doc["residuals"] = serialize::to_json(res);
      doc["bottom_block_max_abs"] = bottom_max;
      doc["pass"] = ok;
      serialize::RunManifest manifest;
      manifest.command = "copy-check";
      manifest.config = Json{{"nu", nu}, {"n2", aug.n2}, {"p", aug.p}, {"m", aug.m}};
      manifest.input_digests = digests({in.x, in.d, in.edges});
      manifest.seed = seed;
      manifest.wall_clock = started;
      doc["manifest"] = serialize::to_json(manifest);
      write_text(out_path, serialize::dump(doc) + "\n");
    }
    return ok ? kExitOk : kExitNumeric;
  });
}

int run(const Args& args, std::ostream& out, std::ostream& err) {
  const std::string usage =
      "usage: splitknock <command> [options]\n"
      "commands:\n"
      "  filter      run the filter on CSV data and write a JSON result\n"
      "  simulate    Monte-Carlo experiment on a simulated scenario\n"
      "  cv-nu       cross-validate nu on the path-estimation half\n"
      "  copy-check  build the knockoff copy and print its residuals\n"
      "run 'splitknock <command> --help' for the options of a command\n";
  if (args.empty()) {
    err << usage;
    return kExitValidation;
  }
  const std::string& cmd = args.front();
  const Args rest(args.begin() + 1, args.end());
  if (cmd == "--version" || cmd == "version") {
    out << "splitknock " << serialize::library_version() << " (schema " << serialize::kSchema << ")\n";
    return kExitOk;
  }
  if (cmd == "--help" || cmd == "-h" || cmd == "help") {
    out << usage;
    return kExitOk;
  }
  if (cmd == "filter") return cmd_filter(rest, out, err);
  if (cmd == "simulate") return cmd_simulate(rest, out, err);
  if (cmd == "cv-nu") return cmd_cv_nu(rest, out, err);
  if (cmd == "copy-check") return cmd_copy_check(rest, out, err);
  err << "unknown command '" << cmd << "'\n" << usage;
  return kExitValidation;
}

}  // namespace splitknock::cli
