#include "lacp/cli/commands.hpp"

#include "lacp/cli/io.hpp"
#include "lacp/cli/svg.hpp"
#include "lacp/conformal.hpp"
#include "lacp/error.hpp"
#include "lacp/knn.hpp"
#include "lacp/synthetic.hpp"
#include "lacp/training.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <numeric>
#include <ostream>
#include <sstream>

namespace lacp::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::vector<std::string> kFamilyNames{"erc-fit", "erc", "linear", "exp", "sigma", "fixed"};

struct LoadedData {
  std::string text;
  Dataset raw;
  std::optional<io::SynthHeader> synth;
};

LoadedData load_data(const fs::path& path, const std::string& header_mode) {
  LoadedData d;
  d.text = io::read_file(path);
  const bool has_header = header_mode == "yes" || (header_mode == "auto" && io::looks_like_header(d.text));
  d.raw = parse_csv(d.text, has_header);
  d.synth = io::parse_synth_header(d.text);
  return d;
}

// Split, KNN and scored sets reproduced from a saved model.
struct Prepared {
  Dataset normalized;
  Split parts;
  KnnModel knn;
  ScoredSet cp_train;
  ScoredSet validation;
  ScoredSet test;
};

Prepared prepare_from_model(const Dataset& raw, const io::ModelFile& model) {
  if (model.stats.size() != raw.dim() + 1) {
    throw InvalidArgument("model/data dimension mismatch: model expects " + std::to_string(model.stats.size() - 1) +
                          " attributes, data has " + std::to_string(raw.dim()));
  }
  auto normalized = apply_stats(raw, model.stats);
  auto parts = split(normalized, model.split);
  KnnModel knn(parts.proper_train, std::min(model.knn_k, parts.proper_train.size()));
  auto cp = make_scored_set(parts.cp_train, knn.predict(parts.cp_train));
  auto val = make_scored_set(parts.validation, knn.predict(parts.validation));
  auto test = make_scored_set(parts.test, knn.predict(parts.test));
  return {std::move(normalized), std::move(parts), std::move(knn), std::move(cp), std::move(val), std::move(test)};
}

std::string join(const std::vector<std::string>& v, char sep) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? std::string(1, sep) : "") + v[i];
  return out;
}

std::string join_doubles(const std::vector<double>& v) {
  std::vector<std::string> s;
  for (double d : v) s.push_back(io::format_double(d));
  return join(s, ',');
}

fs::path with_suffix(const fs::path& p, const std::string& suffix) {
  auto out = p;
  out += suffix;
  return out;
}

// --- synth ---------------------------------------------------------------

struct SynthOptions {
  std::string kind;
  std::size_t n = 1000;
  double rho = 0.1;
  std::uint64_t seed = 0;
  fs::path out;
};

int cmd_synth(const SynthOptions& o, std::ostream& out) {
  SynthSpec spec{noise_from_string(o.kind), o.n, o.rho, o.seed};
  const auto data = generate(spec);

  std::ostringstream csv;
  csv << "# lacp synth kind=" << o.kind << " n=" << o.n << " rho=" << io::format_double(o.rho) << " seed=" << o.seed
      << "\n# attribute_stats=";
  for (std::size_t c = 0; c < 3; ++c) {
    csv << (c ? ";" : "") << io::format_double(data.attribute_stats[c].mean) << ":"
        << io::format_double(data.attribute_stats[c].sd);
  }
  csv << "\nc0,x,x2,y\n";
  for (std::size_t i = 0; i < data.data.size(); ++i) {
    const auto row = data.data.row(i);
    for (double v : row) csv << io::format_double(v) << ",";
    csv << io::format_double(data.data.y()[static_cast<Eigen::Index>(i)]) << "\n";
  }
  io::write_atomic(o.out, csv.str());

  io::Manifest m;
  m.command = "synth";
  m.config = {{"argv", {"synth", "--kind", o.kind, "--n", std::to_string(o.n), "--rho", io::format_double(o.rho),
                        "--seed", std::to_string(o.seed), "--out", o.out.string()}},
              {"kind", o.kind}, {"n", o.n}, {"rho", o.rho}, {"seed", o.seed}};
  m.outputs = {o.out};
  io::write_manifest(o.out, m);
  out << "wrote " << o.n << " samples to " << o.out.string() << "\n";
  return kSuccess;
}

// --- train ---------------------------------------------------------------

struct TrainOptions {
  fs::path data;
  std::string header = "auto";
  std::string family;
  std::uint64_t seed = 0;
  std::size_t epochs = 200;
  double lr = 1e-3;
  std::size_t batch = 16;
  std::size_t patience = 20;
  double gamma = 1e-2;
  fs::path model_out;
  fs::path trace_out;
};

int cmd_train(TrainOptions o, std::ostream& out) {
  const auto data = load_data(o.data, o.header);
  const auto normalized = normalize(data.raw);
  const SplitSpec split_spec{o.seed, {0.4, 0.4, 0.1, 0.1}};
  const auto parts = split(normalized, split_spec);
  KnnFitOptions knn_options;
  knn_options.seed = o.seed;
  knn_options.clip_grid = true;
  const auto knn = fit_knn(parts.proper_train, knn_options);
  const auto cp = make_scored_set(parts.cp_train, knn.predict(parts.cp_train));
  const auto val = make_scored_set(parts.validation, knn.predict(parts.validation));

  TrainConfig config;
  config.family = FamilyChoice::parse(o.family);
  config.seed = o.seed;
  config.epochs = o.epochs;
  config.learning_rate = o.lr;
  config.batch_size = o.batch;
  config.patience = o.patience;
  config.options.gamma = o.gamma;
  const auto result = train_family(config, cp, val);

  io::ModelFile model;
  model.family = config.family;
  model.options = config.options;
  if (result.family.has_localizer()) model.localizer = result.family.localizer();
  model.stats = normalized.stats();
  model.knn_k = knn.k();
  model.split = split_spec;
  model.train = config;
  model.best_epoch = result.trace.best_epoch;
  model.data_digest = io::sha256_hex(data.text);
  io::save_model(o.model_out, model);

  if (o.trace_out.empty()) o.trace_out = with_suffix(o.model_out, ".trace.csv");
  io::write_atomic(o.trace_out, io::trace_csv(result.trace));

  io::Manifest m;
  m.command = "train";
  m.config = {{"argv",
               {"train", "--data", o.data.string(), "--header", o.header, "--family", o.family, "--seed",
                std::to_string(o.seed), "--epochs", std::to_string(o.epochs), "--lr", io::format_double(o.lr),
                "--batch", std::to_string(o.batch), "--patience", std::to_string(o.patience), "--gamma",
                io::format_double(o.gamma), "--model-out", o.model_out.string(), "--trace-out", o.trace_out.string()}},
              {"family", o.family}, {"seed", o.seed}, {"epochs", o.epochs}, {"learning_rate", o.lr},
              {"batch_size", o.batch}, {"patience", o.patience}, {"gamma", o.gamma},
              {"split_fractions", split_spec.fractions}, {"knn_k", knn.k()}};
  m.inputs = {o.data};
  m.outputs = {o.model_out, o.trace_out};
  io::write_manifest(o.model_out, m);

  out << "family " << config.family.label() << ": knn k=" << knn.k() << ", best epoch " << result.trace.best_epoch
      << " (validation size objective " << result.trace.best_val_loss << ", initial "
      << result.trace.initial_val_loss << ")\n";
  return kSuccess;
}

// --- eval ----------------------------------------------------------------

struct EvalOptions {
  fs::path data;
  std::string header = "auto";
  fs::path model;
  std::vector<std::string> families{kFamilyNames};
  std::vector<double> alphas{0.05, 0.1, 0.32};
  std::size_t runs = 5;
  std::uint64_t seed = 0;
  std::size_t epochs = 200;
  double lr = 1e-3;
  std::size_t batch = 16;
  std::size_t patience = 20;
  std::string name;
  fs::path report;
};

int cmd_eval(const EvalOptions& o, std::ostream& out, std::ostream& err) {
  const auto data = load_data(o.data, o.header);
  const std::string name = o.name.empty() ? o.data.stem().string() : o.name;
  ProtocolResult result;

  if (!o.model.empty()) {
    const auto model = io::load_model(o.model);
    if (!model.data_digest.empty() && model.data_digest != io::sha256_hex(data.text)) {
      err << "warning: data file differs from the one the model was trained on\n";
    }
    const auto prep = prepare_from_model(data.raw, model);
    std::vector<std::pair<std::string, TransformFamily>> families{{model.family.label(), model.make_family()}};
    if (model.family.kind != FamilyKind::fixed) families.emplace_back("fixed", TransformFamily::fixed());
    for (const auto& [label, family] : families) {
      for (const auto& rep : evaluate(family, prep.cp_train, prep.test, o.alphas)) {
        result.rows.push_back({name, label, rep.alpha, model.split.seed, rep.mean_size, rep.validity, model.knn_k,
                               model.best_epoch, rep.error});
      }
    }
    result.table = aggregate(result.rows);
  } else {
    ProtocolConfig config;
    config.dataset_name = name;
    for (const auto& f : o.families) config.families.push_back(FamilyChoice::parse(f));
    config.alphas = o.alphas;
    config.runs = o.runs;
    config.seed0 = o.seed;
    config.train.epochs = o.epochs;
    config.train.learning_rate = o.lr;
    config.train.batch_size = o.batch;
    config.train.patience = o.patience;
    result = run_protocol(normalize(data.raw), config, [&](const std::string& msg) { err << msg << "\n"; });
  }

  for (const auto& r : result.rows) {
    if (r.error) err << "error: " << r.family << " alpha=" << r.alpha << " seed=" << r.run_seed << ": " << *r.error << "\n";
  }
  const auto table = io::table_text(name, result.table);
  io::write_atomic(o.report, io::report_csv(result.rows));
  const auto table_path = with_suffix(o.report, ".table.md");
  io::write_atomic(table_path, table);
  out << table;

  io::Manifest m;
  m.command = "eval";
  std::vector<std::string> argv{"eval", "--data", o.data.string(), "--header", o.header,
                                "--alphas", join_doubles(o.alphas), "--runs", std::to_string(o.runs),
                                "--seed", std::to_string(o.seed), "--epochs", std::to_string(o.epochs),
                                "--lr", io::format_double(o.lr), "--batch", std::to_string(o.batch),
                                "--patience", std::to_string(o.patience), "--families", join(o.families, ','),
                                "--name", name, "--report", o.report.string()};
  if (!o.model.empty()) {
    argv.push_back("--model");
    argv.push_back(o.model.string());
  }
  m.config = {{"argv", argv}, {"alphas", o.alphas}, {"runs", o.runs}, {"seed0", o.seed}, {"families", o.families},
              {"epochs", o.epochs}, {"learning_rate", o.lr}, {"batch_size", o.batch}, {"patience", o.patience}};
  m.inputs = {o.data};
  if (!o.model.empty()) m.inputs.push_back(o.model);
  m.outputs = {o.report, table_path};
  io::write_manifest(o.report, m);
  return kSuccess;
}

// --- plot ----------------------------------------------------------------

struct PlotOptions {
  fs::path data;
  std::string header = "auto";
  fs::path model;
  double alpha = 0.05;
  std::size_t grid = 200;
  fs::path out;
  fs::path band_out;
};

int cmd_plot(PlotOptions o, std::ostream& out) {
  const auto data = load_data(o.data, o.header);
  const auto model = io::load_model(o.model);
  const auto prep = prepare_from_model(data.raw, model);
  const auto family = model.make_family();
  const double q_hat = calibrate(calibration_records(family, prep.cp_train), o.alpha);

  std::vector<double> px, py;
  std::vector<double> bx, center, lower, upper;
  auto add_band_point = [&](double x, std::span<const double> attrs) {
    const double f = prep.knn.predict(attrs);
    const auto iv = interval(family, attrs, f, q_hat);
    bx.push_back(x);
    center.push_back(f);
    lower.push_back(iv.lower());
    upper.push_back(iv.upper());
  };

  std::string x_label;
  if (data.synth) {
    x_label = "X";
    const auto& xs = data.synth->attribute_stats[1];
    for (std::size_t i = 0; i < data.raw.size(); ++i) {
      px.push_back(xs.revert(data.raw.x()(static_cast<Eigen::Index>(i), 1)));
      py.push_back(prep.normalized.y()[static_cast<Eigen::Index>(i)]);
    }
    const auto [lo, hi] = std::minmax_element(px.begin(), px.end());
    const std::size_t steps = std::max<std::size_t>(o.grid, 2);
    for (std::size_t k = 0; k < steps; ++k) {
      const double x = *lo + (*hi - *lo) * static_cast<double>(k) / static_cast<double>(steps - 1);
      const double synth_raw[3] = {1.0, x, x * x};
      double synth_scaled[3];
      for (std::size_t c = 0; c < 3; ++c) synth_scaled[c] = data.synth->attribute_stats[c].apply(synth_raw[c]);
      const Eigen::VectorXd attrs = normalize_attributes(synth_scaled, model.stats);
      add_band_point(x, std::span<const double>(attrs.data(), static_cast<std::size_t>(attrs.size())));
    }
  } else {
    std::size_t column = 0;
    while (column + 1 < model.stats.size() - 1 && model.stats[column].zero_variance()) ++column;
    x_label = "attribute " + std::to_string(column) + " (normalized)";
    std::vector<std::size_t> order(prep.normalized.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto& xs = prep.normalized.x();
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return xs(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(column)) <
             xs(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(column));
    });
    for (std::size_t i : order) {
      const double x = xs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(column));
      px.push_back(x);
      py.push_back(prep.normalized.y()[static_cast<Eigen::Index>(i)]);
      add_band_point(x, prep.normalized.row(i));
    }
  }

  svg::Figure fig;
  std::ostringstream title;
  title << model.family.label() << ", alpha=" << o.alpha;
  fig.set_title(title.str());
  fig.set_labels(x_label, "y (normalized)");
  fig.band(bx, lower, upper, "#1f77b4", 0.3);
  fig.scatter(px, py, "#444444", 1.8);
  fig.line(bx, center, "#d62728", 1.5);
  io::write_atomic(o.out, fig.render());

  if (o.band_out.empty()) o.band_out = fs::path(o.out).replace_extension(".csv");
  std::ostringstream csv;
  csv << "x,center,lower,upper,half_width\n";
  for (std::size_t i = 0; i < bx.size(); ++i) {
    csv << io::format_double(bx[i]) << "," << io::format_double(center[i]) << "," << io::format_double(lower[i])
        << "," << io::format_double(upper[i]) << "," << io::format_double(0.5 * (upper[i] - lower[i])) << "\n";
  }
  io::write_atomic(o.band_out, csv.str());

  io::Manifest m;
  m.command = "plot";
  m.config = {{"argv",
               {"plot", "--data", o.data.string(), "--header", o.header, "--model", o.model.string(), "--alpha",
                io::format_double(o.alpha), "--grid", std::to_string(o.grid), "--out", o.out.string(), "--band-out",
                o.band_out.string()}},
              {"alpha", o.alpha}, {"grid", o.grid}};
  m.inputs = {o.data, o.model};
  m.outputs = {o.out, o.band_out};
  io::write_manifest(o.out, m);
  out << "wrote " << o.out.string() << " and " << o.band_out.string() << "\n";
  return kSuccess;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Locally adaptive conformal prediction intervals", "lacp"};
  app.require_subcommand(1);

  SynthOptions so;
  auto* synth = app.add_subcommand("synth", "Generate a heteroskedastic synthetic dataset as CSV");
  synth->add_option("--kind", so.kind, "Noise profile")->required()->check(CLI::IsMember({"cos", "squared", "inverse", "linear"}));
  synth->add_option("--n", so.n, "Sample count")->check(CLI::PositiveNumber);
  synth->add_option("--rho", so.rho, "Noise floor")->check(CLI::PositiveNumber);
  synth->add_option("--seed", so.seed, "Random seed");
  synth->add_option("--out", so.out, "Output CSV")->required();

  TrainOptions to;
  auto* train_cmd = app.add_subcommand("train", "Split, fit KNN, train a score transformation and save the model");
  train_cmd->add_option("--data", to.data, "Input CSV (last column is the label)")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--header", to.header, "Header row: auto, yes or no")->check(CLI::IsMember({"auto", "yes", "no"}));
  train_cmd->add_option("--family", to.family, "Transformation family")->required()->check(CLI::IsMember(kFamilyNames));
  train_cmd->add_option("--seed", to.seed, "Seed for split, KNN folds, initialization and batching");
  train_cmd->add_option("--epochs", to.epochs, "Maximum epochs");
  train_cmd->add_option("--lr", to.lr, "Adam learning rate")->check(CLI::PositiveNumber);
  train_cmd->add_option("--batch", to.batch, "Minibatch size")->check(CLI::Range(std::size_t{2}, std::size_t{1} << 20));
  train_cmd->add_option("--patience", to.patience, "Early-stopping patience")->check(CLI::PositiveNumber);
  train_cmd->add_option("--gamma", to.gamma, "erc offset gamma")->check(CLI::PositiveNumber);
  train_cmd->add_option("--model-out", to.model_out, "Model JSON output")->required();
  train_cmd->add_option("--trace-out", to.trace_out, "Trace CSV output (default <model-out>.trace.csv)");

  EvalOptions eo;
  auto* eval_cmd = app.add_subcommand("eval", "Interval size and validity over repeated runs (or for one saved model)");
  eval_cmd->add_option("--data", eo.data, "Input CSV")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--header", eo.header, "Header row: auto, yes or no")->check(CLI::IsMember({"auto", "yes", "no"}));
  eval_cmd->add_option("--model", eo.model, "Evaluate this saved model on its own split")->check(CLI::ExistingFile);
  eval_cmd->add_option("--families", eo.families, "Families to train and compare")->delimiter(',')->check(CLI::IsMember(kFamilyNames));
  eval_cmd->add_option("--alphas", eo.alphas, "Miscoverage levels")->delimiter(',')->check(CLI::Range(0.0, 1.0));
  eval_cmd->add_option("--runs", eo.runs, "Number of runs (seeds seed..seed+runs-1)")->check(CLI::PositiveNumber);
  eval_cmd->add_option("--seed", eo.seed, "First run seed");
  eval_cmd->add_option("--epochs", eo.epochs, "Maximum epochs");
  eval_cmd->add_option("--lr", eo.lr, "Adam learning rate")->check(CLI::PositiveNumber);
  eval_cmd->add_option("--batch", eo.batch, "Minibatch size")->check(CLI::Range(std::size_t{2}, std::size_t{1} << 20));
  eval_cmd->add_option("--patience", eo.patience, "Early-stopping patience")->check(CLI::PositiveNumber);
  eval_cmd->add_option("--name", eo.name, "Dataset name in the report (default: file stem)");
  eval_cmd->add_option("--report", eo.report, "Per-run CSV report")->required();

  PlotOptions po;
  auto* plot_cmd = app.add_subcommand("plot", "SVG figure and CSV of the interval band");
  plot_cmd->add_option("--data", po.data, "Input CSV")->required()->check(CLI::ExistingFile);
  plot_cmd->add_option("--header", po.header, "Header row: auto, yes or no")->check(CLI::IsMember({"auto", "yes", "no"}));
  plot_cmd->add_option("--model", po.model, "Saved model")->required()->check(CLI::ExistingFile);
  plot_cmd->add_option("--alpha", po.alpha, "Miscoverage level")->check(CLI::Range(0.0, 1.0));
  plot_cmd->add_option("--grid", po.grid, "Band grid points (synthetic data)")->check(CLI::PositiveNumber);
  plot_cmd->add_option("--out", po.out, "SVG output")->required();
  plot_cmd->add_option("--band-out", po.band_out, "Band CSV output (default: --out with .csv)");

  fs::path replay_manifest;
  auto* replay = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
  replay->add_option("manifest", replay_manifest, "Manifest JSON")->required()->check(CLI::ExistingFile);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kUsageError;
  }

  try {
    if (synth->parsed()) return cmd_synth(so, out);
    if (train_cmd->parsed()) return cmd_train(to, out);
    if (eval_cmd->parsed()) return cmd_eval(eo, out, err);
    if (plot_cmd->parsed()) return cmd_plot(po, out);
    if (replay->parsed()) {
      const auto manifest = json::parse(io::read_file(replay_manifest));
      const auto argv = manifest.at("config").at("argv").get<std::vector<std::string>>();
      return run(argv, out, err);
    }
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntimeFailure;
  }
  return kUsageError;
}

}  // namespace lacp::cli
