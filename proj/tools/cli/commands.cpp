#include "commands.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>

#include "rcwave/circuit.hpp"
#include "rcwave/corpus.hpp"
#include "rcwave/dataset.hpp"
#include "rcwave/error.hpp"
#include "rcwave/network.hpp"
#include "rcwave/nn/checkpoint.hpp"
#include "rcwave/nn/train.hpp"
#include "rcwave/parallel.hpp"
#include "rcwave/spef.hpp"
#include "rcwave/transient.hpp"
#include "sweep.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace rcwave::cli {

namespace {

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw Error(ErrorCode::IoFailure, "cannot create directory " + dir.string());
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

void usage(const std::string& what) { throw Error(ErrorCode::InvalidArgument, what); }

const spef::SpefNet& pick_net(const std::vector<spef::SpefNet>& nets, const std::string& name,
                              const std::string& file) {
  if (nets.empty()) usage(file + " holds no nets");
  if (name.empty()) return nets.front();
  for (const auto& n : nets)
    if (n.name == name) return n;
  usage("net '" + name + "' not found in " + file);
  return nets.front();
}

RcNetwork network_of(const spef::SpefNet& net, const std::string& driver, const std::string& output) {
  if (driver.empty() && output.empty()) return to_network(net);
  return to_network(net, driver.empty() ? net.driver_pin() : driver,
                    output.empty() ? net.receiver_pin() : output);
}

// ---------------------------------------------------------------- gen

struct GenArgs {
  int nets = 10;
  int order_min = 2;
  int order_max = 15;
  std::uint64_t seed = 0;
  std::string out;
  std::string config;
};

int cmd_gen(const GenArgs& a, std::ostream& out) {
  if (a.nets < 0) usage("--nets must be >= 0");
  if (a.order_min < 1 || a.order_max < a.order_min)
    usage("order range must satisfy 1 <= --order-min <= --order-max");
  spef::ValueRanges ranges;
  if (!a.config.empty()) ranges = spef::parse_generator_config(read_text(a.config)).ranges;
  make_dir(a.out);
  json manifest{{"seed", a.seed},
                {"order_min", a.order_min},
                {"order_max", a.order_max},
                {"ranges",
                 {{"cap_ff", {ranges.cap_ff.min, ranges.cap_ff.max}},
                  {"res_segment_ohm", {ranges.res_segment_ohm.min, ranges.res_segment_ohm.max}},
                  {"res_end_ohm", {ranges.res_end_ohm.min, ranges.res_end_ohm.max}}}},
                {"nets", json::array()}};
  for (int i = 0; i < a.nets; ++i) {
    const NetDraw d = draw_net(a.seed, i, a.order_min, a.order_max);
    char name[32];
    std::snprintf(name, sizeof name, "net_%04d", i);
    const spef::SpefNet net = spef::generate_spef(d.order, d.spef_seed, ranges, name);
    const std::string file = std::string(name) + ".spef";
    write_text(fs::path(a.out) / file, spef::emit_spef(net));
    manifest["nets"].push_back({{"file", file}, {"name", name}, {"order", d.order}, {"seed", d.spef_seed}});
  }
  write_text(fs::path(a.out) / "manifest.json", manifest.dump(2) + "\n");
  out << "wrote " << a.nets << " nets to " << a.out << "\n";
  return 0;
}

// ---------------------------------------------------------------- decompose

struct DecomposeArgs {
  std::string spef;
  std::string net;
  std::string driver;
  std::string output;
  std::string json_out;
  bool check = false;
  int freqs = 50;
  double tol = 1e-8;
};

int cmd_decompose(const DecomposeArgs& a, std::ostream& out) {
  const auto nets = spef::parse_spef(read_text(a.spef));
  const RcNetwork net = network_of(pick_net(nets, a.net, a.spef), a.driver, a.output);
  const NodalSystem sys = assemble_system(net);
  const TransferFunction tf = extract_tf(sys);
  if (a.json_out.empty())
    out << to_json(tf, 2) << "\n";
  else
    write_text(a.json_out, to_json(tf, 2) + "\n");
  if (a.check) {
    if (a.freqs < 2) usage("--freqs must be >= 2");
    const double rel = reconstruction_error(tf, sys, a.freqs);
    const double peak = reconstruction_error_peak(tf, sys, a.freqs);
    out << "check: max_rel_err " << num(rel) << " (tol " << num(a.tol) << ", "
        << (rel < a.tol ? "ok" : "exceeded") << ")\n";
    out << "check: peak_rel_err " << num(peak) << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string spef;
  std::string tf;
  std::string net;
  std::string stim = "step";
  int samples = 128;
  double t_span = 0.0;
  std::string out;
  std::string csv;
  bool compare = false;
  std::string method = "analytic";
  int substeps = 8;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  if (a.spef.empty() == a.tf.empty()) usage("give exactly one of --spef or --tf");
  if (a.samples < 2) usage("--samples must be >= 2");
  if (a.substeps < 1) usage("--substeps must be >= 1");
  if (a.method != "analytic" && a.method != "trapezoid") usage("--method is analytic or trapezoid");
  const Stimulus stim = parse_stimulus(a.stim);

  std::optional<NodalSystem> sys;
  TransferFunction tf;
  if (!a.spef.empty()) {
    const auto nets = spef::parse_spef(read_text(a.spef));
    sys = assemble_system(to_network(pick_net(nets, a.net, a.spef)));
    tf = extract_tf(*sys);
  } else {
    tf = transfer_function_from_json(read_text(a.tf));
    if (a.compare || a.method == "trapezoid") usage("--compare and trapezoid need --spef");
  }
  const double t_span = a.t_span > 0.0 ? a.t_span : default_t_span(tf);
  validate(stim, t_span, a.samples);

  const Waveform v_out = a.method == "analytic"
                             ? analytic_response(tf, stim, t_span, a.samples)
                             : numerical_response(*sys, stim, t_span, a.samples, a.substeps);
  std::optional<Waveform> other;
  if (a.compare)
    other = a.method == "analytic" ? numerical_response(*sys, stim, t_span, a.samples, a.substeps)
                                   : analytic_response(tf, stim, t_span, a.samples);

  if (a.out.empty())
    out << to_json(v_out) << "\n";
  else
    write_text(a.out, to_json(v_out) + "\n");
  if (!a.csv.empty()) {
    const Waveform v_in = sample_stimulus(stim, t_span, a.samples);
    std::string s = other ? "t,v_in,v_out,v_other\n" : "t,v_in,v_out\n";
    for (int k = 0; k < a.samples; ++k) {
      s += num(v_out.time_at(k)) + "," + num(v_in.samples[k]) + "," + num(v_out.samples[k]);
      if (other) s += "," + num(other->samples[k]);
      s += "\n";
    }
    write_text(a.csv, s);
  }
  if (other) out << "max_abs_deviation " << num(max_abs_diff(v_out, *other)) << "\n";
  return 0;
}

// ---------------------------------------------------------------- dataset

struct DatasetArgs {
  std::string spef_dir;
  int per_net = 0;
  std::string stims = "step,slow,fast";
  int points = 128;
  int terms = 8;
  double t_span_factor = 7.0;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_dataset(const DatasetArgs& a, std::ostream& out) {
  if (!fs::is_directory(a.spef_dir))
    throw Error(ErrorCode::IoFailure, "not a directory: " + a.spef_dir);
  CorpusConfig cc;
  cc.recipes = parse_stim_list(a.stims);
  cc.records_per_net = a.per_net > 0 ? a.per_net : static_cast<int>(cc.recipes.size());
  if (a.per_net < 0) usage("--samples-per-net must be positive");
  if (a.points < 2 || a.terms < 1 || !(a.t_span_factor > 0)) usage("invalid sampling options");
  cc.data.n_samples = a.points;
  cc.data.n_terms = a.terms;
  cc.data.t_span_factor = a.t_span_factor;
  cc.seed = a.seed;
  cc.rotate_recipes = false;

  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(a.spef_dir))
    if (e.is_regular_file() && e.path().extension() == ".spef") files.push_back(e.path());
  std::sort(files.begin(), files.end());

  std::vector<spef::SpefNet> nets;
  for (const auto& f : files) {
    try {
      for (auto& n : spef::parse_spef(read_text(f))) nets.push_back(std::move(n));
    } catch (const Error& e) {
      throw Error(e.code(), f.filename().string() + ": " + e.what(), e.line());
    }
  }
  std::vector<std::vector<features::FeatureRecord>> per(nets.size());
  parallel_for(nets.size(), thread_count(), [&](std::size_t i) {
    per[i] = records_for_net(to_network(nets[i]), static_cast<int>(i), cc, {},
                             static_cast<int>(i) * cc.records_per_net);
  });
  std::vector<features::FeatureRecord> records;
  for (auto& v : per)
    for (auto& r : v) records.push_back(std::move(r));
  std::vector<double> spans;
  for (const auto& r : records) spans.push_back(r.t_span);
  const features::NormStats stats = features::fit_norm_stats(spans);
  for (auto& r : records) r.t_norm = features::normalize_tspan(r.t_span, stats);
  features::write_dataset(a.out, records);

  std::map<int, int> hist;
  for (const auto& r : records) ++hist[r.order];
  out << "records " << records.size() << " from " << nets.size() << " nets\n";
  out << "orders";
  for (const auto& [o, c] : hist) out << " " << o << ":" << c;
  out << "\nnorm_stats mu_t " << num(stats.mu_t) << " sigma_t " << num(stats.sigma_t) << "\n";
  return 0;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string data;
  std::string config;
  std::string out;
  std::string report;
  std::uint64_t seed = 0;
  int epochs = 50;
  int batch = 8;
  double lr = 1e-3;
  int patience = 0;
  double val_fraction = 0.1;
  int threads = 0;
  bool quiet = false;
};

nn::ModelConfig model_config(const std::string& path, std::uint64_t seed,
                             const std::vector<features::FeatureRecord>* records) {
  nn::ModelConfig cfg;
  if (!path.empty()) cfg = nn::config_from_json(read_text(path));
  cfg.seed = seed;
  if (records && !records->empty()) {
    // Sequence shapes follow the data unless the config pins them.
    const auto& r = records->front();
    if (path.empty()) {
      cfg.seq_len = cfg.target_len = r.v_in.size();
      cfg.n_terms = static_cast<int>(r.triplets.rows.size());
    }
  }
  return cfg;
}

int cmd_train(const TrainArgs& a, std::ostream& out) {
  const auto records = features::read_dataset(a.data);
  if (records.empty()) usage(a.data + " holds no records");
  const nn::ModelConfig cfg = model_config(a.config, a.seed, &records);
  nn::TrainOptions opt;
  opt.epochs = a.epochs;
  opt.batch = a.batch;
  opt.lr = a.lr;
  opt.patience = a.patience;
  opt.val_fraction = a.val_fraction;
  opt.threads = a.threads;
  opt.seed = a.seed;
  if (!a.quiet)
    opt.on_epoch = [&out](const std::string& stage, int e, double loss, double val) {
      out << stage << " epoch " << e << " loss " << num(loss) << " val_rmse " << num(val) << "\n";
      out.flush();
    };
  const nn::TrainResult res = nn::train(records, cfg, opt);
  nn::save_checkpoint(res.model, a.out);
  if (!a.report.empty()) write_text(a.report, nn::report_to_json(res.report) + "\n");
  out << "val_rmse " << num(res.report.val_rmse) << " base_val_rmse "
      << num(res.report.base_val_rmse) << " wall_time_s " << num(res.report.wall_time_s) << "\n";
  return 0;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
  std::string model;
  std::string data;
  std::string report;
  std::string overlay;
  std::string split = "all";
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  if (a.split != "all" && a.split != "train" && a.split != "val")
    usage("--split is all, train or val");
  const nn::TrainedModel model = nn::load_checkpoint(a.model);
  const auto records = features::read_dataset(a.data);
  std::vector<int> pick;
  if (a.split == "all") {
    for (int i = 0; i < static_cast<int>(records.size()); ++i) pick.push_back(i);
  } else {
    const nn::Split s = nn::split_indices(static_cast<int>(records.size()), model.val_fraction,
                                          model.split_seed);
    pick = a.split == "train" ? s.train : s.val;
  }
  std::vector<const features::FeatureRecord*> rs;
  for (int i : pick) rs.push_back(&records[i]);
  const auto base = model.predict_base(rs);
  const auto corr = model.predict_correction(rs, base);
  std::vector<std::vector<double>> pred = base, truth;
  json per = json::array();
  for (std::size_t i = 0; i < rs.size(); ++i) {
    for (std::size_t k = 0; k < pred[i].size(); ++k) pred[i][k] += corr[i][k];
    truth.push_back(rs[i]->target.samples);
    per.push_back({{"id", rs[i]->id},
                   {"order", rs[i]->order},
                   {"rmse", rmse(pred[i], truth[i])},
                   {"base_rmse", rmse(base[i], truth[i])}});
  }
  const double total = nn::pooled_rmse(pred, truth);
  const double base_total = nn::pooled_rmse(base, truth);
  json rep{{"split", a.split},
           {"n_records", rs.size()},
           {"rmse", total},
           {"base_rmse", base_total},
           {"per_record", per}};
  if (!a.report.empty()) write_text(a.report, rep.dump(2) + "\n");
  if (!a.overlay.empty()) {
    std::string s = "id,k,t,target,base_pred,pred\n";
    for (std::size_t i = 0; i < rs.size(); ++i)
      for (std::size_t k = 0; k < pred[i].size(); ++k)
        s += std::to_string(rs[i]->id) + "," + std::to_string(k) + "," +
             num(rs[i]->target.time_at(static_cast<int>(k))) + "," + num(truth[i][k]) + "," +
             num(base[i][k]) + "," + num(pred[i][k]) + "\n";
    write_text(a.overlay, s);
  }
  out << "records " << rs.size() << " rmse " << num(total) << " base_rmse " << num(base_total)
      << "\n";
  return 0;
}

// ---------------------------------------------------------------- sweep

struct SweepArgs {
  std::string n_list = "2,10,40,80";
  std::string out = "rmse_vs_n.csv";
  std::string svg;
  std::string config;
  int records = 240;
  int epochs = 15;
  int batch = 8;
  double lr = 1e-3;
  int patience = 0;
  int order_min = 2;
  int order_max = 15;
  int threads = 0;
  std::uint64_t seed = 0;
};

int cmd_sweep(const SweepArgs& a, std::ostream& out) {
  SweepOptions o;
  o.n_list = parse_n_list(a.n_list);
  o.records = a.records;
  o.order_min = a.order_min;
  o.order_max = a.order_max;
  o.seed = a.seed;
  o.model = model_config(a.config, a.seed, nullptr);
  o.train.epochs = a.epochs;
  o.train.batch = a.batch;
  o.train.lr = a.lr;
  o.train.patience = a.patience;
  o.train.threads = a.threads;
  o.on_row = [&out](const SweepRow& r) {
    out << "n " << r.n << " val_rmse " << num(r.val_rmse) << " train_time_s "
        << num(r.train_time_s) << "\n";
    out.flush();
  };
  const auto rows = run_sweep(o);
  write_text(a.out, sweep_csv(rows));
  fs::path svg = a.svg.empty() ? fs::path(a.out).replace_extension(".svg") : fs::path(a.svg);
  write_text(svg, sweep_svg(rows));
  out << "wrote " << a.out << " and " << svg.string() << "\n";
  return 0;
}

int exit_code(const Error& e) {
  switch (classify(e.code())) {
    case ErrorClass::Usage: return 2;
    case ErrorClass::Io: return 3;
    case ErrorClass::Numerical: return 4;
  }
  return 1;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"RC interconnect waveform toolkit"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "generate random ladder nets as SPEF files");
  g->add_option("--nets", gen.nets, "number of nets")->capture_default_str();
  g->add_option("--order-min", gen.order_min, "smallest ladder order")->capture_default_str();
  g->add_option("--order-max", gen.order_max, "largest ladder order")->capture_default_str();
  g->add_option("--seed", gen.seed, "generator seed")->capture_default_str();
  g->add_option("--config", gen.config, "key=value file with value ranges");
  g->add_option("--out", gen.out, "output directory")->required();

  DecomposeArgs dec;
  auto* d = app.add_subcommand("decompose", "pole-residue expansion of a net");
  d->add_option("--spef", dec.spef, "SPEF file")->required();
  d->add_option("--net", dec.net, "net name (default: first)");
  d->add_option("--driver", dec.driver, "driver pin (default: the 'O' connection)");
  d->add_option("--output", dec.output, "observed pin (default: the 'I' connection)");
  d->add_option("--json-out", dec.json_out, "write the JSON here instead of stdout");
  d->add_flag("--check", dec.check, "compare against a direct frequency-domain solve");
  d->add_option("--freqs", dec.freqs, "probe frequencies for --check")->capture_default_str();
  d->add_option("--tol", dec.tol, "relative error bound reported by --check")->capture_default_str();

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "transient response of a net");
  s->add_option("--spef", sim.spef, "SPEF file");
  s->add_option("--tf", sim.tf, "transfer-function JSON from decompose");
  s->add_option("--net", sim.net, "net name (default: first)");
  s->add_option("--stim", sim.stim, "step or ramp:<rise seconds>")->capture_default_str();
  s->add_option("--samples", sim.samples, "output samples")->capture_default_str();
  s->add_option("--t-span", sim.t_span, "window in seconds (default 7 slowest time constants)");
  s->add_option("--method", sim.method, "analytic or trapezoid")->capture_default_str();
  s->add_option("--substeps", sim.substeps, "trapezoid steps per sample")->capture_default_str();
  s->add_flag("--compare", sim.compare, "run both oracles and report the deviation");
  s->add_option("--out", sim.out, "waveform JSON (default: stdout)");
  s->add_option("--csv", sim.csv, "also write a CSV table");

  DatasetArgs ds;
  auto* dsc = app.add_subcommand("dataset", "featurize a directory of SPEF files");
  dsc->add_option("--spef-dir", ds.spef_dir, "directory of .spef files")->required();
  dsc->add_option("--samples-per-net", ds.per_net,
                  "records per net (default: one per stimulus)");
  dsc->add_option("--stims", ds.stims, "comma list of step, slow, fast, ramp:<s>")
      ->capture_default_str();
  dsc->add_option("--points", ds.points, "samples per waveform")->capture_default_str();
  dsc->add_option("--terms", ds.terms, "triplet rows per record")->capture_default_str();
  dsc->add_option("--t-span-factor", ds.t_span_factor, "window in slowest time constants")
      ->capture_default_str();
  dsc->add_option("--seed", ds.seed, "seed for ramp rise times")->capture_default_str();
  dsc->add_option("--out", ds.out, "JSON-Lines output")->required();

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "train base and correction networks");
  t->add_option("--data", tr.data, "JSON-Lines dataset")->required();
  t->add_option("--config", tr.config, "model config JSON");
  t->add_option("--out", tr.out, "checkpoint path")->required();
  t->add_option("--report", tr.report, "training report JSON");
  t->add_option("--seed", tr.seed, "seed for init, split, shuffling, dropout")->capture_default_str();
  t->add_option("--epochs", tr.epochs, "epochs per stage")->capture_default_str();
  t->add_option("--batch", tr.batch, "batch size")->capture_default_str();
  t->add_option("--lr", tr.lr, "learning rate")->capture_default_str();
  t->add_option("--patience", tr.patience, "early stop after this many flat epochs (0 = off)")
      ->capture_default_str();
  t->add_option("--val-fraction", tr.val_fraction, "held-out fraction")->capture_default_str();
  t->add_option("--threads", tr.threads, "worker threads (0 = RCWAVE_THREADS or all cores)");
  t->add_flag("--quiet", tr.quiet, "no per-epoch lines");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "score a checkpoint on a dataset");
  e->add_option("--model", ev.model, "checkpoint")->required();
  e->add_option("--data", ev.data, "JSON-Lines dataset")->required();
  e->add_option("--report", ev.report, "report JSON");
  e->add_option("--overlay", ev.overlay, "CSV of truth and predictions per sample");
  e->add_option("--split", ev.split, "all, train or val (as split at training)")
      ->capture_default_str();

  SweepArgs sw;
  auto* w = app.add_subcommand("sweep", "validation RMSE against the number of nets");
  w->add_option("--n-list", sw.n_list, "comma list of net counts")->capture_default_str();
  w->add_option("--out", sw.out, "CSV output")->capture_default_str();
  w->add_option("--svg", sw.svg, "SVG output (default: CSV path with .svg)");
  w->add_option("--config", sw.config, "model config JSON");
  w->add_option("--records", sw.records, "records per training run")->capture_default_str();
  w->add_option("--epochs", sw.epochs, "epochs per stage")->capture_default_str();
  w->add_option("--batch", sw.batch, "batch size")->capture_default_str();
  w->add_option("--lr", sw.lr, "learning rate")->capture_default_str();
  w->add_option("--patience", sw.patience, "early stop patience (0 = off)")->capture_default_str();
  w->add_option("--order-min", sw.order_min, "smallest ladder order")->capture_default_str();
  w->add_option("--order-max", sw.order_max, "largest ladder order")->capture_default_str();
  w->add_option("--threads", sw.threads, "worker threads (0 = RCWAVE_THREADS or all cores)");
  w->add_option("--seed", sw.seed, "seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& ex) {
    const int code = app.exit(ex, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (g->parsed()) return cmd_gen(gen, out);
    if (d->parsed()) return cmd_decompose(dec, out);
    if (s->parsed()) return cmd_simulate(sim, out);
    if (dsc->parsed()) return cmd_dataset(ds, out);
    if (t->parsed()) {
      if (tr.threads < 0) usage("--threads must be >= 0");
      return cmd_train(tr, out);
    }
    if (e->parsed()) return cmd_eval(ev, out);
    if (w->parsed()) {
      if (sw.threads < 0) usage("--threads must be >= 0");
      return cmd_sweep(sw, out);
    }
  } catch (const Error& ex) {
    err << "error: " << ex.what() << "\n";
    return exit_code(ex);
  } catch (const fs::filesystem_error& ex) {
    err << "error: " << ex.what() << "\n";
    return 3;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace rcwave::cli
