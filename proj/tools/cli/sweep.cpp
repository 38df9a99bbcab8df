#include "sweep.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "rcwave/error.hpp"
#include "rcwave/parallel.hpp"

namespace rcwave::cli {

std::vector<int> parse_n_list(const std::string& text) {
  std::vector<int> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t comma = text.find(',', pos);
    if (comma == std::string::npos) comma = text.size();
    int v = 0;
    const char* b = text.data() + pos;
    const char* e = text.data() + comma;
    auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || p != e || v <= 0)
      throw Error(ErrorCode::InvalidArgument, "bad n value '" + std::string(b, e) + "'");
    if (!out.empty() && v <= out.back())
      throw Error(ErrorCode::InvalidArgument, "n values must be strictly increasing");
    out.push_back(v);
    pos = comma + 1;
  }
  return out;
}

std::vector<SweepRow> run_sweep(const SweepOptions& opt) {
  if (opt.records <= 0) throw Error(ErrorCode::InvalidArgument, "records must be positive");
  std::vector<SweepRow> rows;
  for (int n : opt.n_list) {
    CorpusConfig cc;
    cc.n_nets = n;
    cc.order_min = opt.order_min;
    cc.order_max = opt.order_max;
    cc.records_per_net = (opt.records + n - 1) / n;
    cc.seed = mix_seed(opt.seed, static_cast<std::uint64_t>(n));
    cc.data.n_samples = opt.model.seq_len;
    cc.data.n_terms = opt.model.n_terms;
    const auto records = synthesize_corpus(cc, thread_count());
    nn::TrainOptions t = opt.train;
    t.seed = opt.seed;
    const nn::TrainResult res = nn::train(records, opt.model, t);
    SweepRow row{n, res.report.val_rmse, res.report.wall_time_s};
    if (opt.on_row) opt.on_row(row);
    rows.push_back(row);
  }
  return rows;
}

namespace {

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

}  // namespace

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string s = "n,val_rmse,train_time_s\n";
  for (const auto& r : rows)
    s += std::to_string(r.n) + "," + fmt("%.9g", r.val_rmse) + "," + fmt("%.3f", r.train_time_s) +
         "\n";
  return s;
}

std::string sweep_svg(const std::vector<SweepRow>& rows) {
  const double w = 640, h = 400, left = 70, right = 20, top = 30, bottom = 50;
  const double pw = w - left - right, ph = h - top - bottom;
  double nmin = rows.empty() ? 0 : rows.front().n, nmax = rows.empty() ? 1 : rows.back().n;
  if (nmax <= nmin) nmax = nmin + 1;
  double ymax = 0;
  for (const auto& r : rows) ymax = std::max(ymax, r.val_rmse);
  ymax = ymax > 0 ? ymax * 1.1 : 1.0;
  auto sx = [&](double n) { return left + (n - nmin) / (nmax - nmin) * pw; };
  auto sy = [&](double v) { return top + ph - v / ymax * ph; };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
    << "\" viewBox=\"0 0 " << w << ' ' << h << "\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<line x1=\"" << left << "\" y1=\"" << top + ph << "\" x2=\"" << left + pw << "\" y2=\""
    << top + ph << "\" stroke=\"black\"/>\n";
  o << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + ph
    << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double v = ymax * i / 4;
    o << "<text x=\"" << left - 6 << "\" y=\"" << fmt("%.1f", sy(v) + 4)
      << "\" font-size=\"11\" text-anchor=\"end\">" << fmt("%.4f", v) << "</text>\n";
  }
  for (const auto& r : rows)
    o << "<text x=\"" << fmt("%.1f", sx(r.n)) << "\" y=\"" << top + ph + 16
      << "\" font-size=\"11\" text-anchor=\"middle\">" << r.n << "</text>\n";
  o << "<text x=\"" << left + pw / 2 << "\" y=\"" << h - 10
    << "\" font-size=\"12\" text-anchor=\"middle\">number of RC nets (n)</text>\n";
  o << "<text x=\"16\" y=\"" << top + ph / 2 << "\" font-size=\"12\" text-anchor=\"middle\" "
    << "transform=\"rotate(-90 16 " << top + ph / 2 << ")\">validation RMSE</text>\n";
  o << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"";
  for (std::size_t i = 0; i < rows.size(); ++i)
    o << (i ? " " : "") << fmt("%.1f", sx(rows[i].n)) << ',' << fmt("%.1f", sy(rows[i].val_rmse));
  o << "\"/>\n";
  for (const auto& r : rows)
    o << "<circle cx=\"" << fmt("%.1f", sx(r.n)) << "\" cy=\"" << fmt("%.1f", sy(r.val_rmse))
      << "\" r=\"3\" fill=\"steelblue\"/>\n";
  o << "</svg>\n";
  return o.str();
}

}  // namespace rcwave::cli
