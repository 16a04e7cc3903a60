#include "stream_ot/harness.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "stream_ot/analysis.hpp"
#include "stream_ot/error.hpp"

namespace stream_ot {

namespace {

using nlohmann::json;

const std::set<std::string> known_keys = {
    "preset", "alpha",   "beta",  "epsilon",    "a",    "b",    "zeta",   "algo",
    "compress", "basis", "trigger", "every", "n_max", "iterations", "seed", "output"};

std::string num(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) return "nan";
  return std::string(buf, ptr);
}

template <typename T>
T get_as(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(Errc::invalid_argument, std::string("config key '") + key + "': " + e.what());
  }
}

void apply(RunConfig& cfg, const json& j, const std::string& origin) {
  if (!j.is_object()) throw Error(Errc::invalid_argument, origin + ": expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!known_keys.count(key)) throw Error(Errc::invalid_argument, origin + ": unknown key '" + key + "'");
  }
  if (j.contains("preset")) cfg.preset = get_as<std::string>(j, "preset");
  if (j.contains("alpha")) cfg.alpha = j.at("alpha");
  if (j.contains("beta")) cfg.beta = j.at("beta");
  if (j.contains("epsilon")) cfg.epsilon = get_as<double>(j, "epsilon");
  if (j.contains("a")) cfg.a = get_as<double>(j, "a");
  if (j.contains("b")) cfg.b = get_as<double>(j, "b");
  if (j.contains("zeta")) cfg.zeta = get_as<double>(j, "zeta");
  if (j.contains("algo")) cfg.algo = get_as<std::string>(j, "algo");
  if (j.contains("compress")) cfg.compress = get_as<std::string>(j, "compress");
  if (j.contains("basis")) cfg.basis = get_as<std::string>(j, "basis");
  if (j.contains("trigger")) cfg.trigger = get_as<std::size_t>(j, "trigger");
  if (j.contains("every")) cfg.every = get_as<std::size_t>(j, "every");
  // A budget given at a higher level replaces the lower level's budget of
  // either kind.
  if (j.contains("n_max") || j.contains("iterations")) {
    cfg.n_max.reset();
    cfg.iterations.reset();
  }
  if (j.contains("n_max") && !j.at("n_max").is_null()) cfg.n_max = get_as<std::size_t>(j, "n_max");
  if (j.contains("iterations") && !j.at("iterations").is_null()) {
    cfg.iterations = get_as<std::size_t>(j, "iterations");
  }
  if (j.contains("seed")) cfg.seed = get_as<std::uint64_t>(j, "seed");
  if (j.contains("output")) cfg.output = get_as<std::string>(j, "output");
}

CompressionMethod parse_method(const std::string& name) {
  if (name == "none") return CompressionMethod::none;
  if (name == "fourier") return CompressionMethod::fourier;
  if (name == "gq") return CompressionMethod::gq;
  throw Error(Errc::invalid_argument, "unknown compression method '" + name + "'");
}

void validate(const RunConfig& cfg) {
  cfg.schedule().validate();
  if (cfg.algo != "os" && cfg.algo != "cos") {
    throw Error(Errc::invalid_argument, "algo must be os or cos, got '" + cfg.algo + "'");
  }
  parse_method(cfg.compress);
  if (cfg.basis != "measure" && cfg.basis != "kernel") {
    throw Error(Errc::invalid_argument, "basis must be measure or kernel, got '" + cfg.basis + "'");
  }
  if (cfg.n_max && cfg.iterations) {
    throw Error(Errc::invalid_argument, "give either n_max or iterations, not both");
  }
  const auto pair = cfg.distributions();
  if (cfg.algo == "cos") cfg.compression().validate(pair.alpha.dim());
}

Eigen::VectorXd vec_from(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Eigen::MatrixXd mat_from(const json& j) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(rows.empty() ? 0 : rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != static_cast<std::size_t>(m.cols())) {
      throw Error(Errc::alignment, "ragged covariance matrix");
    }
    for (std::size_t k = 0; k < rows[i].size(); ++k) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
    }
  }
  return m;
}

}  // namespace

Budget RunConfig::budget() const {
  if (iterations) return Budget::of_iterations(*iterations);
  return Budget::of_samples(n_max.value_or(30000));
}

CompressionConfig RunConfig::compression() const {
  CompressionConfig c;
  c.method = algo == "cos" ? parse_method(compress) : CompressionMethod::none;
  c.trigger_n = trigger;
  c.every = every;
  c.basis = basis == "kernel" ? FourierBasis::kernel : FourierBasis::measure;
  return c;
}

Distribution distribution_from_json(const json& spec) {
  try {
    if (spec.contains("mean")) return Distribution::gaussian(vec_from(spec.at("mean")), mat_from(spec.at("cov")));
    std::vector<Eigen::VectorXd> means;
    std::vector<Eigen::MatrixXd> covs;
    for (const auto& m : spec.at("means")) means.push_back(vec_from(m));
    for (const auto& c : spec.at("covs")) covs.push_back(mat_from(c));
    std::vector<double> weights(means.size(), 1.0 / static_cast<double>(means.size()));
    if (spec.contains("weights")) weights = spec.at("weights").get<std::vector<double>>();
    return Distribution::mixture(std::move(means), std::move(covs), std::move(weights));
  } catch (const json::exception& e) {
    throw Error(Errc::invalid_argument, std::string("distribution spec: ") + e.what());
  }
}

DistributionPair RunConfig::distributions() const {
  if (alpha.has_value() != beta.has_value()) {
    throw Error(Errc::invalid_argument, "inline distributions need both alpha and beta");
  }
  if (alpha) {
    return {"inline", distribution_from_json(*alpha), distribution_from_json(*beta)};
  }
  return stream_ot::preset(preset);
}

RunConfig parse_config(const std::optional<std::string>& path, const json& flags) {
  RunConfig cfg;
  if (const char* env = std::getenv("STREAM_OT_SEED"); env != nullptr && *env != '\0') {
    std::uint64_t s = 0;
    const std::string_view text(env);
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), s);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
      throw Error(Errc::invalid_argument, "STREAM_OT_SEED is not an unsigned integer: " + std::string(text));
    }
    cfg.seed = s;
  }
  if (path) {
    std::ifstream in(*path);
    if (!in) throw Error(Errc::io, "cannot read config file " + *path);
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw Error(Errc::invalid_argument, *path + ": " + e.what());
    }
    apply(cfg, j, *path);
  }
  apply(cfg, flags, "flags");
  validate(cfg);
  return cfg;
}

json dump_config(const RunConfig& cfg) {
  json j;
  j["preset"] = cfg.preset;
  if (cfg.alpha) j["alpha"] = *cfg.alpha;
  if (cfg.beta) j["beta"] = *cfg.beta;
  j["epsilon"] = cfg.epsilon;
  j["a"] = cfg.a;
  j["b"] = cfg.b;
  j["zeta"] = cfg.zeta;
  j["algo"] = cfg.algo;
  j["compress"] = cfg.compress;
  j["basis"] = cfg.basis;
  j["trigger"] = cfg.trigger;
  j["every"] = cfg.every;
  if (cfg.n_max) j["n_max"] = *cfg.n_max;
  if (cfg.iterations) j["iterations"] = *cfg.iterations;
  j["seed"] = cfg.seed;
  j["output"] = cfg.output;
  return j;
}

std::string trace_to_csv(const Trace& trace) {
  std::string out = trace_csv_header;
  out += '\n';
  for (const auto& r : trace.rows) {
    out += std::to_string(r.t) + ',' + std::to_string(r.N) + ',' + std::to_string(r.support_f) + ',' +
           std::to_string(r.support_g) + ',' + num(r.err_succ_var) + ',' + num(r.dual_obj) + ',' +
           (r.comp_sup_err ? num(*r.comp_sup_err) : std::string()) + ',' + num(r.wall_ms) + '\n';
  }
  return out;
}

void write_trace_csv(const Trace& trace, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io, "cannot open " + path + " for writing");
  out << trace_to_csv(trace);
  if (!out) throw Error(Errc::io, "write failed for " + path);
}

Trace read_trace_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot read trace " + path);
  std::string line;
  if (!std::getline(in, line) || line != trace_csv_header) {
    throw Error(Errc::io, path + ": unexpected CSV header");
  }
  Trace tr;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() == 7 && !line.empty() && line.back() == ',') cells.emplace_back();
    if (cells.size() != 8) throw Error(Errc::io, path + ":" + std::to_string(lineno) + ": expected 8 fields");
    try {
      TraceRow r;
      r.t = std::stoull(cells[0]);
      r.N = std::stoull(cells[1]);
      r.support_f = std::stoull(cells[2]);
      r.support_g = std::stoull(cells[3]);
      r.err_succ_var = std::stod(cells[4]);
      r.dual_obj = std::stod(cells[5]);
      if (!cells[6].empty()) r.comp_sup_err = std::stod(cells[6]);
      r.wall_ms = std::stod(cells[7]);
      tr.rows.push_back(r);
    } catch (const std::exception&) {
      throw Error(Errc::io, path + ":" + std::to_string(lineno) + ": malformed number");
    }
  }
  return tr;
}

ExperimentResult run_experiment(const RunConfig& cfg) {
  validate(cfg);
  const auto pair = cfg.distributions();
  const Schedule sched = cfg.schedule();
  ExperimentResult res;
  if (cfg.algo == "cos") {
    auto r = run_compressed(pair.alpha, pair.beta, sched, cfg.compression(), cfg.budget(), cfg.seed);
    res.trace = std::move(r.run.trace);
    res.stats = r.stats;
  } else {
    res.trace = run_online_sinkhorn(pair.alpha, pair.beta, sched, cfg.budget(), cfg.seed).trace;
  }
  if (!cfg.output.empty()) write_trace_csv(res.trace, cfg.output);

  const RateReport rates = theoretical_rates(cfg.a, cfg.b);
  std::string slope = "nan";
  std::string slope_se = "nan";
  try {
    const SlopeFit fit = fit_loglog_slope(res.trace, Metric::err_succ_var);
    slope = num(fit.slope);
    slope_se = num(fit.slope_stderr);
  } catch (const Error&) {
  }
  const TraceRow* last = res.trace.rows.empty() ? nullptr : &res.trace.rows.back();
  std::ostringstream os;
  os << "algo=" << cfg.algo << " compress=" << (cfg.algo == "cos" ? cfg.compress : "none")
     << " N=" << (last ? last->N : 0) << " iterations=" << res.trace.rows.size()
     << " fitted_slope=" << slope << " slope_stderr=" << slope_se
     << " theoretical_rate=" << num(rates.new_rate) << " old_rate=" << num(rates.old_rate)
     << " final_err=" << (last ? num(last->err_succ_var) : "nan")
     << " wall_ms=" << (last ? num(last->wall_ms) : "0") << " warnings=" << res.trace.warnings;
  if (!cfg.output.empty()) os << " csv=" << cfg.output;
  res.summary = os.str();
  return res;
}

namespace {

constexpr double plot_w = 640.0;
constexpr double plot_h = 420.0;
constexpr double margin_l = 70.0;
constexpr double margin_t = 30.0;
constexpr double margin_r = 170.0;
constexpr double margin_b = 50.0;

const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string esc(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fixed(double v, int digits = 3) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, digits);
  return ec == std::errc() ? std::string(buf, ptr) : "0";
}

}  // namespace

std::string render_plot(const std::vector<PlotSeries>& series, double a, double b) {
  if (series.empty()) throw Error(Errc::invalid_argument, "plot needs at least one trace");
  double lx0 = INFINITY, lx1 = -INFINITY, ly0 = INFINITY, ly1 = -INFINITY;
  for (const auto& s : series) {
    if (s.trace.rows.empty()) throw Error(Errc::invalid_argument, "trace '" + s.label + "' is empty");
    for (const auto& r : s.trace.rows) {
      if (!(r.err_succ_var > 0.0)) continue;
      const double lx = std::log10(static_cast<double>(r.N));
      const double ly = std::log10(r.err_succ_var);
      lx0 = std::min(lx0, lx);
      lx1 = std::max(lx1, lx);
      ly0 = std::min(ly0, ly);
      ly1 = std::max(ly1, ly);
    }
  }
  if (!std::isfinite(lx0)) throw Error(Errc::invalid_argument, "no positive errors to plot");
  lx0 = std::floor(lx0);
  lx1 = std::max(std::ceil(lx1), lx0 + 1.0);
  ly0 = std::floor(ly0);
  ly1 = std::max(std::ceil(ly1), ly0 + 1.0);
  auto px = [&](double lx) { return margin_l + (lx - lx0) / (lx1 - lx0) * plot_w; };
  auto py = [&](double ly) { return margin_t + (ly1 - ly) / (ly1 - ly0) * plot_h; };

  std::ostringstream os;
  const double width = margin_l + plot_w + margin_r;
  const double height = margin_t + plot_h + margin_b;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fixed(width, 0) << "\" height=\""
     << fixed(height, 0) << "\" viewBox=\"0 0 " << fixed(width, 0) << ' ' << fixed(height, 0) << "\"";
  // Axis mapping, so the plotted coordinates can be read back.
  os << " data-log10-x-min=\"" << fixed(lx0, 0) << "\" data-log10-x-max=\"" << fixed(lx1, 0)
     << "\" data-log10-y-min=\"" << fixed(ly0, 0) << "\" data-log10-y-max=\"" << fixed(ly1, 0)
     << "\" data-plot-left=\"" << fixed(margin_l, 0) << "\" data-plot-top=\"" << fixed(margin_t, 0)
     << "\" data-plot-width=\"" << fixed(plot_w, 0) << "\" data-plot-height=\"" << fixed(plot_h, 0)
     << "\">\n";
  os << "<rect x=\"0\" y=\"0\" width=\"" << fixed(width, 0) << "\" height=\"" << fixed(height, 0)
     << "\" fill=\"white\"/>\n";
  os << "<g font-family=\"sans-serif\" font-size=\"12\">\n";
  for (double e = lx0; e <= lx1 + 1e-9; e += 1.0) {
    os << "<line x1=\"" << fixed(px(e)) << "\" y1=\"" << fixed(py(ly0)) << "\" x2=\"" << fixed(px(e))
       << "\" y2=\"" << fixed(py(ly1)) << "\" stroke=\"#ddd\"/>\n";
    os << "<text x=\"" << fixed(px(e)) << "\" y=\"" << fixed(py(ly0) + 18) << "\" text-anchor=\"middle\">1e"
       << fixed(e, 0) << "</text>\n";
  }
  for (double e = ly0; e <= ly1 + 1e-9; e += 1.0) {
    os << "<line x1=\"" << fixed(px(lx0)) << "\" y1=\"" << fixed(py(e)) << "\" x2=\"" << fixed(px(lx1))
       << "\" y2=\"" << fixed(py(e)) << "\" stroke=\"#ddd\"/>\n";
    os << "<text x=\"" << fixed(px(lx0) - 6) << "\" y=\"" << fixed(py(e) + 4) << "\" text-anchor=\"end\">1e"
       << fixed(e, 0) << "</text>\n";
  }
  os << "<rect x=\"" << fixed(margin_l) << "\" y=\"" << fixed(margin_t) << "\" width=\"" << fixed(plot_w)
     << "\" height=\"" << fixed(plot_h) << "\" fill=\"none\" stroke=\"black\"/>\n";
  os << "<text x=\"" << fixed(margin_l + plot_w / 2) << "\" y=\"" << fixed(height - 10)
     << "\" text-anchor=\"middle\">samples N</text>\n";
  os << "<text x=\"16\" y=\"" << fixed(margin_t + plot_h / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
     << fixed(margin_t + plot_h / 2) << ")\">successive error (var norm)</text>\n";
  os << "</g>\n";

  std::size_t idx = 0;
  for (const auto& s : series) {
    os << "<polyline class=\"series\" data-label=\"" << esc(s.label) << "\" fill=\"none\" stroke=\""
       << palette[idx % 6] << "\" stroke-width=\"1.5\" points=\"";
    bool first = true;
    for (const auto& r : s.trace.rows) {
      if (!(r.err_succ_var > 0.0)) continue;
      if (!first) os << ' ';
      first = false;
      os << fixed(px(std::log10(static_cast<double>(r.N)))) << ',' << fixed(py(std::log10(r.err_succ_var)));
    }
    os << "\"/>\n";
    os << "<text x=\"" << fixed(margin_l + plot_w + 10) << "\" y=\"" << fixed(margin_t + 16 + 18.0 * static_cast<double>(idx))
       << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"" << palette[idx % 6] << "\">" << esc(s.label)
       << "</text>\n";
    ++idx;
  }

  // Guide lines through the last point of the first series.
  const RateReport rates = theoretical_rates(a, b);
  const auto& anchor = series.front().trace.rows.back();
  const double ax = std::log10(static_cast<double>(anchor.N));
  const double ay = std::log10(std::max(anchor.err_succ_var, 1e-300));
  const struct {
    const char* cls;
    const char* dash;
    double slope;
    const char* name;
  } guides[] = {{"guide-new", "6,4", rates.new_rate, "rate"}, {"guide-old", "2,3", rates.old_rate, "old rate"}};
  for (std::size_t g = 0; g < 2; ++g) {
    const auto& gl = guides[g];
    const double y0 = ay + gl.slope * (lx0 - ax);
    os << "<line class=\"" << gl.cls << "\" data-slope=\"" << num(gl.slope) << "\" x1=\"" << fixed(px(lx0))
       << "\" y1=\"" << fixed(py(y0)) << "\" x2=\"" << fixed(px(ax)) << "\" y2=\"" << fixed(py(ay))
       << "\" stroke=\"#555\" stroke-dasharray=\"" << gl.dash << "\"/>\n";
    os << "<text x=\"" << fixed(margin_l + plot_w + 10) << "\" y=\""
       << fixed(margin_t + 16 + 18.0 * static_cast<double>(series.size() + g))
       << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#555\">" << gl.name << " " << fixed(gl.slope, 2)
       << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

void emit_plot(const std::vector<PlotSeries>& series, const std::string& out_path, double a, double b) {
  const std::string svg = render_plot(series, a, b);
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw Error(Errc::io, "cannot open " + out_path + " for writing");
  out << svg;
  if (!out) throw Error(Errc::io, "write failed for " + out_path);
  const std::string data_path = out_path + ".data.csv";
  std::ofstream data(data_path, std::ios::binary);
  if (!data) throw Error(Errc::io, "cannot open " + data_path + " for writing");
  data << "label,N,err_succ_var\n";
  for (const auto& s : series) {
    for (const auto& r : s.trace.rows) data << s.label << ',' << r.N << ',' << num(r.err_succ_var) << '\n';
  }
}

}  // namespace stream_ot
