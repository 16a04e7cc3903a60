#include <future>
#include <iomanip>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "stream_ot/analysis.hpp"
#include "stream_ot/discrete_sinkhorn.hpp"
#include "stream_ot/error.hpp"
#include "stream_ot/harness.hpp"

using nlohmann::json;
using namespace stream_ot;

namespace {

struct RunFlags {
  std::vector<std::string> configs;
  std::size_t jobs = 1;
  bool dump = false;
  std::optional<std::string> preset, alpha, beta, algo, compress, basis, output;
  std::optional<double> epsilon, a, b, zeta;
  std::optional<std::size_t> trigger, every, n_max, iterations;
  std::optional<std::uint64_t> seed;

  json overrides() const {
    json j = json::object();
    if (preset) j["preset"] = *preset;
    if (alpha) j["alpha"] = json::parse(*alpha);
    if (beta) j["beta"] = json::parse(*beta);
    if (algo) j["algo"] = *algo;
    if (compress) j["compress"] = *compress;
    if (basis) j["basis"] = *basis;
    if (output) j["output"] = *output;
    if (epsilon) j["epsilon"] = *epsilon;
    if (a) j["a"] = *a;
    if (b) j["b"] = *b;
    if (zeta) j["zeta"] = *zeta;
    if (trigger) j["trigger"] = *trigger;
    if (every) j["every"] = *every;
    if (n_max) j["n_max"] = *n_max;
    if (iterations) j["iterations"] = *iterations;
    if (seed) j["seed"] = *seed;
    return j;
  }
};

int do_run(const RunFlags& f) {
  std::vector<std::optional<std::string>> paths;
  for (const auto& p : f.configs) paths.emplace_back(p);
  if (paths.empty()) paths.emplace_back(std::nullopt);

  std::vector<RunConfig> cfgs;
  for (const auto& p : paths) cfgs.push_back(parse_config(p, f.overrides()));
  if (f.dump) {
    for (const auto& c : cfgs) std::cout << dump_config(c).dump(2) << '\n';
    return 0;
  }
  std::set<std::string> outputs;
  for (const auto& c : cfgs) {
    if (!c.output.empty() && !outputs.insert(c.output).second) {
      throw Error(Errc::invalid_argument, "two configs write to the same output " + c.output);
    }
  }

  std::vector<std::string> summaries(cfgs.size());
  const std::size_t jobs = std::max<std::size_t>(1, f.jobs);
  for (std::size_t start = 0; start < cfgs.size(); start += jobs) {
    std::vector<std::future<std::string>> running;
    for (std::size_t i = start; i < std::min(cfgs.size(), start + jobs); ++i) {
      running.push_back(std::async(std::launch::async, [&cfg = cfgs[i]] { return run_experiment(cfg).summary; }));
    }
    for (std::size_t k = 0; k < running.size(); ++k) summaries[start + k] = running[k].get();
  }
  for (const auto& s : summaries) std::cout << s << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Streaming entropic optimal transport experiments"};
  app.require_subcommand(1);

  RunFlags rf;
  auto* run = app.add_subcommand("run", "Run online Sinkhorn, optionally compressed, and write a trace CSV");
  run->add_option("--config", rf.configs, "JSON config file; repeat to run several");
  run->add_option("--jobs", rf.jobs, "Configs to run concurrently")->check(CLI::PositiveNumber);
  run->add_flag("--dump-config", rf.dump, "Print the effective config and exit");
  run->add_option("--preset", rf.preset, "Distribution pair: " + [] {
    std::string s;
    for (const auto& n : preset_names()) s += (s.empty() ? "" : ", ") + n;
    return s;
  }());
  run->add_option("--alpha", rf.alpha, "Inline source distribution (JSON)");
  run->add_option("--beta", rf.beta, "Inline target distribution (JSON)");
  run->add_option("--epsilon", rf.epsilon, "Entropic regularisation");
  run->add_option("--a", rf.a, "Batch-size exponent");
  run->add_option("--b", rf.b, "Learning-rate exponent");
  run->add_option("--zeta", rf.zeta, "Compression decay exponent");
  run->add_option("--algo", rf.algo, "os or cos");
  run->add_option("--compress", rf.compress, "none, fourier or gq");
  run->add_option("--basis", rf.basis, "Fourier basis: measure or kernel");
  run->add_option("--trigger", rf.trigger, "Compress once this many samples per side were drawn");
  run->add_option("--every", rf.every, "Compress every k-th eligible iteration");
  run->add_option("--n-max,--n_max", rf.n_max, "Per-side sample budget");
  run->add_option("--iterations", rf.iterations, "Iteration budget");
  run->add_option("--seed", rf.seed, "RNG seed (fallback: STREAM_OT_SEED)");
  run->add_option("--output", rf.output, "Trace CSV path");

  std::string ra = "1.2", rb = "-0.6";
  auto* rates = app.add_subcommand("rates", "Theoretical convergence rates");
  rates->add_option("--a", ra, "Batch-size exponent (decimal or p/q)");
  rates->add_option("--b", rb, "Learning-rate exponent");

  std::string ca = "1.5", cb = "-0.6", cz = "1";
  auto* complexity = app.add_subcommand("complexity", "Sample-complexity exponents, exact fractions");
  complexity->add_option("--a", ca, "Batch-size exponent (decimal or p/q)");
  complexity->add_option("--b", cb, "Learning-rate exponent");
  complexity->add_option("--zeta", cz, "Compression decay exponent");

  std::string ref_preset = "gauss1d_paper";
  double ref_eps = 0.3;
  std::size_t ref_n = 2000;
  std::uint64_t ref_seed = 1;
  auto* reference = app.add_subcommand("reference", "Discrete Sinkhorn dual value on a large sample");
  reference->add_option("--preset", ref_preset, "Distribution pair");
  reference->add_option("--epsilon", ref_eps, "Entropic regularisation");
  reference->add_option("--n-ref", ref_n, "Samples per side");
  reference->add_option("--seed", ref_seed, "RNG seed");

  std::vector<std::string> traces, labels;
  std::string plot_out = "convergence.svg";
  double pa = 1.2, pb = -0.6;
  auto* plot = app.add_subcommand("plot", "Log-log SVG of successive error against N");
  plot->add_option("traces", traces, "Trace CSV files")->required();
  plot->add_option("--label", labels, "Series labels, in trace order");
  plot->add_option("--out", plot_out, "SVG path");
  plot->add_option("--a", pa, "Batch-size exponent for the guide lines");
  plot->add_option("--b", pb, "Learning-rate exponent for the guide lines");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return do_run(rf);
    if (rates->parsed()) {
      const auto r = theoretical_rates(Rational::parse(ra), Rational::parse(rb));
      std::cout << "new_rate=" << r.new_rate_exact.str() << " (" << r.new_rate << ") old_rate=" << r.old_rate_exact.str()
                << " (" << r.old_rate << ") transient_exponent=" << r.transient_exact.str() << " ("
                << r.transient_exponent << ")\n";
      return 0;
    }
    if (complexity->parsed()) {
      const auto c = complexity_exponents(Rational::parse(ca), Rational::parse(cb), Rational::parse(cz));
      std::cout << "os=" << c.os_exponent.str() << " cos=" << c.cos_exponent.str() << " ratio="
                << c.ratio_exponent.str() << " regime_boundary=" << c.regime_boundary.str() << " break_even="
                << c.break_even.str() << " regime=" << (c.regime == Regime::zeta_large ? "zeta_large" : "zeta_small")
                << '\n';
      return 0;
    }
    if (reference->parsed()) {
      const auto pair = preset(ref_preset);
      const auto r = reference_dual_value(pair.alpha, pair.beta, ref_eps, ref_n, ref_seed);
      std::cout << std::setprecision(17) << r.value << '\n'
                << std::setprecision(6) << "converged=" << (r.converged ? "yes" : "no") << " iterations=" << r.iterations
                << " n_ref=" << r.n_ref << " epsilon=" << ref_eps << " seed=" << ref_seed << '\n';
      return r.converged ? 0 : 2;
    }
    if (plot->parsed()) {
      std::vector<PlotSeries> series;
      for (std::size_t i = 0; i < traces.size(); ++i) {
        series.push_back({i < labels.size() ? labels[i] : traces[i], read_trace_csv(traces[i])});
      }
      emit_plot(series, plot_out, pa, pb);
      std::cout << "wrote " << plot_out << " and " << plot_out << ".data.csv\n";
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.code()) << "): " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
