#include "ats/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iterator>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ats/calibration.hpp"
#include "ats/format.hpp"
#include "ats/market.hpp"
#include "ats/report.hpp"
#include "ats/scaling.hpp"
#include "ats/synthetic.hpp"

namespace ats {

namespace {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct RunConfig {
  std::string chain;
  std::string curve;
  std::string calibration;
  std::string out = ".";
  double spot = 0.0;
  double alpha = 0.5;
  std::string family = "ATS";
  OptimizerConfig optimizer;

  // price
  double sigma = 0.2;
  double k = 1.0;
  double eta = 0.0;
  double expiry = 1.0;
  double forward = 100.0;
  double discount = 1.0;
  std::vector<double> strikes;

  // synth
  PowerLawParams law;
  SurfaceSpec surface;
};

std::string file_digest(const std::string& path) {
  if (path.empty()) return "-";
  std::ifstream f(path, std::ios::binary);
  if (!f) return "missing";
  const std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return hex64(fnv1a(bytes));
}

// Canonical text of every setting that can change an output; paths enter
// through the digest of the file they point to.
std::string canonical(const std::string& command, const RunConfig& c) {
  std::ostringstream os;
  auto kv = [&os](const char* key, const std::string& v) { os << key << '=' << v << '\n'; };
  auto num = [&kv](const char* key, double v) { kv(key, format_number(v)); };
  kv("command", command);
  kv("chain", file_digest(c.chain));
  kv("curve", file_digest(c.curve));
  kv("calibration", file_digest(c.calibration));
  num("spot", c.spot);
  num("alpha", c.alpha);
  kv("family", c.family);
  kv("seed", std::to_string(c.optimizer.seed));
  kv("max_iterations", std::to_string(c.optimizer.max_iterations));
  num("tolerance", c.optimizer.tolerance);
  num("xtol", c.optimizer.xtol);
  kv("population", std::to_string(c.optimizer.population));
  kv("generations", std::to_string(c.optimizer.generations));
  kv("restarts", std::to_string(c.optimizer.restarts));
  num("sigma", c.sigma);
  num("k", c.k);
  num("eta", c.eta);
  num("expiry", c.expiry);
  num("forward", c.forward);
  num("discount", c.discount);
  for (double s : c.strikes) num("strike", s);
  num("sigma_bar", c.law.sigma_bar);
  num("k_bar", c.law.k_bar);
  num("eta_bar", c.law.eta_bar);
  num("beta", c.law.beta);
  num("delta", c.law.delta);
  for (double t : c.surface.expiries) num("expiries", t);
  num("rate", c.surface.rate);
  num("dividend", c.surface.dividend);
  num("strike_step", c.surface.strike_step);
  return os.str();
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

void validate_common(const RunConfig& c) {
  require(c.alpha >= 0.0 && c.alpha < 1.0, "--alpha must lie in [0, 1)");
  parse_family(c.family);
  c.optimizer.validate();
}

void validate_market_inputs(const RunConfig& c) {
  require(!c.chain.empty(), "--chain is required");
  require(!c.curve.empty(), "--curve is required");
  require(c.spot > 0.0, "--spot must be > 0");
}

std::filesystem::path output_dir(const RunConfig& c) {
  std::filesystem::path dir(c.out);
  std::filesystem::create_directories(dir);
  return dir;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write '" + path.string() + "'");
  f << text;
}

MarketData load_market(const RunConfig& c, std::ostream& err) {
  const auto quotes = read_chain_file(c.chain);
  const auto curve = read_curve_file(c.curve);
  auto market = build_market(quotes, curve, c.spot);
  for (double t : market.skipped_expiries) {
    err << "warning: expiry " << format_number(t) << " skipped (no call/put pair after filtering)\n";
  }
  if (market.expiries.empty()) {
    throw InsufficientDataError("no expiry has a call/put pair after filtering");
  }
  return market;
}

int cmd_forwards(const RunConfig& c, const OutputStamp& stamp, std::ostream& out,
                 std::ostream& err) {
  validate_market_inputs(c);
  const auto market = load_market(c, err);
  std::ostringstream csv;
  csv << stamp.csv_line() << '\n';
  write_forwards(csv, market.expiries);
  const auto path = output_dir(c) / "forwards.csv";
  write_text(path, csv.str());
  out << "forwards: " << market.expiries.size() << " expiries -> " << path.string() << '\n';
  return kExitOk;
}

CalibrationResult run_calibration(const RunConfig& c, ModelFamily family, std::ostream& err) {
  const auto market = load_market(c, err);
  auto result = calibrate_surface(market.expiries, family, c.alpha, c.optimizer);
  for (const auto& f : result.failures) err << "warning: " << f << '\n';
  if (result.slices.empty()) throw InsufficientDataError("calibration produced no slices");
  return result;
}

nlohmann::json optimizer_json(const OptimizerConfig& o) {
  return {{"seed", o.seed},
          {"max_iterations", o.max_iterations},
          {"tolerance", o.tolerance},
          {"xtol", o.xtol},
          {"population", o.population},
          {"generations", o.generations},
          {"restarts", o.restarts}};
}

int cmd_calibrate(const RunConfig& c, const OutputStamp& stamp, std::ostream& out,
                  std::ostream& err) {
  validate_market_inputs(c);
  const auto family = parse_family(c.family);
  const auto result = run_calibration(c, family, err);
  auto j = to_json(result);
  j["tool"] = stamp.meta();
  j["optimizer"]["config"] = optimizer_json(c.optimizer);
  const auto path = output_dir(c) / "calibration.json";
  write_text(path, dump(j));
  out << "calibrate: " << to_string(family) << ", " << result.slices.size()
      << " slices, mse=" << format_number(result.mse) << " -> " << path.string() << '\n';
  return kExitOk;
}

int cmd_scaling(const RunConfig& c, const OutputStamp& stamp, std::ostream& out,
                std::ostream& err) {
  CalibrationResult result;
  if (!c.calibration.empty()) {
    std::ifstream f(c.calibration);
    if (!f) throw MissingFileError("cannot open '" + c.calibration + "'");
    nlohmann::json j;
    try {
      f >> j;
    } catch (const nlohmann::json::exception& e) {
      throw InputError(std::string("calibration json: ") + e.what());
    }
    result = calibration_from_json(j);
  } else {
    validate_market_inputs(c);
    result = run_calibration(c, ModelFamily::ATS, err);
  }
  require(result.family == ModelFamily::ATS,
          "scaling needs a per-slice (ATS) calibration with covariances");
  if (result.slices.size() < 3) {
    throw InsufficientDataError("scaling needs at least 3 calibrated slices, got " +
                                std::to_string(result.slices.size()));
  }
  const auto points = rescale(result);
  const auto analysis = scaling_analysis(points);

  nlohmann::json j;
  j["tool"] = stamp.meta();
  j["scaling"] = to_json(analysis);
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : points) pts.push_back(to_json(p));
  j["points"] = pts;
  j["conditions"] = to_json(result.conditions);

  const auto dir = output_dir(c);
  try {
    const auto moments = moment_term_structure(result);
    j["moments"] = to_json(moments);
    std::ostringstream csv;
    write_moments(csv, moments, stamp);
    write_text(dir / "moments.csv", csv.str());
  } catch (const std::exception& e) {
    j["moments"] = nullptr;
    err << "warning: moment term structure unavailable: " << e.what() << '\n';
  }
  write_text(dir / "scaling.json", dump(j));
  {
    std::ostringstream csv;
    write_scaling_points(csv, points, stamp);
    write_text(dir / "scaling_points.csv", csv.str());
  }
  {
    std::ostringstream csv;
    write_scaling_lines(csv, analysis, points, stamp);
    write_text(dir / "scaling_lines.csv", csv.str());
  }
  out << "scaling: beta=" << format_number(analysis.beta) << " (p=" << format_number(analysis.p_beta_one)
      << "), delta=" << format_number(analysis.delta)
      << " (p=" << format_number(analysis.p_delta_minus_half) << ") -> " << dir.string() << '\n';
  return kExitOk;
}

int cmd_price(const RunConfig& c, const OutputStamp& stamp, std::ostream& out) {
  require(!c.strikes.empty(), "--strikes is required");
  require(c.forward > 0.0, "--forward must be > 0");
  require(c.discount > 0.0 && c.discount <= 1.0, "--discount must lie in (0, 1]");
  const TemperedStableSlice slice(c.expiry, c.alpha, c.sigma, c.k, c.eta);
  const auto calls = lewis_call_prices(make_cf(slice), c.forward, c.discount, c.strikes);
  std::ostringstream csv;
  csv << stamp.csv_line() << '\n';
  csv << "strike,moneyness,call,put,implied_vol\n";
  int failures = 0;
  for (std::size_t i = 0; i < calls.size(); ++i) {
    const double K = c.strikes[i];
    const double put = put_from_parity(calls[i], c.forward, c.discount, K);
    std::string iv;
    try {
      iv = format_number(implied_vol_otm(calls[i], c.forward, K, c.expiry, c.discount));
    } catch (const InversionError&) {
      iv = "NA";
      ++failures;
    }
    csv << format_number(K) << ',' << format_number(moneyness(K, c.forward)) << ','
        << format_number(calls[i]) << ',' << format_number(put) << ',' << iv << '\n';
  }
  const auto path = output_dir(c) / "prices.csv";
  write_text(path, csv.str());
  out << "price: " << calls.size() << " strikes";
  if (failures > 0) out << " (" << failures << " implied vol inversions failed)";
  out << " -> " << path.string() << '\n';
  return kExitOk;
}

int cmd_synth(const RunConfig& c, const OutputStamp& stamp, std::ostream& out) {
  PowerLawParams p = c.law;
  p.alpha = c.alpha;
  require(check_power_law(p), "power-law exponents violate the existence bounds");
  SurfaceSpec spec = c.surface;
  spec.spot = c.spot > 0.0 ? c.spot : spec.spot;
  const auto surface = power_law_surface(p, spec);
  const auto dir = output_dir(c);
  {
    std::ostringstream csv;
    csv << stamp.csv_line() << '\n';
    write_chain(csv, surface.quotes);
    write_text(dir / "chain.csv", csv.str());
  }
  {
    std::ostringstream csv;
    csv << stamp.csv_line() << '\n';
    write_curve(csv, surface.curve);
    write_text(dir / "curve.csv", csv.str());
  }
  out << "synth: " << surface.quotes.size() << " quotes on " << spec.expiries.size()
      << " expiries -> " << dir.string() << '\n';
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig c;
  CLI::App app{"Additive normal tempered stable models: forwards, calibration, scaling, pricing",
               "ats"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.set_config("--config", "", "Flat key = value file; command-line flags take precedence");
  app.fallthrough();
  app.require_subcommand(1);

  app.add_option("--chain", c.chain, "Option chain CSV (expiry_yf,strike,side,bid,ask)");
  app.add_option("--curve", c.curve, "Discount curve CSV (tenor_yf,discount_factor)");
  app.add_option("--calibration", c.calibration, "Calibration JSON for the scaling command");
  app.add_option("--spot", c.spot, "Spot price; anchors the first synthetic forward");
  app.add_option("--alpha", c.alpha, "Stability index in [0, 1)")->capture_default_str();
  app.add_option("--family", c.family, "LTS, SATO or ATS")->capture_default_str();
  app.add_option("--out", c.out, "Output directory")->capture_default_str();
  app.add_option("--seed", c.optimizer.seed, "Seed of the evolutionary stage")->capture_default_str();
  app.add_option("--max-iterations", c.optimizer.max_iterations, "Simplex iterations per run")
      ->capture_default_str();
  app.add_option("--tolerance", c.optimizer.tolerance, "Objective spread tolerance")
      ->capture_default_str();
  app.add_option("--xtol", c.optimizer.xtol, "Simplex diameter tolerance")->capture_default_str();
  app.add_option("--population", c.optimizer.population, "Differential evolution population")
      ->capture_default_str();
  app.add_option("--generations", c.optimizer.generations, "Differential evolution generations")
      ->capture_default_str();
  app.add_option("--restarts", c.optimizer.restarts, "Polishing restarts")->capture_default_str();

  app.add_option("--sigma", c.sigma, "price: sigma_T")->capture_default_str();
  app.add_option("--k", c.k, "price: k_T")->capture_default_str();
  app.add_option("--eta", c.eta, "price: eta_T")->capture_default_str();
  app.add_option("--expiry", c.expiry, "price: maturity in years")->capture_default_str();
  app.add_option("--forward", c.forward, "price: forward F0")->capture_default_str();
  app.add_option("--discount", c.discount, "price: discount factor B_T")->capture_default_str();
  app.add_option("--strikes", c.strikes, "price: comma-separated strikes")->delimiter(',');

  app.add_option("--sigma-bar", c.law.sigma_bar, "synth: sigma_bar")->capture_default_str();
  app.add_option("--k-bar", c.law.k_bar, "synth: k_bar")->capture_default_str();
  app.add_option("--eta-bar", c.law.eta_bar, "synth: eta_bar")->capture_default_str();
  app.add_option("--beta", c.law.beta, "synth: k scaling exponent")->capture_default_str();
  app.add_option("--delta", c.law.delta, "synth: eta scaling exponent")->capture_default_str();
  app.add_option("--expiries", c.surface.expiries, "synth: comma-separated expiries")
      ->delimiter(',');
  app.add_option("--rate", c.surface.rate, "synth: flat continuous rate")->capture_default_str();
  app.add_option("--dividend", c.surface.dividend, "synth: flat dividend yield")
      ->capture_default_str();
  app.add_option("--strike-step", c.surface.strike_step, "synth: strike grid step")
      ->capture_default_str();

  auto* forwards = app.add_subcommand("forwards", "Filter quotes and build synthetic forwards");
  auto* calibrate = app.add_subcommand("calibrate", "Calibrate LTS, SATO or ATS");
  auto* scaling = app.add_subcommand("scaling", "Theta-time scaling laws and hypothesis tests");
  auto* price = app.add_subcommand("price", "Lewis prices and implied volatilities of one slice");
  auto* synth = app.add_subcommand("synth", "Generate a power-law ATS option chain and curve");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::FileError& e) {
    err << "error: " << e.what() << '\n';
    return kExitMissingFile;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalidConfig;
  }

  try {
    validate_common(c);
    std::string command;
    for (auto* sub : {forwards, calibrate, scaling, price, synth}) {
      if (sub->parsed()) command = sub->get_name();
    }
    OutputStamp stamp{hex64(fnv1a(canonical(command, c)))};
    if (forwards->parsed()) return cmd_forwards(c, stamp, out, err);
    if (calibrate->parsed()) return cmd_calibrate(c, stamp, out, err);
    if (scaling->parsed()) return cmd_scaling(c, stamp, out, err);
    if (price->parsed()) return cmd_price(c, stamp, out);
    if (synth->parsed()) return cmd_synth(c, stamp, out);
    return kExitInvalidConfig;
  } catch (const EmptyInputError& e) {
    err << "error: " << e.what() << '\n';
    return kExitEmptyInput;
  } catch (const MissingFileError& e) {
    err << "error: " << e.what() << '\n';
    return kExitMissingFile;
  } catch (const InsufficientDataError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInsufficientData;
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalidConfig;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalidConfig;
  } catch (const std::domain_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalidConfig;
  } catch (const std::out_of_range& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalidConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace ats
