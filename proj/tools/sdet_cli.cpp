// sdet_cli: run experiments from flags or a JSON config.
//
//   sdet_cli run finite-bv --seeds 100
//   sdet_cli run circle-torsion --theta pi --radii 0.5,1,2
//   sdet_cli run --config exp.json --report out.json
//   sdet_cli ruelle cat --matrix 2,1,1,1 --alpha pi --lambda-grid 1.2:3:0.1
//   sdet_cli ruelle subshift --transitions "1,1;1,0" --alpha pi/2
//   sdet_cli heat parametrix --potential sin --N 4 --report out.json
//   sdet_cli cache-key --config exp.json
//   sdet_cli torsion circle --theta pi --radius 2
//   sdet_cli torsion cw --file lens.json --theta 2pi/5
//   sdet_cli hodge anomaly --complex c.json --family g.json --grid 0:1:0.25
//   sdet_cli zeta eval --spectrum s.json --s 0.5 --lambda 0
//
// Exit codes: 0 all verdicts pass, 1 failed or partial report, 2 usage error (nothing written).

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "sdet/complex_io.hpp"
#include "sdet/hodge.hpp"
#include "sdet/mellin.hpp"
#include "sdet/runner.hpp"
#include "sdet/twisted.hpp"

namespace {

using sdet::json;

struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

double to_number(const std::string& s, const std::string& flag) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::logic_error&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw UsageError(flag + ": '" + s + "' is not a number");
  return v;
}

json number_list(const std::string& s, const std::string& flag) {
  json out = json::array();
  for (const auto& item : split(s, ',')) out.push_back(to_number(item, flag));
  return out;
}

json int_list(const std::string& s, const std::string& flag) {
  json out = json::array();
  for (const auto& item : split(s, ',')) {
    const double v = to_number(item, flag);
    if (v != std::floor(v)) throw UsageError(flag + ": '" + item + "' is not an integer");
    out.push_back(static_cast<long>(v));
  }
  return out;
}

// "a,b;c,d" -> [[a,b],[c,d]]
json rows_of(const std::string& s, const std::string& flag, bool integers) {
  json out = json::array();
  for (const auto& row : split(s, ';')) out.push_back(integers ? int_list(row, flag) : number_list(row, flag));
  return out;
}

// a flag value that is a JSON literal when it parses, a plain string otherwise
json loose_value(const std::string& s) {
  try {
    return json::parse(s);
  } catch (const json::parse_error&) {
    return s;
  }
}

json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("--config: cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw UsageError("--config: '" + path + "' is not valid JSON: " + e.what());
  }
}

struct Common {
  std::string config_path, report_path, csv_path;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> sets;
  bool no_cache = false, timing = false;
  int jobs = 0;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "JSON config file");
    app->add_option("--seed", seed, "64-bit seed");
    app->add_option("--set", sets, "parameter override key=value (value read as JSON when possible)");
    app->add_option("--report", report_path, "write the JSON report here (CSV next to it)");
    app->add_option("--csv", csv_path, "CSV table path");
    app->add_flag("--no-cache", no_cache, "ignore SDET_CACHE_DIR");
    app->add_option("--jobs", jobs, "worker threads")->check(CLI::NonNegativeNumber);
    app->add_flag("--timing", timing, "include wall-clock time in the report");
  }
};

// Merge file config, experiment id and flag parameters.
json build_config(const Common& c, const std::string& experiment, const json& flag_params) {
  json cfg = c.config_path.empty() ? json::object() : load_config(c.config_path);
  if (!cfg.is_object()) throw UsageError("--config: top level must be an object");
  if (!experiment.empty()) {
    if (cfg.contains("experiment") && cfg["experiment"] != experiment)
      throw UsageError("experiment '" + experiment + "' conflicts with config experiment " + cfg["experiment"].dump());
    cfg["experiment"] = experiment;
  }
  if (c.seed) cfg["seed"] = *c.seed;
  if (!cfg.contains("parameters")) cfg["parameters"] = json::object();
  if (!cfg["parameters"].is_object()) throw sdet::ConfigError("config.parameters", "expected an object");
  for (const auto& [k, v] : flag_params.items()) cfg["parameters"][k] = v;
  for (const auto& s : c.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError("--set expects key=value, got '" + s + "'");
    cfg["parameters"][s.substr(0, eq)] = loose_value(s.substr(eq + 1));
  }
  return cfg;
}

std::string default_output(const Common& c, const json& cfg) {
  if (!c.report_path.empty()) return c.report_path;
  if (cfg.contains("output") && cfg["output"].is_string()) return cfg["output"].get<std::string>();
  return {};
}

int execute(const Common& c, const json& cfg) {
  sdet::RunOptions opts;
  opts.use_cache = !c.no_cache;
  opts.cache_dir = sdet::cache_dir_from_env();
  opts.jobs = c.jobs;
  opts.include_timing = c.timing;
  const std::string output = default_output(c, cfg);
  const sdet::RunOutcome out = sdet::run(cfg, opts);
  if (output.empty()) {
    std::cout << out.report_text << '\n';
  } else {
    sdet::write_file_atomic(output, out.report_text + "\n");
    std::string csv = c.csv_path;
    if (csv.empty()) csv = std::filesystem::path(output).replace_extension(".csv").string();
    sdet::write_file_atomic(csv, out.report.to_csv());
    for (const auto& v : out.report.verdicts)
      std::cout << (v.pass ? "PASS " : "FAIL ") << v.name << " value=" << v.value << " tolerance=" << v.tolerance
                << '\n';
    std::cout << "cache_key " << out.key << (out.cache_hit ? " (cached)" : "") << '\n';
    std::cout << "report " << output << '\n';
  }
  if (out.report.partial) std::cerr << "partial report: " << out.report.failure << '\n';
  return out.exit_code;
}

// Report for commands that bypass the runner (no config, no cache).
int emit(const sdet::ExperimentReport& rep, const std::string& output) {
  const std::string text = sdet::canonical_dump(rep.to_json(false), 2);
  if (output.empty()) {
    std::cout << text << '\n';
  } else {
    sdet::write_file_atomic(output, text + "\n");
    sdet::write_file_atomic(std::filesystem::path(output).replace_extension(".csv").string(), rep.to_csv());
    for (const auto& v : rep.verdicts)
      std::cout << (v.pass ? "PASS " : "FAIL ") << v.name << " value=" << v.value << " tolerance=" << v.tolerance
                << '\n';
  }
  if (rep.partial) std::cerr << "partial report: " << rep.failure << '\n';
  return rep.all_pass() ? 0 : 1;
}

// Input files are part of the usage: unreadable or malformed ones exit 2.
json input_file(const std::string& path, const std::string& flag) {
  try {
    return sdet::load_json_file(path);
  } catch (const std::exception& e) {
    throw UsageError(flag + ": " + e.what());
  }
}

// Decoding errors in an input file are usage errors too.
template <class F>
auto decode(const std::string& flag, F&& f) {
  try {
    return f();
  } catch (const UsageError&) {
    throw;
  } catch (const std::exception& e) {
    throw UsageError(flag + ": " + e.what());
  }
}

double angle_arg(const std::string& s, const std::string& flag) {
  try {
    return sdet::parse_angle(s);
  } catch (const std::invalid_argument& e) {
    throw UsageError(flag + ": " + e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"superdeterminant experiments"};
  app.require_subcommand(1);

  Common run_c, cat_c, sub_c, heat_c, key_c;
  json flag_params = json::object();
  std::string experiment;

  auto* run = app.add_subcommand("run", "run an experiment");
  run->add_option("experiment", experiment, "experiment id");
  run_c.attach(run);
  std::string seeds, families, theta, thetas, radii;
  run->add_option("--seeds", seeds, "finite-bv: number of random complexes");
  run->add_option("--families", families, "hodge-anomaly or subshift-zeta: number of families");
  run->add_option("--theta", theta, "circle-torsion: holonomy angle, e.g. pi or 2pi/3");
  run->add_option("--thetas", thetas, "circle-torsion: comma-separated angles");
  run->add_option("--radii", radii, "circle-torsion: comma-separated radii");

  auto* ruelle = app.add_subcommand("ruelle", "Ruelle zeta experiments");
  ruelle->require_subcommand(1);
  auto* cat = ruelle->add_subcommand("cat", "cat-map suspension");
  cat_c.attach(cat);
  std::string matrix, alpha_cat, grid_cat, nmax_cat, collapse_n;
  cat->add_option("--matrix", matrix, "a,b,c,d");
  cat->add_option("--alpha", alpha_cat, "holonomy angle");
  cat->add_option("--lambda-grid", grid_cat, "start:stop:step");
  cat->add_option("--n-max", nmax_cat, "orbit word length cutoff");
  cat->add_option("--collapse-n", collapse_n, "largest n for the collapse identity");
  auto* sub = ruelle->add_subcommand("subshift", "subshift suspension");
  sub_c.attach(sub);
  std::string transitions, alpha_sub, roofs, sub_families, grid_sub, nmax_sub;
  sub->add_option("--transitions,--M", transitions, "rows separated by ';', e.g. \"1,1;1,0\"");
  sub->add_option("--alpha", alpha_sub, "holonomy angle");
  std::string single_roof;
  sub->add_option("--roofs", roofs, "roof families separated by ';'");
  sub->add_option("--roof", single_roof, "one roof, comma-separated per symbol")->excludes("--roofs");
  sub->add_option("--families", sub_families, "number of generated roof families");
  sub->add_option("--lambda-grid", grid_sub, "start:stop:step");
  sub->add_option("--n-max", nmax_sub, "orbit word length cutoff");

  auto* heat = app.add_subcommand("heat", "heat kernel experiments");
  heat->require_subcommand(1);
  auto* par = heat->add_subcommand("parametrix", "parametrix on the circle");
  heat_c.attach(par);
  std::string potential, order, scheme, volterra_t, k_max;
  bool no_volterra = false;
  par->add_option("--potential", potential, "e.g. sin, \"1 + 0.5cos(2x)\"");
  par->add_option("--N", order, "parametrix order");
  par->add_option("--scheme", scheme, "principal or folded");
  par->add_flag("--no-volterra", no_volterra, "skip the Volterra correction");
  par->add_option("--volterra-t", volterra_t, "time for the Volterra check");
  par->add_option("--k-max", k_max, "Volterra terms");

  auto* torsion = app.add_subcommand("torsion", "torsion of twisted complexes");
  torsion->require_subcommand(1);
  auto* tcircle = torsion->add_subcommand("circle", "spectral torsion of the twisted circle");
  std::string tc_theta = "pi";
  double tc_radius = 1.0;
  tcircle->add_option("--theta", tc_theta, "holonomy angle");
  tcircle->add_option("--radius", tc_radius, "radius")->check(CLI::PositiveNumber);
  auto* tcw = torsion->add_subcommand("cw", "combinatorial torsion of a twisted CW complex");
  std::string cw_file, cw_theta;
  tcw->add_option("--file", cw_file, "TwistedCWData JSON")->required();
  tcw->add_option("--theta", cw_theta, "generator angles, comma-separated (one value is used for all)");

  auto* hodge = app.add_subcommand("hodge", "metric variation experiments");
  hodge->require_subcommand(1);
  auto* anomaly = hodge->add_subcommand("anomaly", "anomaly ledger along a metric family");
  std::string h_complex, h_family, h_grid = "0:1:0.25", h_report, h_map = "d";
  anomaly->add_option("--complex", h_complex, "complex JSON file")->required();
  anomaly->add_option("--map", h_map, "name of the differential in the complex file");
  anomaly->add_option("--family", h_family, "MetricFamily JSON file")->required();
  anomaly->add_option("--grid", h_grid, "tau grid start:stop:step");
  anomaly->add_option("--report", h_report, "JSON report path");

  auto* zeta = app.add_subcommand("zeta", "spectral zeta functions");
  zeta->require_subcommand(1);
  auto* zeval = zeta->add_subcommand("eval", "F(lambda, s), its s-derivative and log sdet of a spectrum");
  std::string z_file;
  double z_s = 0.0, z_lambda = 0.0;
  zeval->add_option("--spectrum", z_file, "spectrum JSON file")->required();
  zeval->add_option("--s", z_s, "real s");
  zeval->add_option("--lambda", z_lambda, "real shift lambda");

  auto* key = app.add_subcommand("cache-key", "print the cache key of a config");
  std::string key_experiment;
  key->add_option("experiment", key_experiment, "experiment id");
  key_c.attach(key);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    auto put = [&](const char* name, const std::string& v, json value) {
      if (!v.empty()) flag_params[name] = std::move(value);
    };
    auto integer = [](const std::string& v, const std::string& flag) {
      const json l = int_list(v, flag);
      if (l.size() != 1) throw UsageError(flag + ": expected one integer");
      return l[0];
    };
    if (*run) {
      put("seeds", seeds, seeds.empty() ? json() : integer(seeds, "--seeds"));
      put("families", families, families.empty() ? json() : integer(families, "--families"));
      put("theta", theta, theta);
      put("thetas", thetas, thetas.empty() ? json() : json(split(thetas, ',')));
      put("radii", radii, radii.empty() ? json() : number_list(radii, "--radii"));
      if (experiment.empty() && run_c.config_path.empty()) throw UsageError("run: give an experiment or --config");
      return execute(run_c, build_config(run_c, experiment, flag_params));
    }
    if (*cat) {
      put("matrix", matrix, matrix.empty() ? json() : int_list(matrix, "--matrix"));
      put("alpha", alpha_cat, alpha_cat);
      put("lambda_grid", grid_cat, grid_cat);
      put("n_max", nmax_cat, nmax_cat.empty() ? json() : integer(nmax_cat, "--n-max"));
      put("collapse_n", collapse_n, collapse_n.empty() ? json() : integer(collapse_n, "--collapse-n"));
      return execute(cat_c, build_config(cat_c, "ruelle-cat", flag_params));
    }
    if (*sub) {
      put("transitions", transitions, transitions.empty() ? json() : rows_of(transitions, "--transitions", true));
      put("alpha", alpha_sub, alpha_sub);
      put("roofs", roofs, roofs.empty() ? json() : rows_of(roofs, "--roofs", false));
      put("roofs", single_roof, single_roof.empty() ? json() : json::array({number_list(single_roof, "--roof")}));
      put("families", sub_families, sub_families.empty() ? json() : integer(sub_families, "--families"));
      put("lambda_grid", grid_sub, grid_sub);
      put("n_max", nmax_sub, nmax_sub.empty() ? json() : integer(nmax_sub, "--n-max"));
      return execute(sub_c, build_config(sub_c, "subshift-zeta", flag_params));
    }
    if (*par) {
      put("potential", potential, potential);
      put("N", order, order.empty() ? json() : integer(order, "--N"));
      put("scheme", scheme, scheme);
      if (no_volterra) flag_params["volterra"] = false;
      put("volterra_t", volterra_t, volterra_t.empty() ? json() : json(to_number(volterra_t, "--volterra-t")));
      put("k_max", k_max, k_max.empty() ? json() : integer(k_max, "--k-max"));
      return execute(heat_c, build_config(heat_c, "heat-parametrix", flag_params));
    }
    if (*tcircle) {
      const double th = angle_arg(tc_theta, "--theta");
      const double tors = sdet::circle_torsion(th, tc_radius);
      std::cout << sdet::canonical_dump({{"theta", th},
                                         {"radius", tc_radius},
                                         {"torsion", tors},
                                         {"closed_form", 2.0 * std::abs(std::sin(th / 2.0))}},
                                        2)
                << '\n';
      return 0;
    }
    if (*tcw) {
      sdet::TwistedCWData data =
          decode("--file", [&] { return sdet::twisted_cw_from_json(input_file(cw_file, "--file")); });
      if (!cw_theta.empty()) {
        std::vector<double> angles;
        for (const auto& a : split(cw_theta, ',')) angles.push_back(angle_arg(a, "--theta"));
        if (angles.size() == 1) angles.assign(static_cast<std::size_t>(data.generators), angles[0]);
        if (static_cast<int>(angles.size()) != data.generators)
          throw UsageError("--theta: need one angle per generator (" + std::to_string(data.generators) + ")");
        data.set_angles(angles);
      }
      const sdet::TorsionResult r = sdet::combinatorial_torsion_detail(sdet::build_twisted_cochain(data));
      std::cout << sdet::canonical_dump(
                       {{"torsion", r.torsion}, {"sdet", sdet::complex_to_json(r.sdet)}, {"ranks", r.ranks}}, 2)
                << '\n';
      return 0;
    }
    if (*anomaly) {
      const std::vector<double> grid = decode("--grid", [&] { return sdet::parse_grid(h_grid); });
      const sdet::ComplexFile cf =
          decode("--complex", [&] { return sdet::complex_file_from_json(input_file(h_complex, "--complex")); });
      const sdet::MetricFamily fam =
          decode("--family", [&] { return sdet::MetricFamily::from_json(input_file(h_family, "--family")); });
      const sdet::GradedMap& d = *decode("--map", [&] { return &cf.map(h_map); });
      sdet::ExperimentReport rep = sdet::torsion_anomaly_experiment(d, fam, grid);
      rep.config = {{"complex", h_complex}, {"family", h_family}, {"grid", grid}, {"map", h_map}};
      return emit(rep, h_report);
    }
    if (*zeval) {
      const sdet::SpectrumByDegree spec =
          decode("--spectrum", [&] { return sdet::spectrum_from_json(input_file(z_file, "--spectrum")); });
      const sdet::Dual f = sdet::F_closed_form(spec, z_lambda, z_s);
      json out = {{"s", z_s}, {"lambda", z_lambda}, {"F", sdet::complex_to_json(f.v)},
                  {"dF_ds", sdet::complex_to_json(f.d)}};
      if (z_lambda == 0.0) out["log_sdet"] = sdet::complex_to_json(sdet::log_sdet_via_zeta(spec));
      std::cout << sdet::canonical_dump(out, 2) << '\n';
      return 0;
    }
    if (*key) {
      std::cout << sdet::cache_key(sdet::resolve_config(build_config(key_c, key_experiment, flag_params))) << '\n';
      return 0;
    }
  } catch (const sdet::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
