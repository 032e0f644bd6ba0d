// cmlrand: coupled-map-lattice random bit generator and analysis tool.
//
// Subcommands: gen, le, bifurcation, hist, test, bench, rerun. Every command
// writes a .manifest.json sidecar holding the fully resolved parameter set;
// `rerun <manifest>` re-executes it and reproduces the data files byte for
// byte.
//
// Exit codes: 0 success, 1 validation error, 2 runtime failure (independence
// retry exhaustion, degenerate orbit), 3 I/O failure.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <cml/errors.hpp>
#include <cml/extractor.hpp>
#include <cml/lattice.hpp>
#include <cml/local_map.hpp>
#include <cml/lyapunov.hpp>
#include <cml/seeding.hpp>
#include <cml/stats.hpp>
#include <cml/version.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::ofstream open_out(const std::string& path, bool binary = false) {
  std::ofstream os(path, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
  if (!os) throw io_error("cannot open '" + path + "' for writing");
  return os;
}

cml::map_kind parse_map(const std::string& name) {
  if (name == "logistic") return cml::map_kind::logistic;
  if (name == "tent") return cml::map_kind::tent;
  if (name == "plm") return cml::map_kind::plm;
  throw cml::domain_error("unknown map '" + name + "'");
}

// mu = 0 means "the map's fully chaotic default".
double resolve_mu(cml::map_kind kind, double mu) {
  if (mu != 0.0) return mu;
  return kind == cml::map_kind::tent ? 2.0 : 4.0;
}

cml::local_map make_map(const std::string& name, double mu, std::size_t segments) {
  cml::local_map m;
  m.kind = parse_map(name);
  m.mu = resolve_mu(m.kind, mu);
  m.segments = segments;
  m.validate();
  return m;
}

double seeded_x0(std::uint64_t seed) {
  cml::splitmix64 sm(seed);
  double x = cml::u01(sm.next());
  if (x < cml::detail::float_min_state) x = cml::detail::float_min_state;
  if (x > cml::detail::float_max_state) x = cml::detail::float_max_state;
  return x;
}

void write_manifest(const std::string& out_path, const std::string& command, const json& params,
                    double duration_ms) {
  json m;
  m["command"] = command;
  m["version"] = cml::version;
  m["duration_ms"] = duration_ms;
  m["params"] = params;
  std::ofstream os = open_out(out_path + ".manifest.json");
  os << m.dump(2) << "\n";
  if (!os) throw io_error("failed writing manifest for '" + out_path + "'");
}

class stopwatch {
 public:
  double ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

// ---------------------------------------------------------------------------
// gen

struct gen_params {
  std::string map = "logistic";
  double mu = 0.0;
  std::size_t segments = 64;
  std::size_t rows = 8, cols = 8;
  double epsilon = 0.1;
  int z = 64;
  std::uint64_t bits = 1000000;
  std::uint64_t seed_a = cml::default_seed;
  std::uint64_t seed_b = cml::default_seed + 1;
  std::optional<double> perturb;
  std::string format = "ascii";
  std::string out;  // empty: bits.txt / bits.bin by format
  std::uint64_t k_window = 1000;
  double alpha = 0.05;
  std::uint64_t max_windows = 16;
  std::uint64_t retest_interval = 0;
  std::size_t tap_au = 1, tap_av = 1, tap_bu = 1, tap_bv = 1;
};

json to_json(const gen_params& p) {
  json j;
  j["map"] = p.map;
  j["mu"] = p.mu;
  j["segments"] = p.segments;
  j["rows"] = p.rows;
  j["cols"] = p.cols;
  j["epsilon"] = p.epsilon;
  j["z"] = p.z;
  j["bits"] = p.bits;
  j["seed_a"] = p.seed_a;
  j["seed_b"] = p.seed_b;
  j["perturb"] = p.perturb ? json(*p.perturb) : json(nullptr);
  j["format"] = p.format;
  j["out"] = p.out;
  j["k_window"] = p.k_window;
  j["alpha"] = p.alpha;
  j["max_windows"] = p.max_windows;
  j["retest_interval"] = p.retest_interval;
  j["tap_a"] = {p.tap_au, p.tap_av};
  j["tap_b"] = {p.tap_bu, p.tap_bv};
  return j;
}

gen_params gen_from_json(const json& j) {
  gen_params p;
  p.map = j.at("map");
  p.mu = j.at("mu");
  p.segments = j.at("segments");
  p.rows = j.at("rows");
  p.cols = j.at("cols");
  p.epsilon = j.at("epsilon");
  p.z = j.at("z");
  p.bits = j.at("bits");
  p.seed_a = j.at("seed_a");
  p.seed_b = j.at("seed_b");
  if (!j.at("perturb").is_null()) p.perturb = j.at("perturb").get<double>();
  p.format = j.at("format");
  p.out = j.at("out");
  p.k_window = j.at("k_window");
  p.alpha = j.at("alpha");
  p.max_windows = j.at("max_windows");
  p.retest_interval = j.at("retest_interval");
  p.tap_au = j.at("tap_a")[0];
  p.tap_av = j.at("tap_a")[1];
  p.tap_bu = j.at("tap_b")[0];
  p.tap_bv = j.at("tap_b")[1];
  return p;
}

cml::pair_config make_pair_config(const std::string& map, double mu, std::size_t segments,
                                  std::size_t rows, std::size_t cols, double epsilon, int z,
                                  std::uint64_t seed_a, std::uint64_t seed_b,
                                  const std::optional<double>& perturb, std::uint64_t k_window,
                                  double alpha, std::uint64_t max_windows,
                                  std::uint64_t retest_interval, cml::node_index tap_a,
                                  cml::node_index tap_b) {
  cml::pair_config pc;
  pc.a.rows = rows;
  pc.a.cols = cols;
  pc.a.epsilon = epsilon;
  pc.a.map = make_map(map, mu, segments);
  pc.a.arithmetic = cml::arithmetic_kind::fixed;
  pc.a.z = z;
  pc.a.validate();
  pc.b = pc.a;
  pc.seed_a = seed_a;
  pc.seed_b = seed_b;
  pc.perturb_delta = perturb;
  pc.opts.z = z;
  pc.opts.k_window = k_window;
  pc.opts.alpha = alpha;
  pc.opts.max_windows = max_windows;
  pc.opts.retest_interval_bits = retest_interval;
  pc.opts.tap_a = tap_a;
  pc.opts.tap_b = tap_b;
  return pc;
}

int run_gen(gen_params p) {
  if (p.format != "ascii" && p.format != "raw")
    throw cml::domain_error("--format must be 'ascii' or 'raw'");
  if (p.bits == 0) throw cml::domain_error("--bits must be positive");
  if (p.out.empty()) p.out = p.format == "ascii" ? "bits.txt" : "bits.bin";

  stopwatch sw;
  cml::pair_config pc = make_pair_config(
      p.map, p.mu, p.segments, p.rows, p.cols, p.epsilon, p.z, p.seed_a, p.seed_b, p.perturb,
      p.k_window, p.alpha, p.max_windows, p.retest_interval, {p.tap_au, p.tap_av},
      {p.tap_bu, p.tap_bv});
  cml::instance_pair pair(pc);
  cml::bit_stream bits = pair.extract(p.bits);

  if (p.format == "ascii") {
    std::ofstream os = open_out(p.out);
    os << bits.to_ascii();
    if (!os) throw io_error("failed writing '" + p.out + "'");
  } else {
    std::ofstream os = open_out(p.out, true);
    const auto& bytes = bits.bytes();
    os.write(reinterpret_cast<const char*>(bytes.data()),
             static_cast<std::streamsize>(bytes.size()));
    if (!os) throw io_error("failed writing '" + p.out + "'");
  }
  {
    std::ofstream os = open_out(p.out + ".origin");
    os << bits.origin.to_key_value();
    if (!os) throw io_error("failed writing '" + p.out + ".origin'");
  }
  write_manifest(p.out, "gen", to_json(p), sw.ms());
  std::cout << "wrote " << p.bits << " bits to " << p.out << " (gate windows: "
            << pair.windows_used() << ", k_xy: " << pair.last_k_xy() << ")\n";
  return 0;
}

// ---------------------------------------------------------------------------
// le

struct le_params {
  std::string map = "logistic";
  double mu = 0.0;
  std::size_t segments = 64;
  std::size_t rows = 8, cols = 8;
  double epsilon = 0.1;
  bool numeric = false;
  std::uint64_t iters = 100000;
  std::uint64_t discard = 1000;
  std::size_t exponents = 0;  // 0: all rows*cols
  std::uint64_t seed = cml::default_seed;
  std::string out = "le.csv";
};

json to_json(const le_params& p) {
  json j;
  j["map"] = p.map;
  j["mu"] = p.mu;
  j["segments"] = p.segments;
  j["rows"] = p.rows;
  j["cols"] = p.cols;
  j["epsilon"] = p.epsilon;
  j["numeric"] = p.numeric;
  j["iters"] = p.iters;
  j["discard"] = p.discard;
  j["exponents"] = p.exponents;
  j["seed"] = p.seed;
  j["out"] = p.out;
  return j;
}

le_params le_from_json(const json& j) {
  le_params p;
  p.map = j.at("map");
  p.mu = j.at("mu");
  p.segments = j.at("segments");
  p.rows = j.at("rows");
  p.cols = j.at("cols");
  p.epsilon = j.at("epsilon");
  p.numeric = j.at("numeric");
  p.iters = j.at("iters");
  p.discard = j.at("discard");
  p.exponents = j.at("exponents");
  p.seed = j.at("seed");
  p.out = j.at("out");
  return p;
}

std::string numeric_csv_path(const std::string& out) {
  fs::path base(out);
  fs::path dir = base.parent_path();
  return (dir / (base.stem().string() + "_numeric" + base.extension().string())).string();
}

int run_le(le_params p) {
  stopwatch sw;
  cml::lattice_config cfg;
  cfg.rows = p.rows;
  cfg.cols = p.cols;
  cfg.epsilon = p.epsilon;
  cfg.map = make_map(p.map, p.mu, p.segments);
  cfg.validate();

  const double le_f = cml::local_le(cfg.map, seeded_x0(p.seed), 1000000, 1000);
  cml::le_spectrum_result spec = cml::le_spectrum(le_f, cfg.epsilon, cfg.rows, cfg.cols);
  {
    std::ofstream os = open_out(p.out);
    os.precision(17);
    os << "r,l,lambda,le\n";
    for (const cml::le_entry& e : spec.entries)
      os << e.r << "," << e.l << "," << e.lambda_modulus << "," << e.le << "\n";
    if (!os) throw io_error("failed writing '" + p.out + "'");
  }
  std::cout << "le_f = " << le_f << ", max analytic le = " << spec.entries.front().le << "\n";

  if (p.numeric) {
    const std::size_t n_exp = p.exponents == 0 ? p.rows * p.cols : p.exponents;
    std::vector<double> wolf = cml::wolf_le(cfg, p.iters, p.discard, n_exp, p.seed);
    const std::string npath = numeric_csv_path(p.out);
    std::ofstream os = open_out(npath);
    os.precision(17);
    os << "rank,le_numeric\n";
    for (std::size_t i = 0; i < wolf.size(); ++i) os << i + 1 << "," << wolf[i] << "\n";
    if (!os) throw io_error("failed writing '" + npath + "'");
    double max_dev = 0.0;
    for (std::size_t i = 0; i < wolf.size() && i < spec.entries.size(); ++i)
      max_dev = std::max(max_dev, std::fabs(wolf[i] - spec.entries[i].le));
    std::cout << "max_abs_deviation = " << max_dev << "\n";
  }
  write_manifest(p.out, "le", to_json(p), sw.ms());
  return 0;
}

// ---------------------------------------------------------------------------
// bifurcation

struct bif_params {
  std::string map = "logistic";
  std::size_t segments = 64;
  std::size_t rows = 8, cols = 8;
  double epsilon = 0.1;
  double mu_lo = 2.5, mu_hi = 4.0;
  std::size_t steps = 300;
  std::size_t points = 100;
  std::size_t discard = 1000;
  std::size_t node_u = 1, node_v = 1;
  std::uint64_t seed = cml::default_seed;
  std::string out = "bifurcation.csv";
};

json to_json(const bif_params& p) {
  json j;
  j["map"] = p.map;
  j["segments"] = p.segments;
  j["rows"] = p.rows;
  j["cols"] = p.cols;
  j["epsilon"] = p.epsilon;
  j["mu_lo"] = p.mu_lo;
  j["mu_hi"] = p.mu_hi;
  j["steps"] = p.steps;
  j["points"] = p.points;
  j["discard"] = p.discard;
  j["node"] = {p.node_u, p.node_v};
  j["seed"] = p.seed;
  j["out"] = p.out;
  return j;
}

bif_params bif_from_json(const json& j) {
  bif_params p;
  p.map = j.at("map");
  p.segments = j.at("segments");
  p.rows = j.at("rows");
  p.cols = j.at("cols");
  p.epsilon = j.at("epsilon");
  p.mu_lo = j.at("mu_lo");
  p.mu_hi = j.at("mu_hi");
  p.steps = j.at("steps");
  p.points = j.at("points");
  p.discard = j.at("discard");
  p.node_u = j.at("node")[0];
  p.node_v = j.at("node")[1];
  p.seed = j.at("seed");
  p.out = j.at("out");
  return p;
}

int run_bifurcation(bif_params p) {
  stopwatch sw;
  cml::lattice_config cfg;
  cfg.rows = p.rows;
  cfg.cols = p.cols;
  cfg.epsilon = p.epsilon;
  cfg.map.kind = parse_map(p.map);
  cfg.map.mu = p.mu_lo;  // validated per sweep value inside the scan
  cfg.map.segments = p.segments;
  auto points = cml::bifurcation_scan(cfg, p.seed, p.mu_lo, p.mu_hi, p.steps,
                                      {p.node_u, p.node_v}, p.points, p.discard);
  std::ofstream os = open_out(p.out);
  os.precision(17);
  os << "mu,value\n";
  for (const auto& [mu, v] : points) os << mu << "," << v << "\n";
  if (!os) throw io_error("failed writing '" + p.out + "'");
  write_manifest(p.out, "bifurcation", to_json(p), sw.ms());
  std::cout << "wrote " << points.size() << " rows to " << p.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// hist

struct hist_params {
  std::string map = "logistic";
  double mu = 0.0;
  std::size_t segments = 64;
  std::size_t rows = 8, cols = 8;
  double epsilon = 0.1;
  std::size_t node_u = 1, node_v = 1;
  std::size_t points = 100000;
  std::size_t discard = 1000;
  std::size_t bins = 100;
  std::uint64_t seed = cml::default_seed;
  std::string out = "hist.csv";
};

json to_json(const hist_params& p) {
  json j;
  j["map"] = p.map;
  j["mu"] = p.mu;
  j["segments"] = p.segments;
  j["rows"] = p.rows;
  j["cols"] = p.cols;
  j["epsilon"] = p.epsilon;
  j["node"] = {p.node_u, p.node_v};
  j["points"] = p.points;
  j["discard"] = p.discard;
  j["bins"] = p.bins;
  j["seed"] = p.seed;
  j["out"] = p.out;
  return j;
}

hist_params hist_from_json(const json& j) {
  hist_params p;
  p.map = j.at("map");
  p.mu = j.at("mu");
  p.segments = j.at("segments");
  p.rows = j.at("rows");
  p.cols = j.at("cols");
  p.epsilon = j.at("epsilon");
  p.node_u = j.at("node")[0];
  p.node_v = j.at("node")[1];
  p.points = j.at("points");
  p.discard = j.at("discard");
  p.bins = j.at("bins");
  p.seed = j.at("seed");
  p.out = j.at("out");
  return p;
}

int run_hist(hist_params p) {
  stopwatch sw;
  cml::lattice_config cfg;
  cfg.rows = p.rows;
  cfg.cols = p.cols;
  cfg.epsilon = p.epsilon;
  cfg.map = make_map(p.map, p.mu, p.segments);
  cfg.validate();
  cml::lattice lat(cfg, p.seed);
  std::vector<double> orbit = lat.orbit(p.node_u, p.node_v, p.points, p.discard);
  std::vector<std::uint64_t> counts = cml::orbit_histogram(orbit, p.bins);
  std::ofstream os = open_out(p.out);
  os.precision(17);
  os << "bin_lo,bin_hi,count\n";
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double lo = static_cast<double>(i) / static_cast<double>(p.bins);
    const double hi = static_cast<double>(i + 1) / static_cast<double>(p.bins);
    os << lo << "," << hi << "," << counts[i] << "\n";
  }
  if (!os) throw io_error("failed writing '" + p.out + "'");
  write_manifest(p.out, "hist", to_json(p), sw.ms());
  std::cout << "wrote " << counts.size() << " bins to " << p.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// test

struct test_params {
  std::string map = "logistic";
  double mu = 0.0;
  std::size_t segments = 64;
  std::size_t rows = 8, cols = 8;
  double epsilon = 0.1;
  int z = 64;
  std::size_t sequences = 1000;
  std::uint64_t length = 1000000;
  double alpha = 0.01;
  std::uint64_t seed_a = cml::default_seed;
  std::uint64_t seed_b = cml::default_seed + 1;
  std::optional<double> perturb;
  std::uint64_t k_window = 1000;
  double gate_alpha = 0.05;
  std::uint64_t max_windows = 16;
  unsigned jobs = 0;  // 0: hardware concurrency
  std::string out = "report.csv";
};

json to_json(const test_params& p) {
  json j;
  j["map"] = p.map;
  j["mu"] = p.mu;
  j["segments"] = p.segments;
  j["rows"] = p.rows;
  j["cols"] = p.cols;
  j["epsilon"] = p.epsilon;
  j["z"] = p.z;
  j["sequences"] = p.sequences;
  j["length"] = p.length;
  j["alpha"] = p.alpha;
  j["seed_a"] = p.seed_a;
  j["seed_b"] = p.seed_b;
  j["perturb"] = p.perturb ? json(*p.perturb) : json(nullptr);
  j["k_window"] = p.k_window;
  j["gate_alpha"] = p.gate_alpha;
  j["max_windows"] = p.max_windows;
  j["jobs"] = p.jobs;
  j["out"] = p.out;
  return j;
}

test_params test_from_json(const json& j) {
  test_params p;
  p.map = j.at("map");
  p.mu = j.at("mu");
  p.segments = j.at("segments");
  p.rows = j.at("rows");
  p.cols = j.at("cols");
  p.epsilon = j.at("epsilon");
  p.z = j.at("z");
  p.sequences = j.at("sequences");
  p.length = j.at("length");
  p.alpha = j.at("alpha");
  p.seed_a = j.at("seed_a");
  p.seed_b = j.at("seed_b");
  if (!j.at("perturb").is_null()) p.perturb = j.at("perturb").get<double>();
  p.k_window = j.at("k_window");
  p.gate_alpha = j.at("gate_alpha");
  p.max_windows = j.at("max_windows");
  p.jobs = j.at("jobs");
  p.out = j.at("out");
  return p;
}

int run_test(test_params p) {
  if (p.sequences < 1) throw cml::domain_error("--sequences must be positive");
  if (p.length < 2) throw cml::domain_error("--length must be at least 2");
  stopwatch sw;
  cml::pair_config pc =
      make_pair_config(p.map, p.mu, p.segments, p.rows, p.cols, p.epsilon, p.z, p.seed_a,
                       p.seed_b, p.perturb, p.k_window, p.gate_alpha, p.max_windows, 0, {1, 1},
                       {1, 1});
  cml::instance_pair pair(pc);

  std::vector<cml::bit_stream> seqs;
  seqs.reserve(p.sequences);
  for (std::size_t i = 0; i < p.sequences; ++i) seqs.push_back(pair.extract(p.length));

  const std::vector<std::string> names = {"monobit", "block_frequency", "runs", "serial2"};
  // results[t][s]: sub-test t on sequence s; an empty name marks "skipped".
  std::vector<std::vector<cml::test_report>> results(
      names.size(), std::vector<cml::test_report>(p.sequences));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t s = next.fetch_add(1);
      if (s >= p.sequences) return;
      const cml::bit_stream& bits = seqs[s];
      for (std::size_t t = 0; t < names.size(); ++t) {
        try {
          if (t == 0) results[t][s] = cml::monobit_test(bits, p.alpha);
          else if (t == 1)
            results[t][s] =
                cml::block_frequency_test(bits, cml::default_block_len(bits.size()), p.alpha);
          else if (t == 2) results[t][s] = cml::runs_test(bits, p.alpha);
          else results[t][s] = cml::serial2_test(bits, p.alpha);
        } catch (const cml::domain_error&) {
          results[t][s].name.clear();
        }
      }
    }
  };
  unsigned n_jobs = p.jobs ? p.jobs : std::max(1u, std::thread::hardware_concurrency());
  n_jobs = std::min<unsigned>(n_jobs, static_cast<unsigned>(p.sequences));
  std::vector<std::thread> pool;
  for (unsigned i = 1; i < n_jobs; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  fs::path base(p.out);
  const std::string seq_path =
      (base.parent_path() / (base.stem().string() + "_sequences" + base.extension().string()))
          .string();
  {
    std::ofstream os = open_out(seq_path);
    os.precision(17);
    os << "test,statistic,p_value,pass\n";
    for (std::size_t s = 0; s < p.sequences; ++s)
      for (std::size_t t = 0; t < names.size(); ++t)
        if (!results[t][s].name.empty())
          os << results[t][s].name << "," << results[t][s].statistic << ","
             << results[t][s].p_value << "," << (results[t][s].pass ? 1 : 0) << "\n";
    if (!os) throw io_error("failed writing '" + seq_path + "'");
  }

  std::ofstream os = open_out(p.out);
  os.precision(17);
  os << "sub_test,p_value,pass_rate,p_value_T\n";
  bool all_ok = true;
  for (std::size_t t = 0; t < names.size(); ++t) {
    if (results[t][0].name.empty()) {
      std::cerr << "warning: sub-test " << names[t] << " skipped (sequence too short)\n";
      continue;
    }
    cml::two_level_report two = cml::two_level_evaluate(results[t], p.alpha, p.sequences);
    os << names[t] << "," << results[t][0].p_value << "," << two.pass_rate << ","
       << two.p_value_t << "\n";
    const bool ok = two.pass_rate >= two.pass_rate_threshold && two.uniform;
    all_ok = all_ok && ok;
    std::cout << names[t] << ": pass_rate " << two.pass_rate << " (threshold "
              << two.pass_rate_threshold << "), p_value_T " << two.p_value_t << " -> "
              << (ok ? "ok" : "NOT ok") << "\n";
  }
  if (!os) throw io_error("failed writing '" + p.out + "'");
  os.close();
  write_manifest(p.out, "test", to_json(p), sw.ms());
  std::cout << (all_ok ? "two-level evaluation passed" : "two-level evaluation FAILED") << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// bench

struct bench_params {
  std::string map = "logistic";
  double mu = 0.0;
  std::size_t segments = 64;
  std::size_t rows = 8, cols = 8;
  double epsilon = 0.1;
  int z = 64;
  std::uint64_t bytes = 1048576;
  std::uint64_t repeats = 1000;
  std::uint64_t seed_a = cml::default_seed;
  std::uint64_t seed_b = cml::default_seed + 1;
  std::string out = "bench.json";
};

json to_json(const bench_params& p) {
  json j;
  j["map"] = p.map;
  j["mu"] = p.mu;
  j["segments"] = p.segments;
  j["rows"] = p.rows;
  j["cols"] = p.cols;
  j["epsilon"] = p.epsilon;
  j["z"] = p.z;
  j["bytes"] = p.bytes;
  j["repeats"] = p.repeats;
  j["seed_a"] = p.seed_a;
  j["seed_b"] = p.seed_b;
  j["out"] = p.out;
  return j;
}

bench_params bench_from_json(const json& j) {
  bench_params p;
  p.map = j.at("map");
  p.mu = j.at("mu");
  p.segments = j.at("segments");
  p.rows = j.at("rows");
  p.cols = j.at("cols");
  p.epsilon = j.at("epsilon");
  p.z = j.at("z");
  p.bytes = j.at("bytes");
  p.repeats = j.at("repeats");
  p.seed_a = j.at("seed_a");
  p.seed_b = j.at("seed_b");
  p.out = j.at("out");
  return p;
}

int run_bench(bench_params p) {
  if (p.bytes == 0) throw cml::domain_error("--bytes must be positive");
  if (p.repeats == 0) throw cml::domain_error("--repeats must be positive");
  stopwatch sw;
  cml::pair_config pc =
      make_pair_config(p.map, p.mu, p.segments, p.rows, p.cols, p.epsilon, p.z, p.seed_a,
                       p.seed_b, std::nullopt, 1000, 0.05, 16, 0, {1, 1}, {1, 1});
  cml::instance_pair pair(pc);
  pair.extract(static_cast<std::uint64_t>(p.z));  // untimed warm-up; runs the gate

  const std::uint64_t n_bits = p.bytes * 8;
  double total = 0.0, mn = 0.0, mx = 0.0;
  for (std::uint64_t r = 0; r < p.repeats; ++r) {
    stopwatch t;
    cml::bit_stream bits = pair.extract(n_bits);
    const double ms = t.ms();
    total += ms;
    if (r == 0 || ms < mn) mn = ms;
    if (r == 0 || ms > mx) mx = ms;
  }
  const double mean = total / static_cast<double>(p.repeats);
  const double bits_per_second = static_cast<double>(n_bits) / (mean / 1000.0);

  json rep;
  rep["bytes"] = p.bytes;
  rep["repeats"] = p.repeats;
  rep["mean_ms"] = mean;
  rep["min_ms"] = mn;
  rep["max_ms"] = mx;
  rep["bits_per_second"] = bits_per_second;
  {
    std::ofstream os = open_out(p.out);
    os << rep.dump(2) << "\n";
    if (!os) throw io_error("failed writing '" + p.out + "'");
  }
  write_manifest(p.out, "bench", to_json(p), sw.ms());
  std::cout << "generated " << p.bytes << " bytes x " << p.repeats << ": mean " << mean
            << " ms, min " << mn << " ms, max " << mx << " ms, " << bits_per_second
            << " bits/second\n";
  return 0;
}

// ---------------------------------------------------------------------------
// rerun

int dispatch(const std::string& command, const json& params) {
  if (command == "gen") return run_gen(gen_from_json(params));
  if (command == "le") return run_le(le_from_json(params));
  if (command == "bifurcation") return run_bifurcation(bif_from_json(params));
  if (command == "hist") return run_hist(hist_from_json(params));
  if (command == "test") return run_test(test_from_json(params));
  if (command == "bench") return run_bench(bench_from_json(params));
  throw cml::domain_error("manifest names unknown command '" + command + "'");
}

int run_rerun(const std::string& manifest_path) {
  std::ifstream is(manifest_path);
  if (!is) throw io_error("cannot open manifest '" + manifest_path + "'");
  json m;
  try {
    is >> m;
  } catch (const json::exception& e) {
    throw cml::domain_error("malformed manifest: " + std::string(e.what()));
  }
  try {
    return dispatch(m.at("command"), m.at("params"));
  } catch (const json::exception& e) {
    throw cml::domain_error("manifest missing fields: " + std::string(e.what()));
  }
}

// ---------------------------------------------------------------------------

void add_perturb_flag(CLI::App* cmd, std::vector<double>& holder, CLI::Option*& opt) {
  opt = cmd->add_option("--perturb", holder,
                        "instance B = instance A shifted by delta per node (default 1e-3)")
            ->expected(0, 1);
}

std::optional<double> perturb_value(const CLI::Option* opt, const std::vector<double>& holder) {
  if (!opt->count()) return std::nullopt;
  // a bare --perturb parses as one empty token, which CLI11 converts to 0.0
  const auto& rs = opt->results();
  if (holder.empty() || (rs.size() == 1 && rs.front().empty())) return 1e-3;
  return holder.front();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cmlrand: chaotic coupled-map-lattice random bit generator"};
  app.require_subcommand(1);

  gen_params gp;
  std::vector<double> gen_perturb;
  CLI::Option* gen_perturb_opt = nullptr;
  auto* gen = app.add_subcommand("gen", "generate random bits from a lattice-instance pair");
  gen->add_option("--map", gp.map)->check(CLI::IsMember({"logistic", "tent", "plm"}));
  gen->add_option("--mu", gp.mu, "map parameter (0: map default)");
  gen->add_option("--segments", gp.segments, "PLM segment count");
  gen->add_option("--rows", gp.rows)->check(CLI::Range(std::size_t{1}, std::size_t{4096}));
  gen->add_option("--cols", gp.cols)->check(CLI::Range(std::size_t{1}, std::size_t{4096}));
  gen->add_option("--epsilon", gp.epsilon);
  gen->add_option("--z", gp.z, "extraction precision bits")->check(CLI::Range(1, 64));
  gen->add_option("--bits", gp.bits, "number of bits to emit");
  gen->add_option("--seed-a", gp.seed_a);
  gen->add_option("--seed-b", gp.seed_b);
  add_perturb_flag(gen, gen_perturb, gen_perturb_opt);
  gen->add_option("--format", gp.format)->check(CLI::IsMember({"ascii", "raw"}));
  gen->add_option("--out", gp.out, "output path (default bits.txt / bits.bin)");
  gen->add_option("--k-window", gp.k_window, "independence test window length");
  gen->add_option("--alpha", gp.alpha, "independence test significance");
  gen->add_option("--max-windows", gp.max_windows, "gate retry budget");
  gen->add_option("--retest-interval", gp.retest_interval, "re-gate after this many bits (0: once)");
  gen->add_option("--tap-au", gp.tap_au);
  gen->add_option("--tap-av", gp.tap_av);
  gen->add_option("--tap-bu", gp.tap_bu);
  gen->add_option("--tap-bv", gp.tap_bv);

  le_params lp;
  auto* le = app.add_subcommand("le", "analytic Lyapunov spectrum, optional numeric cross-check");
  le->add_option("--map", lp.map)->check(CLI::IsMember({"logistic", "tent", "plm"}));
  le->add_option("--mu", lp.mu, "map parameter (0: map default)");
  le->add_option("--segments", lp.segments);
  le->add_option("--rows", lp.rows)->check(CLI::Range(std::size_t{1}, std::size_t{64}));
  le->add_option("--cols", lp.cols)->check(CLI::Range(std::size_t{1}, std::size_t{64}));
  le->add_option("--epsilon", lp.epsilon);
  le->add_flag("--numeric", lp.numeric, "append Wolf-method estimates");
  le->add_option("--iters", lp.iters, "Wolf iterations");
  le->add_option("--discard", lp.discard);
  le->add_option("--exponents", lp.exponents, "number of exponents to track (0: all)");
  le->add_option("--seed", lp.seed);
  le->add_option("--out", lp.out);

  bif_params bp;
  auto* bif = app.add_subcommand("bifurcation", "parameter sweep of one node's attractor");
  bif->add_option("--map", bp.map)->check(CLI::IsMember({"logistic", "tent", "plm"}));
  bif->add_option("--segments", bp.segments);
  bif->add_option("--rows", bp.rows);
  bif->add_option("--cols", bp.cols);
  bif->add_option("--epsilon", bp.epsilon);
  bif->add_option("--mu-lo", bp.mu_lo);
  bif->add_option("--mu-hi", bp.mu_hi);
  bif->add_option("--steps", bp.steps, "number of mu values");
  bif->add_option("--points", bp.points, "points recorded per mu");
  bif->add_option("--discard", bp.discard);
  bif->add_option("--node-u", bp.node_u);
  bif->add_option("--node-v", bp.node_v);
  bif->add_option("--seed", bp.seed);
  bif->add_option("--out", bp.out);

  hist_params hp;
  auto* hist = app.add_subcommand("hist", "orbit distribution histogram of one node");
  hist->add_option("--map", hp.map)->check(CLI::IsMember({"logistic", "tent", "plm"}));
  hist->add_option("--mu", hp.mu, "map parameter (0: map default)");
  hist->add_option("--segments", hp.segments);
  hist->add_option("--rows", hp.rows);
  hist->add_option("--cols", hp.cols);
  hist->add_option("--epsilon", hp.epsilon);
  hist->add_option("--node-u", hp.node_u);
  hist->add_option("--node-v", hp.node_v);
  hist->add_option("--points", hp.points);
  hist->add_option("--discard", hp.discard);
  hist->add_option("--bins", hp.bins);
  hist->add_option("--seed", hp.seed);
  hist->add_option("--out", hp.out);

  test_params tp;
  std::vector<double> test_perturb;
  CLI::Option* test_perturb_opt = nullptr;
  auto* test = app.add_subcommand("test", "two-level statistical testing of generated sequences");
  test->add_option("--map", tp.map)->check(CLI::IsMember({"logistic", "tent", "plm"}));
  test->add_option("--mu", tp.mu, "map parameter (0: map default)");
  test->add_option("--segments", tp.segments);
  test->add_option("--rows", tp.rows);
  test->add_option("--cols", tp.cols);
  test->add_option("--epsilon", tp.epsilon);
  test->add_option("--z", tp.z)->check(CLI::Range(1, 64));
  test->add_option("--sequences", tp.sequences);
  test->add_option("--length", tp.length, "bits per sequence");
  test->add_option("--alpha", tp.alpha, "per-test significance level");
  test->add_option("--seed-a", tp.seed_a);
  test->add_option("--seed-b", tp.seed_b);
  add_perturb_flag(test, test_perturb, test_perturb_opt);
  test->add_option("--k-window", tp.k_window);
  test->add_option("--gate-alpha", tp.gate_alpha);
  test->add_option("--max-windows", tp.max_windows);
  test->add_option("--jobs", tp.jobs, "evaluation threads (0: auto)");
  test->add_option("--out", tp.out);

  bench_params ep;
  auto* bench = app.add_subcommand("bench", "generation throughput measurement");
  bench->add_option("--map", ep.map)->check(CLI::IsMember({"logistic", "tent", "plm"}));
  bench->add_option("--mu", ep.mu, "map parameter (0: map default)");
  bench->add_option("--segments", ep.segments);
  bench->add_option("--rows", ep.rows);
  bench->add_option("--cols", ep.cols);
  bench->add_option("--epsilon", ep.epsilon);
  bench->add_option("--z", ep.z)->check(CLI::Range(1, 64));
  bench->add_option("--bytes", ep.bytes, "bytes generated per repeat");
  bench->add_option("--repeats", ep.repeats);
  bench->add_option("--seed-a", ep.seed_a);
  bench->add_option("--seed-b", ep.seed_b);
  bench->add_option("--out", ep.out);

  std::string manifest_path;
  auto* rerun = app.add_subcommand("rerun", "re-execute a command from its manifest");
  rerun->add_option("manifest", manifest_path, "path to a .manifest.json file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) {
      gp.perturb = perturb_value(gen_perturb_opt, gen_perturb);
      return run_gen(gp);
    }
    if (le->parsed()) return run_le(lp);
    if (bif->parsed()) return run_bifurcation(bp);
    if (hist->parsed()) return run_hist(hp);
    if (test->parsed()) {
      tp.perturb = perturb_value(test_perturb_opt, test_perturb);
      return run_test(tp);
    }
    if (bench->parsed()) return run_bench(ep);
    if (rerun->parsed()) return run_rerun(manifest_path);
  } catch (const cml::domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const cml::independence_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const cml::degenerate_orbit_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const io_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::ios_base::failure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
