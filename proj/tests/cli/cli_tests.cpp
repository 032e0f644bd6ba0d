// End-to-end tests for the cmlrand binary: every subcommand, the manifest
// rerun contract, and the documented exit codes. The binary path arrives via
// the CMLRAND_BIN environment variable (set by CTest).

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct run_result {
  int exit_code = -1;
  std::string output;  // stdout + stderr
};

const char* binary() {
  const char* bin = std::getenv("CMLRAND_BIN");
  REQUIRE_MESSAGE(bin != nullptr, "CMLRAND_BIN must point at the cmlrand binary");
  return bin;
}

run_result run_in(const fs::path& dir, const std::string& args) {
  const std::string cmd =
      "cd '" + dir.string() + "' && '" + std::string(binary()) + "' " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  run_result res;
  char buf[4096];
  while (std::size_t got = std::fread(buf, 1, sizeof buf, pipe)) res.output.append(buf, got);
  const int status = pclose(pipe);
  res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return res;
}

// Fresh scratch directory per test case, removed on scope exit.
struct scratch_dir {
  fs::path path;
  explicit scratch_dir(const std::string& tag) {
    path = fs::temp_directory_path() / ("cmlrand_cli_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~scratch_dir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

std::string read_file(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  REQUIRE_MESSAGE(is.good(), ("missing file: " + p.string()));
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::size_t line_count(const std::string& text) {
  std::size_t n = 0;
  for (char c : text) n += c == '\n';
  return n;
}

}  // namespace

TEST_CASE("gen: ascii output honors the size contract") {
  scratch_dir d("gen_ascii");
  auto r = run_in(d.path, "gen --bits 5000 --out a.txt");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("wrote 5000 bits") != std::string::npos);
  const std::string bits = read_file(d.path / "a.txt");
  REQUIRE(bits.size() == 5000);
  for (char c : bits) REQUIRE((c == '0' || c == '1'));

  const std::string origin = read_file(d.path / "a.txt.origin");
  CHECK(origin.find("n_bits=5000\n") != std::string::npos);
  CHECK(origin.find("map_a=logistic\n") != std::string::npos);
  CHECK(origin.find("arithmetic_a=fixed\n") != std::string::npos);

  const json manifest = json::parse(read_file(d.path / "a.txt.manifest.json"));
  CHECK(manifest.at("command") == "gen");
  CHECK(manifest.at("params").at("bits") == 5000);
}

TEST_CASE("gen: deterministic for a fixed seed set") {
  scratch_dir d1("gen_det1"), d2("gen_det2");
  CHECK(run_in(d1.path, "gen --bits 2048 --seed-a 99 --seed-b 100").exit_code == 0);
  CHECK(run_in(d2.path, "gen --bits 2048 --seed-a 99 --seed-b 100").exit_code == 0);
  CHECK(read_file(d1.path / "bits.txt") == read_file(d2.path / "bits.txt"));

  scratch_dir d3("gen_det3");
  CHECK(run_in(d3.path, "gen --bits 2048 --seed-a 99 --seed-b 101").exit_code == 0);
  CHECK(read_file(d1.path / "bits.txt") != read_file(d3.path / "bits.txt"));
}

TEST_CASE("gen: raw format packs the same bits MSB-first") {
  scratch_dir d("gen_raw");
  CHECK(run_in(d.path, "gen --bits 4096 --format ascii --out a.txt").exit_code == 0);
  CHECK(run_in(d.path, "gen --bits 4096 --format raw --out a.bin").exit_code == 0);
  const std::string ascii = read_file(d.path / "a.txt");
  const std::string raw = read_file(d.path / "a.bin");
  REQUIRE(raw.size() == 512);
  std::string unpacked;
  for (unsigned char byte : raw)
    for (int i = 7; i >= 0; --i) unpacked += static_cast<char>('0' + ((byte >> i) & 1));
  CHECK(unpacked == ascii);
}

TEST_CASE("gen: --perturb without a value uses delta = 1e-3") {
  scratch_dir d("gen_perturb");
  auto r = run_in(d.path, "gen --bits 1024 --perturb --out p.txt");
  CHECK(r.exit_code == 0);
  const std::string origin = read_file(d.path / "p.txt.origin");
  CHECK(origin.find("perturb_delta=0.001\n") != std::string::npos);
  CHECK(origin.find("seed_b=") == std::string::npos);
}

TEST_CASE("exit codes: validation, runtime, io") {
  scratch_dir d("exit_codes");
  CHECK(run_in(d.path, "gen --bits 100 --epsilon 1.5").exit_code == 1);
  CHECK(run_in(d.path, "gen --bits 100 --format xml").exit_code == 1);   // CLI11 check
  CHECK(run_in(d.path, "gen --no-such-flag").exit_code == 1);
  CHECK(run_in(d.path, "").exit_code == 1);  // subcommand required

  // Identical seeds: the independence gate can never pass.
  auto same = run_in(d.path, "gen --bits 64 --seed-a 5 --seed-b 5 --k-window 100 --max-windows 3");
  CHECK(same.exit_code == 2);
  CHECK(same.output.find("independence") != std::string::npos);

  auto io = run_in(d.path, "gen --bits 64 --out /no_such_dir_cmlrand/bits.txt");
  CHECK(io.exit_code == 3);

  CHECK(run_in(d.path, "rerun missing.manifest.json").exit_code == 3);
  std::ofstream(d.path / "bad.manifest.json") << "{ not json";
  CHECK(run_in(d.path, "rerun bad.manifest.json").exit_code == 1);

  CHECK(run_in(d.path, "--help").exit_code == 0);
}

TEST_CASE("le: spectrum CSV and numeric cross-check") {
  scratch_dir d("le");
  auto r = run_in(d.path, "le --map tent");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("le_f = ") != std::string::npos);
  const std::string csv = read_file(d.path / "le.csv");
  CHECK(line_count(csv) == 65);  // header + 8*8 modes
  CHECK(csv.rfind("r,l,lambda,le\n", 0) == 0);

  auto rn = run_in(d.path,
                   "le --map tent --rows 2 --cols 2 --numeric --iters 10000 --discard 200 "
                   "--out le2.csv");
  CHECK(rn.exit_code == 0);
  CHECK(rn.output.find("max_abs_deviation = ") != std::string::npos);
  CHECK(line_count(read_file(d.path / "le2.csv")) == 5);
  const std::string numeric = read_file(d.path / "le2_numeric.csv");
  CHECK(numeric.rfind("rank,le_numeric\n", 0) == 0);
  CHECK(line_count(numeric) == 5);

  auto r1 = run_in(d.path, "le --rows 1 --cols 1 --out le1.csv");
  CHECK(r1.exit_code == 0);
  CHECK(line_count(read_file(d.path / "le1.csv")) == 2);  // single uniform mode
}

TEST_CASE("bifurcation: row count and header") {
  scratch_dir d("bif");
  auto r = run_in(d.path,
                  "bifurcation --rows 4 --cols 4 --steps 5 --points 7 --discard 50 --out b.csv");
  CHECK(r.exit_code == 0);
  const std::string csv = read_file(d.path / "b.csv");
  CHECK(csv.rfind("mu,value\n", 0) == 0);
  CHECK(line_count(csv) == 36);  // header + 5*7
}

TEST_CASE("hist: bins and mass conservation") {
  scratch_dir d("hist");
  auto r = run_in(d.path, "hist --points 2000 --discard 100 --bins 20 --out h.csv");
  CHECK(r.exit_code == 0);
  std::istringstream is(read_file(d.path / "h.csv"));
  std::string line;
  std::getline(is, line);
  CHECK(line == "bin_lo,bin_hi,count");
  std::uint64_t total = 0;
  std::size_t rows = 0;
  while (std::getline(is, line)) {
    ++rows;
    total += std::stoull(line.substr(line.rfind(',') + 1));
  }
  CHECK(rows == 20);
  CHECK(total == 2000);
}

TEST_CASE("test: report shape at a small scale") {
  scratch_dir d("test_cmd");
  auto r = run_in(d.path,
                  "test --sequences 60 --length 2000 --alpha 0.05 --jobs 2 --out rep.csv");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("pass_rate") != std::string::npos);
  const std::string rep = read_file(d.path / "rep.csv");
  CHECK(rep.rfind("sub_test,p_value,pass_rate,p_value_T\n", 0) == 0);
  CHECK(line_count(rep) == 5);  // header + 4 sub-tests
  const std::string seqs = read_file(d.path / "rep_sequences.csv");
  CHECK(seqs.rfind("test,statistic,p_value,pass\n", 0) == 0);
  CHECK(line_count(seqs) == 1 + 60 * 4);

  // --jobs must not change the verdicts, only the wall time.
  scratch_dir d1("test_cmd_j1");
  auto r1 = run_in(d1.path,
                   "test --sequences 60 --length 2000 --alpha 0.05 --jobs 1 --out rep.csv");
  CHECK(r1.exit_code == 0);
  CHECK(read_file(d1.path / "rep.csv") == rep);
}

TEST_CASE("test: too-short sequences skip a sub-test with a warning") {
  scratch_dir d("test_skip");
  auto r = run_in(d.path, "test --sequences 60 --length 120 --alpha 0.05 --out rep.csv");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("warning: sub-test block_frequency skipped") != std::string::npos);
  CHECK(line_count(read_file(d.path / "rep.csv")) == 4);  // header + 3 surviving sub-tests
}

TEST_CASE("bench: single repeat, stable report") {
  scratch_dir d("bench");
  auto r = run_in(d.path, "bench --bytes 1024 --repeats 1 --out bench.json");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("bits/second") != std::string::npos);
  const json rep = json::parse(read_file(d.path / "bench.json"));
  CHECK(rep.at("bytes") == 1024);
  CHECK(rep.at("repeats") == 1);
  CHECK(rep.at("mean_ms") == rep.at("min_ms"));
  CHECK(rep.at("mean_ms") == rep.at("max_ms"));
  CHECK(rep.at("bits_per_second").get<double>() > 0.0);
}

TEST_CASE("rerun: reproduces data files byte for byte") {
  scratch_dir src("rerun_src"), dst("rerun_dst");
  CHECK(run_in(src.path, "gen --bits 3000 --seed-a 41 --seed-b 42 --out g.txt").exit_code == 0);
  auto r = run_in(dst.path, "rerun '" + (src.path / "g.txt.manifest.json").string() + "'");
  CHECK(r.exit_code == 0);
  CHECK(read_file(dst.path / "g.txt") == read_file(src.path / "g.txt"));
  CHECK(read_file(dst.path / "g.txt.origin") == read_file(src.path / "g.txt.origin"));

  CHECK(run_in(src.path, "hist --points 500 --discard 50 --bins 10 --out h.csv").exit_code == 0);
  CHECK(run_in(dst.path, "rerun '" + (src.path / "h.csv.manifest.json").string() + "'").exit_code ==
        0);
  CHECK(read_file(dst.path / "h.csv") == read_file(src.path / "h.csv"));
}
