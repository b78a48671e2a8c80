#include <catch_amalgamated.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string const kKarateEdges = PREFMIX_DATA_DIR "/karate/edges.tsv";
std::string const kKarateLabels = PREFMIX_DATA_DIR "/karate/factions.tsv";

fs::path scratch() {
  static fs::path const dir = [] {
    auto d = fs::temp_directory_path() / ("prefmix_cli_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(fs::path const& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write(fs::path const& p, std::string const& body) { std::ofstream(p, std::ios::binary) << body; }

struct Run {
  int code;
  std::string err;
};

Run cli(std::string const& args) {
  auto const err = scratch() / "stderr.txt";
  std::string const cmd = std::string(PREFMIX_CLI) + " " + args + " 2> " + err.string();
  int const status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(err)};
}

std::string karate_inputs() { return "--edges " + kKarateEdges + " --labels " + kKarateLabels; }

}  // namespace

TEST_CASE("fit on karate", "[cli]") {
  auto const out = scratch() / "fit.json";
  auto const r = cli("fit " + karate_inputs() + " --out " + out.string());
  REQUIRE(r.code == 0);
  auto const doc = json::parse(slurp(out));
  CHECK(doc["groups"].size() == 2);
  for (auto const& f : doc["fits"]) CHECK(f["converged"] == true);
  CHECK(doc["m"] == 156);
}

TEST_CASE("explicit λ = 2^-7 equals the default", "[cli]") {
  auto const a = scratch() / "fit_default.json";
  auto const b = scratch() / "fit_lambda.json";
  REQUIRE(cli("fit " + karate_inputs() + " --out " + a.string()).code == 0);
  REQUIRE(cli("fit " + karate_inputs() + " --lambda 0.0078125 --out " + b.string()).code == 0);
  CHECK(slurp(a) == slurp(b));
}

TEST_CASE("input errors exit 1", "[cli]") {
  auto const edges = scratch() / "bad_edges.tsv";
  auto const labels = scratch() / "bad_labels.tsv";
  write(edges, "a b\nb ghost\n");
  write(labels, "a X\nb Y\n");
  auto const r = cli("fit --edges " + edges.string() + " --labels " + labels.string() + " --out " +
                     (scratch() / "x.json").string());
  CHECK(r.code == 1);
  CHECK(r.err.find("ghost") != std::string::npos);
  CHECK(cli("fit --edges /nonexistent --labels " + labels.string() + " --out x").code == 1);
  CHECK(cli("fit " + karate_inputs()).code == 1);
  CHECK(cli("fit " + karate_inputs() + " --lambda -1 --out x").code == 1);
  CHECK(cli("frobnicate").code == 1);
}

TEST_CASE("metrics on karate", "[cli]") {
  auto const out = scratch() / "metrics.json";
  REQUIRE(cli("metrics " + karate_inputs() + " --out " + out.string()).code == 0);
  auto const doc = json::parse(slurp(out));
  CHECK_THAT(doc["R"]["mean"].get<double>(), Catch::Matchers::WithinAbs(0.72, 0.05));
  CHECK(doc["R"]["std"].get<double>() > 0.0);
  CHECK(doc["V"]["mean"].get<double>() > 0.0);
  CHECK(doc["per_group"].size() == 2);
  for (char const* key : {"a", "a_null", "R_point", "V_point"}) CHECK(doc.contains(key));
}

TEST_CASE("single group: R is null with a reason", "[cli]") {
  auto const edges = scratch() / "one_edges.tsv";
  auto const labels = scratch() / "one_labels.tsv";
  write(edges, "a b\nb c\nc a\na d\n");
  write(labels, "a X\nb X\nc X\nd X\n");
  auto const out = scratch() / "one.json";
  REQUIRE(cli("metrics --edges " + edges.string() + " --labels " + labels.string() + " --out " +
              out.string())
              .code == 0);
  auto const doc = json::parse(slurp(out));
  CHECK(doc["R"].is_null());
  CHECK(doc["R_undefined_reason"].is_string());
}

TEST_CASE("generate is deterministic", "[cli]") {
  auto const spec = scratch() / "spec500.json";
  write(spec, R"({"seed": 42, "groups": [
    {"name": "a", "size": 500, "alpha": [2, 1], "theta": 6},
    {"name": "b", "size": 500, "alpha": [1, 2], "theta": 6}]})");
  auto const p1 = scratch() / "g1", p2 = scratch() / "g2";
  REQUIRE(cli("generate --spec " + spec.string() + " --out " + p1.string()).code == 0);
  REQUIRE(cli("generate --spec " + spec.string() + " --threads 3 --out " + p2.string()).code == 0);
  CHECK(slurp(p1.string() + ".edges.tsv") == slurp(p2.string() + ".edges.tsv"));
  CHECK(slurp(p1.string() + ".labels.tsv") == slurp(p2.string() + ".labels.tsv"));

  auto const m1 = scratch() / "gm1.json", m2 = scratch() / "gm2.json";
  auto const inputs = " --directed --edges " + p1.string() + ".edges.tsv --labels " + p1.string() +
                      ".labels.tsv";
  REQUIRE(cli("metrics" + inputs + " --out " + m1.string()).code == 0);
  REQUIRE(cli("metrics" + inputs + " --out " + m2.string()).code == 0);
  CHECK(slurp(m1) == slurp(m2));
}

TEST_CASE("generated out-degree matches θ", "[cli]") {
  auto const spec = scratch() / "theta6.json";
  write(spec, R"({"seed": 3, "groups": [
    {"name": "a", "size": 5000, "alpha": [1, 1], "theta": 6},
    {"name": "b", "size": 5000, "alpha": [1, 1], "theta": 6}]})");
  auto const p = scratch() / "theta6";
  REQUIRE(cli("generate --spec " + spec.string() + " --out " + p.string()).code == 0);
  std::ifstream in(p.string() + ".edges.tsv");
  std::size_t lines = 0;
  for (std::string line; std::getline(in, line);) ++lines;
  CHECK_THAT(lines / 10000.0, Catch::Matchers::WithinAbs(6.0, 0.2));
}

TEST_CASE("tiny concentrations round-trip to V near one", "[cli]") {
  auto const spec = scratch() / "corners.json";
  write(spec, R"({"seed": 5, "groups": [
    {"name": "a", "size": 1000, "alpha": [0.01, 0.01], "theta": 10},
    {"name": "b", "size": 1000, "alpha": [0.01, 0.01], "theta": 10}]})");
  auto const p = scratch() / "corners";
  REQUIRE(cli("generate --spec " + spec.string() + " --out " + p.string()).code == 0);
  auto const out = scratch() / "corners.json.out";
  REQUIRE(cli("metrics --directed --edges " + p.string() + ".edges.tsv --labels " + p.string() +
              ".labels.tsv --out " + out.string())
              .code == 0);
  CHECK(json::parse(slurp(out))["V"]["mean"].get<double>() > 0.9);
}

TEST_CASE("histogram of a near-deterministic preference group", "[cli]") {
  auto const spec = scratch() / "fig1.json";
  write(spec, R"({"seed": 9, "groups": [
    {"name": "a", "size": 5000, "alpha": [2e9, 1e9], "theta": 6},
    {"name": "b", "size": 2500, "alpha": [1, 1], "theta": 6}]})");
  auto const p = scratch() / "fig1";
  REQUIRE(cli("generate --spec " + spec.string() + " --out " + p.string()).code == 0);
  auto const csv = scratch() / "fig1.csv";
  REQUIRE(cli("hist --directed --bins 1000 --edges " + p.string() + ".edges.tsv --labels " +
              p.string() + ".labels.tsv --out " + csv.string())
              .code == 0);
  std::ifstream in(csv);
  std::string line;
  std::getline(in, line);
  CHECK(line == "group,bin_left,bin_right,count,frequency");
  double mean = 0.0, total = 0.0;
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    REQUIRE(f.size() == 5);
    if (f[0] != "a") continue;
    double const mid = 0.5 * (std::stod(f[1]) + std::stod(f[2]));
    mean += mid * std::stod(f[4]);
    total += std::stod(f[4]);
  }
  CHECK_THAT(total, Catch::Matchers::WithinAbs(1.0, 1e-9));
  CHECK_THAT(mean, Catch::Matchers::WithinAbs(2.0 / 3, 0.01));
}

TEST_CASE("histogram flags groups without out-edges", "[cli]") {
  auto const edges = scratch() / "sink_edges.tsv";
  auto const labels = scratch() / "sink_labels.tsv";
  write(edges, "a b\n");
  write(labels, "a X\nb Y\n");
  auto const csv = scratch() / "sink.csv";
  auto const r = cli("hist --directed --edges " + edges.string() + " --labels " + labels.string() +
                     " --out " + csv.string());
  CHECK(r.code == 0);
  CHECK(r.err.find("'Y'") != std::string::npos);
}

TEST_CASE("curves from a fit document", "[cli]") {
  auto const fit = scratch() / "flat_fit.json";
  write(fit, R"({"groups": ["A", "B"], "p": [0.5, 0.5], "K": [1, 1], "m": 2, "lambda": 0.0078125,
    "fits": [{"group": "A", "alpha": [1, 1]}, {"group": "B", "alpha": [2, 5]}]})");
  auto const csv = scratch() / "curves.csv";
  REQUIRE(cli("curves --fit " + fit.string() + " --grid 1024 --out " + csv.string()).code == 0);
  std::ifstream in(csv);
  std::string line;
  std::getline(in, line);
  CHECK(line == "group,target_group,x,density");
  std::map<std::string, std::vector<std::pair<double, double>>> curves;
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    REQUIRE(f.size() == 4);
    curves[f[0] + "/" + f[1]].emplace_back(std::stod(f[2]), std::stod(f[3]));
    if (f[0] == "A") CHECK_THAT(std::stod(f[3]), Catch::Matchers::WithinAbs(1.0, 1e-12));
  }
  REQUIRE(curves.size() == 4);
  for (auto const& [key, pts] : curves) {
    REQUIRE(pts.size() == 1024);
    double area = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i)
      area += 0.5 * (pts[i].second + pts[i - 1].second) * (pts[i].first - pts[i - 1].first);
    area += 0.5 / 1024 * (pts.front().second + pts.back().second);
    INFO(key);
    CHECK_THAT(area, Catch::Matchers::WithinAbs(1.0, 1e-3));
  }
}

TEST_CASE("curves refits when no fit document is given", "[cli]") {
  auto const csv = scratch() / "karate_curves.csv";
  REQUIRE(cli("curves " + karate_inputs() + " --target Mr_Hi --out " + csv.string()).code == 0);
  std::ifstream in(csv);
  std::size_t rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  CHECK(rows == 1 + 2 * 256);
}
