#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "json.hpp"

#include "ssds/errors.hpp"
#include "ssds/harness.hpp"
#include "support.hpp"

using namespace ssds;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

std::size_t line_count(const fs::path& path) {
  std::ifstream in(path);
  std::size_t n = 0;
  std::string line;
  while (std::getline(in, line)) ++n;
  return n;
}

RunConfig small_logistic() {
  RunConfig c;
  c.problem = ProblemKind::Logistic;
  c.data = "synthetic:80,2,2,2,3";
  c.epochs = 6;
  c.batch_size = 16;
  c.histogram_every = 3;
  c.ssds.alpha0 = 0.1;
  c.ssds.c1 = 1.0;
  c.ssds.seed = 5;
  return c;
}

}  // namespace

TEST_SUITE("harness") {
  TEST_CASE("names") {
    CHECK(parse_algorithm("ssds-p") == Algorithm::SsdsP);
    CHECK(to_string(Algorithm::Sgda) == "sgda");
    CHECK(parse_problem_kind("mlp") == ProblemKind::Mlp);
    CHECK_THROWS_AS(parse_algorithm("adam"), ConfigError);
    CHECK_THROWS_AS(parse_problem_kind("cnn"), ConfigError);
  }

  TEST_CASE("run config round trip") {
    RunConfig c = small_logistic();
    c.algorithm = Algorithm::SsdsP;
    c.lambda_ceiling = 7.5;
    c.norm = NormOrder::L2;
    c.subgradient = SubgradientRule::Exact;
    c.quadratic_c = {0.1 / 3.0, -0.2};
    c.hidden = {32};
    c.activation = autodiff::Activation::Tanh;
    c.ssds.epsilon = 1.0 / 7.0;
    const RunConfig back = parse_run_config(to_key_values(c));
    CHECK(back == c);
    CHECK(parse_run_config(to_key_values(back)) == back);

    // An empty data field serializes as the problem's default spec.
    RunConfig linear;
    linear.hidden.clear();
    const RunConfig parsed = parse_run_config(to_key_values(linear));
    CHECK(parsed.data == linear.data_spec());
    CHECK(parsed.hidden.empty());
    CHECK(parse_run_config(to_key_values(parsed)) == parsed);
    CHECK(parse_run_config({}) == RunConfig{});
  }

  TEST_CASE("run config errors") {
    CHECK_THROWS_AS(parse_run_config({{"algorithm", "adam"}}), ConfigError);
    CHECK_THROWS_AS(parse_run_config({{"bogus", "1"}}), ConfigError);
    CHECK_THROWS_AS(parse_run_config({{"epochs", "0"}}), ConfigError);
    CHECK_THROWS_AS(parse_run_config({{"norm", "3"}}), ConfigError);
    CHECK_THROWS_AS(parse_run_config({{"quadratic_c", "0.1,x"}}), ConfigError);
    CHECK_THROWS_AS(parse_run_config({{"epsilon", "-1"}}), ConfigError);
  }

  TEST_CASE("dataset specs") {
    CHECK(load_dataset("synthetic:30,3,2,1.5,4").size() == 30);
    CHECK(load_dataset("quadratic:4,2,1").dim() == 2);
    const Dataset full = load_dataset("synthetic:30,3,2,1.5,4");
    const Dataset part = load_dataset("synthetic:30,3,2,1.5,4@10+5");
    CHECK(part.size() == 5);
    CHECK(part[0].input == full[10].input);
    const std::string mnist = std::string(SSDS_SOURCE_DIR) + "/data/mnist/";
    const Dataset idx =
        load_dataset("idx:" + mnist + "t10k-images-idx3-ubyte," + mnist + "t10k-labels-idx1-ubyte,20");
    CHECK(idx.size() == 20);
    CHECK_THROWS_AS(load_dataset("synthetic:30,3"), ConfigError);
    CHECK_THROWS_AS(load_dataset("mystery:1"), ConfigError);
    CHECK_THROWS_AS(load_dataset("nocolon"), ConfigError);
    CHECK_THROWS_AS(load_dataset("synthetic:30,3,2,1.5,4@25+10"), ConfigError);
    CHECK_THROWS_AS(load_dataset("csv:/nonexistent/file.csv"), FormatError);
  }

  TEST_CASE("problems from configs") {
    RunConfig c;
    auto quad = make_problem(c, std::make_shared<const Dataset>(load_dataset(c.data_spec())));
    CHECK(dynamic_cast<QuadraticSaddleProblem*>(quad.get()) != nullptr);
    c.problem = ProblemKind::Mlp;
    c.hidden = {8};
    auto data = std::make_shared<const Dataset>(load_dataset("synthetic:20,5,3,2,1"));
    auto mlp = make_problem(c, data);
    CHECK(mlp->param_dim() == 5 * 8 + 8 + 8 * 3 + 3);
  }

  TEST_CASE("run ids") {
    const RunConfig a = small_logistic();
    CHECK(run_id(a).size() == 16);
    CHECK(run_id(a) == run_id(small_logistic()));
    RunConfig b = a;
    b.ssds.seed += 1;
    CHECK(run_id(b) != run_id(a));
    b = a;
    b.epochs += 1;
    CHECK(run_id(b) != run_id(a));
    CHECK(artifact_version().rfind("0.1.0", 0) == 0);
  }

  TEST_CASE("a run writes its artifacts and a manifest naming them") {
    ssds::testing::TempDir dir("run");
    const RunConfig config = small_logistic();
    const RunOutcome out = run_training(config, dir.path());
    CHECK(out.run_dir == dir.path() / run_id(config));
    CHECK_FALSE(out.divergence);
    CHECK(out.reports.size() == 6);
    CHECK(line_count(out.run_dir / "trajectory.csv") == 7);
    CHECK(fs::exists(out.run_dir / "u_norms_epoch_000003.csv"));
    CHECK(fs::exists(out.run_dir / "u_norms_epoch_000006.csv"));
    CHECK(line_count(out.run_dir / "u_norms_epoch_000006.csv") == 81);

    const auto manifest = nlohmann::json::parse(slurp(out.run_dir / "manifest.json"));
    CHECK(manifest["run_id"] == out.run_id);
    CHECK(manifest["status"] == "completed");
    CHECK(manifest["final_lambda"].get<double>() >= 0.0);
    CHECK(manifest["final_report"]["epoch"] == 6);
    std::set<std::string> named;
    for (const auto& a : manifest["artifacts"]) named.insert(a.get<std::string>());
    std::set<std::string> present;
    for (const auto& entry : fs::directory_iterator(out.run_dir)) present.insert(entry.path().filename().string());
    CHECK(named == present);
    CHECK(named.count("checkpoint.bin") == 1);

    const autodiff::MlpModel model = autodiff::load_checkpoint(out.run_dir / "checkpoint.bin");
    CHECK(model.parameters() == out.final_state.x.w);
    CHECK(read_run_config(out.run_dir / "config.txt") == config);

    CHECK_THROWS_AS(run_training(config, dir.path()), fs::filesystem_error);
  }

  TEST_CASE("re-running a manifest reproduces the trajectory byte for byte") {
    ssds::testing::TempDir first("rerun_a");
    ssds::testing::TempDir second("rerun_b");
    RunConfig config = small_logistic();
    config.algorithm = Algorithm::SsdsP;
    const RunOutcome a = run_training(config, first.path());
    const RunOutcome b = rerun_manifest(a.run_dir / "manifest.json", second.path());
    CHECK(b.run_id == a.run_id);
    CHECK(slurp(a.run_dir / "trajectory.csv") == slurp(b.run_dir / "trajectory.csv"));
    CHECK(slurp(a.run_dir / "u_norms_epoch_000006.csv") == slurp(b.run_dir / "u_norms_epoch_000006.csv"));
    CHECK_THROWS_AS(rerun_manifest(first / "missing.json", second.path()), FormatError);
  }

  TEST_CASE("divergence is recorded, not hidden") {
    ssds::testing::TempDir dir("diverge");
    RunConfig config;
    config.epochs = 5;
    config.ssds.lr = 1e300;
    const RunOutcome out = run_training(config, dir.path());
    REQUIRE(out.divergence);
    CHECK(out.reports.size() < 5);
    const auto manifest = nlohmann::json::parse(slurp(out.run_dir / "manifest.json"));
    CHECK(manifest["status"] == "diverged");
    CHECK(manifest.contains("divergence"));
  }

  TEST_CASE("csv helpers") {
    CHECK(trajectory_header() == "epoch,alpha,lambda,t,mean_loss,frac_u_within_budget,mean_u_delta_l2,wall_ms");
    EpochReport r;
    r.epoch = 3;
    r.alpha = 0.1;
    CHECK(trajectory_row(r, 0.0).rfind("3,0.10000000000000001,0,", 0) == 0);
    ssds::testing::TempDir dir("csvh");
    write_evaluation_csv(dir / "e.csv", {{"m", "fgsm", "eps=0.1", 0.5}});
    CHECK(slurp(dir / "e.csv") == "model_id,attack,params,accuracy\nm,fgsm,\"eps=0.1\",0.5\n");
    write_file_atomically(dir / "a.txt", "hello");
    CHECK(slurp(dir / "a.txt") == "hello");
    CHECK_FALSE(fs::exists(dir / "a.txt.tmp"));
  }

  TEST_CASE("reproduce panels") {
    ssds::testing::TempDir dir("repro");
    ReproduceOptions options;
    options.out_dir = dir.path();
    options.quick = true;
    const auto hist = reproduce_figure("u-hist", options);
    CHECK(fs::exists(dir / "u_hist_epoch_030.csv"));
    CHECK(fs::exists(dir / "u_hist_epoch_060.csv"));
    CHECK(hist.size() == 3);
    CHECK(line_count(reproduce_figure("u-evolution", options).front()) == 61);
    CHECK(line_count(reproduce_figure("sgda-vs-ssds", options).front()) == 21);
    const auto table = reproduce_figure("robust-table", options);
    CHECK(line_count(table.front()) == 6);
    CHECK_THROWS_AS(reproduce_figure("fig9", options), ConfigError);
  }
}
