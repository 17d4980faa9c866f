#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct CommandResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr
};

CommandResult run(const std::string& args) {
  const std::string cmd = std::string(KGALIGN_BIN) + " " + args + " 2>&1";
  std::array<char, 4096> buffer;
  CommandResult result;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  while (fgets(buffer.data(), buffer.size(), pipe) != nullptr) {
    result.output += buffer.data();
  }
  const int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("kgalign_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void write_file(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p);
  out << text;
}

TempDir make_toy_dataset() {
  TempDir dir;
  write_file(dir.path / "rel_triples_1",
             "a/x\tr/p\ta/y\n"
             "a/y\tr/q\ta/z\n");
  write_file(dir.path / "rel_triples_2",
             "b/x\tr/p\tb/y\n"
             "b/y\tr/q\tb/z\n");
  write_file(dir.path / "ent_links", "a/x\tb/x\na/y\tb/y\na/z\tb/z\n");
  write_file(dir.path / "721_5fold/1/train_links", "a/x\tb/x\n");
  write_file(dir.path / "721_5fold/1/valid_links", "a/y\tb/y\n");
  write_file(dir.path / "721_5fold/1/test_links", "a/z\tb/z\n");
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const std::string kSmallDims =
    " --set train.d_ent=16 --set train.d_rel=8 --set train.d_proj=8 --precision f64";

}  // namespace

TEST_CASE("validate: toy fixture counts and exit 0") {
  auto dir = make_toy_dataset();
  auto r = run("validate --data " + dir.path.string());
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("3 entities") != std::string::npos);
  CHECK(r.output.find("2 triples") != std::string::npos);
  CHECK(r.output.find("1/1/1") != std::string::npos);
}

TEST_CASE("validate: missing file names the file, malformed line gives the line number") {
  {
    auto dir = make_toy_dataset();
    fs::remove(dir.path / "ent_links");
    auto r = run("validate --data " + dir.path.string());
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("ent_links") != std::string::npos);
  }
  {
    auto dir = make_toy_dataset();
    write_file(dir.path / "rel_triples_1", "only_two\tfields\n");
    auto r = run("validate --data " + dir.path.string());
    CHECK(r.exit_code == 2);
    CHECK(r.output.find(":1") != std::string::npos);
  }
  {
    auto dir = make_toy_dataset();
    auto r = run("validate --data " + dir.path.string() + " --fold 6");
    CHECK(r.exit_code == 2);
  }
}

TEST_CASE("train on synthetic data emits the documented outputs") {
  TempDir out;
  auto r = run("train --synthetic n=60 deg=5 --epochs 12 --out " + out.path.string() +
               kSmallDims);
  CHECK(r.exit_code == 0);
  CHECK(fs::exists(out.path / "config.resolved"));
  CHECK(fs::exists(out.path / "history.jsonl"));
  CHECK(fs::exists(out.path / "checkpoint.bin"));
  CHECK(fs::exists(out.path / "metrics.json"));
  CHECK(fs::exists(out.path / "metrics.csv"));

  // metrics.json carries exactly the documented keys
  auto metrics = json::parse(slurp(out.path / "metrics.json"));
  REQUIRE(metrics.is_object());
  CHECK(metrics.size() == 6);
  for (const char* key : {"hits1", "hits5", "mrr", "n_test", "fold", "seed"}) {
    CHECK(metrics.contains(key));
  }

  // history: one header line plus one line per epoch
  std::istringstream hist(slurp(out.path / "history.jsonl"));
  std::string line;
  int lines = 0;
  while (std::getline(hist, line)) {
    auto obj = json::parse(line);
    if (lines == 0) {
      CHECK(obj["header"] == true);
    } else {
      CHECK(obj.contains("loss_total"));
    }
    ++lines;
  }
  CHECK(lines == 1 + 12);
}

TEST_CASE("config echo: re-running from config.resolved reproduces metrics byte-for-byte") {
  TempDir out1, out2;
  auto r1 = run("train --synthetic n=50 deg=4 --epochs 10 --seed 99 --out " +
                out1.path.string() + kSmallDims);
  REQUIRE(r1.exit_code == 0);
  auto r2 = run("train --config " + (out1.path / "config.resolved").string() + " --out " +
                out2.path.string());
  REQUIRE(r2.exit_code == 0);
  CHECK(slurp(out1.path / "metrics.json") == slurp(out2.path / "metrics.json"));
  CHECK(slurp(out1.path / "history.jsonl") == slurp(out2.path / "history.jsonl"));
}

TEST_CASE("ablation flag lands in the history header") {
  TempDir out;
  auto r = run("train --synthetic n=40 deg=4 --epochs 3 --ablation no-contrastive --out " +
               out.path.string() + kSmallDims);
  REQUIRE(r.exit_code == 0);
  std::istringstream hist(slurp(out.path / "history.jsonl"));
  std::string header_line;
  std::getline(hist, header_line);
  auto header = json::parse(header_line);
  CHECK(header["ablations"]["contrastive"] == false);
  CHECK(header["ablations"]["relation_channel"] == true);
}

TEST_CASE("pr outside the searched set is rejected unless --allow-any-pr") {
  TempDir out;
  auto rejected = run("train --synthetic n=40 deg=4 --epochs 2 --pr 0.2 --out " +
                      out.path.string() + kSmallDims);
  CHECK(rejected.exit_code == 1);
  CHECK(rejected.output.find("searched set") != std::string::npos);

  auto accepted = run("train --synthetic n=40 deg=4 --epochs 2 --pr 0.2 --allow-any-pr --out " +
                      out.path.string() + kSmallDims);
  CHECK(accepted.exit_code == 0);
}

TEST_CASE("KGALIGN_SEED environment variable overrides the config seed") {
  TempDir out;
  auto r = run("train --synthetic n=40 deg=4 --epochs 2 --out " + out.path.string() +
               kSmallDims);
  REQUIRE(r.exit_code == 0);
  CHECK(slurp(out.path / "config.resolved").find("seed = 42") != std::string::npos);

  TempDir out2;
  ::setenv("KGALIGN_SEED", "777", 1);
  auto r2 = run("train --synthetic n=40 deg=4 --epochs 2 --out " + out2.path.string() +
                kSmallDims);
  ::unsetenv("KGALIGN_SEED");
  REQUIRE(r2.exit_code == 0);
  CHECK(slurp(out2.path / "config.resolved").find("seed = 777") != std::string::npos);
}

TEST_CASE("eval: train split scores at least as high as test (overfit sanity)") {
  // pure margin training on perturbed data memorizes the seed pairs
  TempDir out;
  auto r = run("train --synthetic n=80 deg=4 perturb=0.3 --epochs 60 --seed 3 --pr 0 "
               "--set train.lambda=0 --out " +
               out.path.string() + kSmallDims);
  REQUIRE(r.exit_code == 0);

  TempDir eval_test, eval_train;
  auto rt = run("eval --checkpoint " + (out.path / "checkpoint.bin").string() + " --out " +
                eval_test.path.string());
  REQUIRE(rt.exit_code == 0);
  auto rr = run("eval --checkpoint " + (out.path / "checkpoint.bin").string() +
                " --split train --out " + eval_train.path.string());
  REQUIRE(rr.exit_code == 0);
  auto m_test = json::parse(slurp(eval_test.path / "metrics.json"));
  auto m_train = json::parse(slurp(eval_train.path / "metrics.json"));
  CHECK(m_train["hits1"].get<double>() >= m_test["hits1"].get<double>());
}

TEST_CASE("eval rejects a checkpoint evaluated against mismatched data") {
  TempDir out;
  auto r = run("train --synthetic n=40 deg=4 --epochs 2 --out " + out.path.string() +
               kSmallDims);
  REQUIRE(r.exit_code == 0);
  auto toy = make_toy_dataset();
  auto bad = run("eval --checkpoint " + (out.path / "checkpoint.bin").string() + " --data " +
                 toy.path.string() + " --fold 1");
  CHECK(bad.exit_code == 2);
  CHECK(bad.output.find("checkpoint") != std::string::npos);
}

TEST_CASE("sweep emits one row per pr and flags pr=0 as augmentation off") {
  TempDir out;
  auto r = run("sweep --synthetic n=40 deg=4 --epochs 3 --pr-list 0,0.05 --out " +
               out.path.string() + kSmallDims);
  REQUIRE(r.exit_code == 0);
  const std::string csv = slurp(out.path / "sweep.csv");
  std::istringstream ss(csv);
  std::string line;
  std::getline(ss, line);
  CHECK(line == "pr,augmentation,hits1,hits5,mrr,n_test,seed");
  std::getline(ss, line);
  CHECK(line.find("0,off") == 0);
  std::getline(ss, line);
  CHECK(line.find(",on,") != std::string::npos);
}

TEST_CASE("gradcheck subcommand passes and reports every op") {
  auto r = run("gradcheck");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("[FAIL]") == std::string::npos);
  for (const char* op : {"matmul", "softmax_rows", "leaky_relu", "segment_weighted_sum",
                         "lookup_rows", "dropout"}) {
    CHECK(r.output.find(op) != std::string::npos);
  }
}

TEST_CASE("unknown config keys fail fast with exit 1") {
  TempDir dir;
  write_file(dir.path / "bad.cfg", "train.learning = 0.1\n");
  auto r = run("train --config " + (dir.path / "bad.cfg").string());
  CHECK(r.exit_code == 1);
  CHECK(r.output.find("unknown config key") != std::string::npos);
}
