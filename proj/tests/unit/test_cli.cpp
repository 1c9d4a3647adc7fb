#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>
#include <unistd.h>

namespace fs = std::filesystem;

namespace {

const std::string kCli = ASCF_CLI;
const std::string kData = ASCF_SOURCE_DIR "/data/";

struct Result {
  int code;
  std::string out;
};

Result run(const std::string& args) {
  const std::string cmd = kCli + " " + args + " 2>&1";
  FILE* pipe = ::popen(cmd.c_str(), "r");
  REQUIRE(pipe);
  std::string out;
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, pipe)) out.append(buf, n);
  const int status = ::pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path = fs::temp_directory_path() / ("ascf_cli_" + std::to_string(::getpid()));
  TempDir() { fs::create_directories(path); }
  ~TempDir() { fs::remove_all(path); }
};

std::size_t count_lines(const std::string& s, const std::string& prefix) {
  std::size_t n = 0;
  std::istringstream in(s);
  for (std::string line; std::getline(in, line);) n += line.rfind(prefix, 0) == 0;
  return n;
}

}  // namespace

TEST_CASE("cli: usage and manifest errors exit 2") {
  TempDir dir;
  CHECK(run("").code == 2);
  CHECK(run("simulate --data x.csv").code == 2);
  std::ofstream(dir.path / "bad.json") << R"({"selection": ["Alcohol"], "label": "class"})";
  auto r = run("simulate --data " + kData + "wine.csv --manifest " + (dir.path / "bad.json").string() + " --out " +
               (dir.path / "o").string());
  CHECK(r.code == 2);
  CHECK(r.out.find("classification") != std::string::npos);
  r = run("simulate --data " + kData + "wine.csv --manifest " + kData + "manifests/wine.json --strategy greedy --out " +
          (dir.path / "o").string());
  CHECK(r.code == 2);
  r = run("simulate --data /nonexistent.csv --manifest " + kData + "manifests/wine.json --out " +
          (dir.path / "o").string());
  CHECK(r.code == 1);
}

TEST_CASE("cli: simulate, report idempotence, step filter and merge") {
  TempDir dir;
  const std::string common = "--data " + kData + "wine.csv --manifest " + kData +
                             "manifests/wine.json --repeats 2 --k 5 --seed 42 --max-steps 30 ";
  const auto joint = dir.path / "joint";
  REQUIRE(run("simulate " + common + "--strategy all --out " + joint.string()).code == 0);
  for (const char* f : {"curves.csv", "report.csv", "metadata.json"}) CHECK(fs::exists(joint / f));

  // report over one output reproduces report.csv
  auto r = run("report --in " + joint.string() + " --out " + (dir.path / "re.csv").string());
  REQUIRE(r.code == 0);
  CHECK(slurp(dir.path / "re.csv") == slurp(joint / "report.csv"));

  r = run("report --in " + joint.string() + " --steps 1:25");
  REQUIRE(r.code == 0);
  CHECK(count_lines(r.out, "u-ascf") == 25);
  CHECK(count_lines(r.out, "s-ascf") == 25);

  // two single-strategy runs sharing the seed merge into the joint comparison
  const auto u = dir.path / "u", s = dir.path / "s";
  REQUIRE(run("simulate " + common + "--strategy u-ascf --out " + u.string()).code == 0);
  REQUIRE(run("simulate " + common + "--strategy s-ascf --out " + s.string()).code == 0);
  r = run("report --in " + u.string() + " --in " + s.string() + " --out " + (dir.path / "merged.csv").string());
  REQUIRE(r.code == 0);
  CHECK(slurp(dir.path / "merged.csv") == slurp(joint / "report.csv"));

  // different seeds cannot be merged
  const auto other = dir.path / "other";
  REQUIRE(run("simulate --data " + kData + "wine.csv --manifest " + kData +
              "manifests/wine.json --repeats 2 --k 5 --seed 7 --max-steps 30 --strategy s-ascf --out " +
              other.string())
              .code == 0);
  r = run("report --in " + u.string() + " --in " + other.string());
  CHECK(r.code == 1);
  CHECK(r.out.find("pairing") != std::string::npos);
}

TEST_CASE("cli: session workflow") {
  TempDir dir;
  std::ofstream(dir.path / "c.csv") << "id,a,lab\nc1,0.1,0\nc2,0.9,1\nc3,0.5,0\n";
  std::ofstream(dir.path / "m.json") << R"({"id": "id", "selection": ["a"], "classification": ["x1", "x2"], "label": "lab"})";
  const std::string st = "session --state " + (dir.path / "s.json").string() + " ";
  REQUIRE(run(st + "init --candidates " + (dir.path / "c.csv").string() + " --manifest " +
              (dir.path / "m.json").string() + " --strategy s-ascf --seed 4")
              .code == 0);
  auto r = run(st + "suggest");
  CHECK(r.code == 0);
  CHECK(r.out.find("random pick") != std::string::npos);
  CHECK(run(st + "record --id c1 --values 0.1,1.0").code == 0);
  CHECK(run(st + "record --id c2 --values 2.0,0.3").code == 0);
  r = run(st + "suggest");
  CHECK(r.out.find("next c3 utility") != std::string::npos);
  CHECK(run(st + "record --id c3 --values 0.4,0.5").code == 0);
  r = run(st + "status");
  CHECK(r.out.find("acquired 3") != std::string::npos);
  CHECK(r.out.find("candidates 0") != std::string::npos);
  CHECK(r.out.find("(honored)") != std::string::npos);
  r = run(st + "suggest");
  CHECK(r.code == 0);
  CHECK(r.out.find("exhausted") != std::string::npos);
  r = run(st + "record --id nope --values 1,2");
  CHECK(r.code == 1);
  r = run(st + "export");
  CHECK(r.out.rfind("id,a,x1,x2,lab\n", 0) == 0);
  CHECK(run(st + "record --id c1 --values 1,abc").code == 2);
}
