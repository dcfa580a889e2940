#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

#include "cli.hpp"
#include "olt/checksum.hpp"
#include "olt/datagen.hpp"
#include "support.hpp"

namespace olt {
namespace {

using testing::TempDir;

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "olt");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::cli_dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::size_t line_count(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run({"frobnicate"}).code, 1);
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"simulate"}).code, 1);
  TempDir dir;
  write_file(dir / "s.json", R"({"layers": []})");
  EXPECT_EQ(run({"simulate", "--structure", (dir / "s.json").string(), "--grid", "400:x:10"}).code, 1);
  EXPECT_EQ(run({"--help"}).code, 0);
}

TEST(Cli, SimulateMatchesLibrary) {
  TempDir dir;
  write_file(dir / "s.json",
             R"({"layers": [{"material": "toy_n2.0", "thickness_nm": 120}, {"material": "toy_absorber", "thickness_nm": 30}]})");
  const auto r = run({"simulate", "--structure", (dir / "s.json").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(line_count(r.out), 72u);
  const auto db = toy_material_db();
  const Structure s{{{2, 120.0}, {0, 30.0}}};
  const auto spec = simulate(db, s, WavelengthGrid{}, AmbientConfig{});
  std::string expected = "wavelength_nm,R,T\n";
  for (std::size_t j = 0; j < spec.R.size(); ++j)
    expected += format_double(spec.grid.at(j)) + ',' + format_double(spec.R[j]) + ',' + format_double(spec.T[j]) + '\n';
  EXPECT_EQ(r.out, expected);

  write_file(dir / "bad.json", R"({"layers": [{"material": "nope", "thickness_nm": 10}]})");
  EXPECT_EQ(run({"simulate", "--structure", (dir / "bad.json").string()}).code, 2);
}

TEST(Cli, GenDataIsReproducibleAndValidates) {
  TempDir dir;
  const auto a = (dir / "a.jsonl").string(), b = (dir / "b.jsonl").string();
  ASSERT_EQ(run({"gen-data", "--count", "50", "--seed", "3", "--max-layers", "4", "--out", a}).code, 0);
  ASSERT_EQ(run({"gen-data", "--count", "50", "--seed", "3", "--max-layers", "4", "--out", b}).code, 0);
  EXPECT_EQ(read_manifest(a).sha256, read_manifest(b).sha256);
  EXPECT_EQ(read_manifest(a).sha256, sha256_file_hex(a));
  EXPECT_EQ(run({"validate-data", "--data", a, "--fraction", "1"}).code, 0);
  auto text = read_file(a);
  text[text.size() / 2] = text[text.size() / 2] == '1' ? '2' : '1';
  write_file(a, text);
  EXPECT_EQ(run({"validate-data", "--data", a}).code, 2);
}

TEST(Cli, EndToEndPipeline) {
  TempDir dir;
  const auto p = [&](const char* n) { return (dir / n).string(); };
  ASSERT_EQ(run({"gen-data", "--count", "120", "--max-layers", "3", "--bins", "50:200:50", "--out", p("all.jsonl")}).code, 0);
  ASSERT_EQ(run({"split-data", "--data", p("all.jsonl"), "--val-fraction", "0.25", "--train-out", p("train.jsonl"),
                 "--val-out", p("val.jsonl")}).code, 0);
  write_file(dir / "train.json", R"({"epochs": 1, "batch_size": 32})");
  const auto t = run({"train", "--data", p("train.jsonl"), "--val", p("val.jsonl"), "--config", p("train.json"),
                      "--out", p("run")});
  ASSERT_EQ(t.code, 0) << t.err;
  const auto ck = p("run/final.ckpt");
  const auto e = run({"eval", "--checkpoint", ck, "--data", p("val.jsonl")});
  ASSERT_EQ(e.code, 0) << e.err;
  EXPECT_GE(std::stod(e.out), 0.0);

  write_file(dir / "s.json", R"({"layers": [{"material": "toy_n1.5", "thickness_nm": 100}]})");
  EXPECT_EQ(run({"export-embeddings", "--checkpoint", ck, "--out", p("emb.csv")}).code, 0);
  EXPECT_EQ(line_count(read_file(dir / "emb.csv")), 1u + 2u + 3u * 4u);
  EXPECT_EQ(run({"export-attention", "--checkpoint", ck, "--structure", p("s.json"), "--out", p("att.csv")}).code, 0);
  EXPECT_EQ(line_count(read_file(dir / "att.csv")), 4u);
  EXPECT_EQ(run({"export-attention", "--checkpoint", ck, "--structure", p("s.json"), "--block", "9", "--out",
                 p("att.csv")}).code,
            2);
  EXPECT_EQ(run({"export-field", "--structure", p("s.json"), "--z-step", "10", "--out", p("f.csv")}).code, 0);
  EXPECT_EQ(line_count(read_file(dir / "f.csv")), 72u);

  write_file(dir / "fam.json",
             R"({"families": [{"name": "single", "materials": ["toy_n2.0"], "thickness_ranges_nm": [[50, 200]], "sample_count": 4}]})");
  const auto f = run({"eval-families", "--checkpoint", ck, "--config", p("fam.json")});
  ASSERT_EQ(f.code, 0) << f.err;
  EXPECT_NE(f.out.find("single"), std::string::npos);
  const auto b = run({"bench", "--checkpoint", ck, "--n-single", "3", "--batch-size", "64", "--repetitions", "2",
                      "--out", p("bench.json")});
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_NE(read_file(dir / "bench.json").find("speedup_batch"), std::string::npos);
}

}  // namespace
}  // namespace olt
