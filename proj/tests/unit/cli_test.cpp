#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "commands.hpp"
#include "config.hpp"
#include "manifest.hpp"
#include "pipeline.hpp"
#include "soda/error.hpp"
#include "soda/synth.hpp"

using namespace soda;
using namespace soda::cli;
namespace fs = std::filesystem;

TEST(Digest, KnownVectors) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(Config, OverlayAndRejection) {
  const auto c = apply_json(Config{}, nlohmann::json::parse(R"({"p":8,"fdr_method":"bh","gamma1":0.5})"));
  EXPECT_EQ(c.p, 8u);
  EXPECT_EQ(c.method(), loc::FdrMethod::BH);
  EXPECT_EQ(c.gamma1, std::optional<double>(0.5));
  auto code = [](const char* text) {
    try {
      apply_json(Config{}, nlohmann::json::parse(text)).validate();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::IoFailure;
  };
  EXPECT_EQ(code(R"({"q":1})"), ErrorCode::InvalidConfig);
  EXPECT_EQ(code(R"({"p":"many"})"), ErrorCode::InvalidConfig);
  EXPECT_EQ(code(R"({"order_k":3})"), ErrorCode::InvalidConfig);
  EXPECT_EQ(code(R"({"fdr":0})"), ErrorCode::InvalidConfig);
}

TEST(Manifest, RecordsDigests) {
  const fs::path dir = fs::temp_directory_path() / "soda_manifest_test";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ofstream(dir / "a.txt") << "abc";
  Manifest m("demo", Config{}.to_json(), 7);
  m.add_input(dir / "a.txt");
  m.add_artifact(dir, "a.txt");
  m.summary()["n"] = 1;
  m.write(dir);
  std::ifstream in(dir / "manifest.json");
  const auto j = nlohmann::json::parse(in);
  EXPECT_EQ(j["command"], "demo");
  EXPECT_EQ(j["seed"], 7);
  EXPECT_EQ(j["artifacts"][0]["sha256"], sha256_hex("abc"));
  EXPECT_EQ(j["inputs"][0]["sha256"], sha256_hex("abc"));
  EXPECT_EQ(j["summary"]["n"], 1);
  fs::remove_all(dir);
}

TEST(Pipeline, InferIsDeterministic) {
  synth::CouplingSpec spec;
  spec.arity = 3;
  spec.frames = 12;
  const auto pair = synth::gen_coupled_pair(spec, 2);
  const std::vector<ingest::DetectionSequence> seqs{pair.x, pair.y};
  Config cfg;
  cfg.arity = 3;
  cfg.gamma1 = 1.0;
  cfg.gamma2 = 1.0;
  cfg.gibbs_burnin = 20;
  cfg.gibbs_samples = 60;
  cfg.p = 4;
  cfg.seed = 3;
  const auto a = infer(seqs, cfg, 1);
  const auto b = infer(seqs, cfg, 2);
  ASSERT_EQ(a.symbols.size(), 2u);
  EXPECT_EQ(a.symbols[0].realizations(), 60u);
  EXPECT_EQ(a.symbols[0].frames(), 12u);
  EXPECT_EQ(a.symbols, b.symbols);
  EXPECT_EQ(a.codebook, b.codebook);
  EXPECT_FALSE(a.fit.has_value());
}

TEST(Pipeline, SafeNames) {
  EXPECT_EQ(safe_name("a/b c"), safe_name("a/b c"));
  EXPECT_EQ(safe_name("plain_01"), "plain_01");
  EXPECT_EQ(safe_name("a/b").find('/'), std::string::npos);
}
