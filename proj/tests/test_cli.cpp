#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dica/cli.hpp"
#include "dica/dataio.hpp"

using namespace dica;
namespace fs = std::filesystem;

namespace {

void put_be32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  for (int shift : {24, 16, 8, 0}) b.push_back(static_cast<std::uint8_t>(v >> shift));
}

// 40 images of 4x4: two horizontal bars (top/bottom half) and two vertical
// bars (left/right half), labelled 0..3, cycling.
struct Corpus {
  fs::path dir;
  fs::path images;
  fs::path labels;
};

Corpus make_corpus(const std::string& name) {
  Corpus c{fs::temp_directory_path() / ("dica_cli_" + name), {}, {}};
  fs::remove_all(c.dir);
  fs::create_directories(c.dir);
  c.images = c.dir / "images.idx3";
  c.labels = c.dir / "labels.idx1";

  std::vector<std::uint8_t> img, lab;
  put_be32(img, kIdxImagesMagic);
  put_be32(img, 40);
  put_be32(img, 4);
  put_be32(img, 4);
  put_be32(lab, kIdxLabelsMagic);
  put_be32(lab, 40);
  for (int n = 0; n < 40; ++n) {
    const int kind = n % 4;
    for (int r = 0; r < 4; ++r) {
      for (int col = 0; col < 4; ++col) {
        bool on = kind == 0 ? r < 2 : kind == 1 ? r >= 2 : kind == 2 ? col < 2 : col >= 2;
        img.push_back(on ? 230 : 10);
      }
    }
    lab.push_back(static_cast<std::uint8_t>(kind));
  }
  write_file(c.images, img);
  write_file(c.labels, lab);
  return c;
}

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run(std::initializer_list<std::string> args) {
  std::vector<std::string> storage{"dica"};
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& s : storage) argv.push_back(s.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  auto b = read_file(p);
  return std::string(b.begin(), b.end());
}

std::size_t count_lines(const fs::path& p) {
  std::ifstream f(p);
  std::string line;
  std::size_t n = 0;
  while (std::getline(f, line)) ++n;
  return n;
}

}  // namespace

TEST_CASE("cli: train, then every inference command") {
  const Corpus c = make_corpus("pipeline");
  const std::string model = (c.dir / "model.json").string();
  const std::string img = c.images.string();
  const std::string lab = c.labels.string();

  auto t = run({"train", "--images", img, "--count", "40", "--num-sources", "2", "--epochs", "5", "--seed", "3",
                "--out", model});
  REQUIRE(t.code == cli::kOk);
  CHECK(fs::exists(model));
  CHECK(count_lines(model + ".report.csv") == 6);
  const auto manifest = nlohmann::json::parse(slurp(model + ".manifest.json"));
  CHECK(manifest["command"] == "train");
  CHECK(manifest["flags"]["seed"] == "3");
  CHECK(manifest["flags"]["inner-cycles"] == "5");
  CHECK(manifest["flags"]["supervised"] == false);
  CHECK(manifest["elapsed_seconds"].is_number());

  // Same seed, same bytes.
  const std::string again = (c.dir / "again.json").string();
  REQUIRE(run({"train", "--images", img, "--count", "40", "--num-sources", "2", "--epochs", "5", "--seed", "3",
               "--out", again}).code == cli::kOk);
  CHECK(slurp(model) == slurp(again));

  const std::string gen = (c.dir / "gen").string();
  REQUIRE(run({"generate", "--model", model, "--all-configs", "--width", "4", "--height", "4", "--out", gen}).code ==
          cli::kOk);
  for (int s = 0; s < 4; ++s) CHECK(fs::exists(fs::path(gen) / ("config_000" + std::to_string(s) + ".pgm")));
  CHECK(fs::exists(fs::path(gen) / "manifest.json"));
  CHECK(read_file(fs::path(gen) / "config_0000.pgm").size() == 11 + 16);

  const std::string enc = (c.dir / "enc").string();
  REQUIRE(run({"encode", "--model", model, "--images", img, "--count", "5", "--width", "4", "--height", "4", "--out",
               enc}).code == cli::kOk);
  CHECK(count_lines(fs::path(enc) / "codes.csv") == 6);
  CHECK(fs::exists(fs::path(enc) / "encode_0000_forward.pgm"));

  const std::string comp = (c.dir / "comp").string();
  REQUIRE(run({"complete", "--model", model, "--images", img, "--count", "4", "--erasure", "0.25", "--width", "4",
               "--height", "4", "--out", comp}).code == cli::kOk);
  CHECK(count_lines(fs::path(comp) / "completion.csv") == 5);
  CHECK(fs::exists(fs::path(comp) / "complete_0003_posterior.pgm"));

  const std::string corr = (c.dir / "corr").string();
  REQUIRE(run({"correct", "--model", model, "--images", img, "--count", "4", "--noise", "0.1", "--width", "4",
               "--height", "4", "--out", corr}).code == cli::kOk);
  CHECK(count_lines(fs::path(corr) / "correction.csv") == 5);

  // Classification needs a label block.
  CHECK(run({"classify", "--model", model, "--images", img, "--labels", lab, "--width", "4", "--height", "4", "--out",
             (c.dir / "cls").string()}).code == cli::kMissingLabel);
  fs::remove_all(c.dir);
}

TEST_CASE("cli: supervised training and classification") {
  const Corpus c = make_corpus("supervised");
  const std::string model = (c.dir / "sup.json").string();
  const std::string img = c.images.string();
  const std::string lab = c.labels.string();
  REQUIRE(run({"train", "--images", img, "--labels", lab, "--supervised", "--count", "40", "--num-sources", "2",
               "--epochs", "10", "--seed", "1", "--out", model}).code == cli::kOk);
  const auto doc = nlohmann::json::parse(slurp(model));
  CHECK(doc["label_size"] == 10);

  const std::string cls = (c.dir / "cls").string();
  auto r = run({"classify", "--model", model, "--images", img, "--labels", lab, "--count", "0", "--width", "4",
                "--height", "4", "--out", cls});
  REQUIRE(r.code == cli::kOk);
  CHECK(count_lines(fs::path(cls) / "classify.csv") == 41);
  CHECK(slurp(fs::path(cls) / "summary.txt").find("accuracy") != std::string::npos);

  const std::string proto = (c.dir / "proto").string();
  REQUIRE(run({"prototypes", "--model", model, "--width", "4", "--height", "4", "--out", proto}).code == cli::kOk);
  for (int k = 0; k < 10; ++k) CHECK(fs::exists(fs::path(proto) / ("prototype_" + std::to_string(k) + ".pgm")));
  fs::remove_all(c.dir);
}

TEST_CASE("cli: generate options") {
  const Corpus c = make_corpus("generate");
  const std::string model = (c.dir / "m.json").string();
  REQUIRE(run({"train", "--images", c.images.string(), "--count", "8", "--num-sources", "2", "--seed", "5", "--out",
               model}).code == cli::kOk);
  const std::string out = (c.dir / "g").string();

  CHECK(run({"generate", "--model", model, "--config", "1,0", "--width", "4", "--height", "4", "--out", out}).code ==
        cli::kOk);
  CHECK(fs::exists(fs::path(out) / "config.pgm"));
  CHECK(run({"generate", "--model", model, "--soft", "0.5,0.5", "--width", "4", "--height", "4", "--out", out})
            .code == cli::kOk);
  CHECK(fs::exists(fs::path(out) / "soft.pgm"));

  CHECK(run({"generate", "--model", model, "--config", "1,0,1", "--width", "4", "--height", "4", "--out", out})
            .code == cli::kUsage);
  CHECK(run({"generate", "--model", model, "--config", "1,2", "--width", "4", "--height", "4", "--out", out}).code ==
        cli::kDimension);
  CHECK(run({"generate", "--model", model, "--width", "4", "--height", "4", "--out", out}).code == cli::kUsage);
  CHECK(run({"generate", "--model", model, "--all-configs", "--out", out}).code == cli::kUsage);
  fs::remove_all(c.dir);
}

TEST_CASE("cli: errors map to exit codes") {
  const Corpus c = make_corpus("errors");
  const std::string img = c.images.string();
  CHECK(run({}).code == cli::kUsage);
  CHECK(run({"bogus"}).code == cli::kUsage);
  CHECK(run({"train", "--out", "x.json"}).code == cli::kUsage);
  CHECK(run({"train", "--images", img, "--supervised", "--out", (c.dir / "m.json").string()}).code == cli::kUsage);
  CHECK(run({"train", "--images", img, "--count", "41", "--out", (c.dir / "m.json").string()}).code == cli::kUsage);

  write_file(c.dir / "broken.idx3", std::vector<std::uint8_t>{0, 0, 8, 3, 0});
  auto r = run({"train", "--images", (c.dir / "broken.idx3").string(), "--out", (c.dir / "m.json").string()});
  CHECK(r.code == cli::kFormat);
  CHECK(r.err.find("byte") != std::string::npos);

  write_file(c.dir / "broken.json", std::vector<std::uint8_t>{'{', '"'});
  CHECK(run({"generate", "--model", (c.dir / "broken.json").string(), "--all-configs", "--out",
             (c.dir / "g").string()}).code == cli::kFormat);

  CHECK(run({"train", "--images", img, "--count", "4", "--num-sources", "21", "--out", (c.dir / "big.json").string()})
            .code == cli::kCapacity);
  CHECK(run({"--help"}).code == cli::kOk);
  fs::remove_all(c.dir);
}
