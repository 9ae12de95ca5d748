#include "lode/cli.hpp"
#include "lode/editor.hpp"
#include "lode/playability.hpp"

#include "fixtures.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>

using json = nlohmann::json;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result lode_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "lode");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = lode::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

const std::string kCorpus = (fixtures::kData / "corpus").string();
const std::string kSplit = (fixtures::kData / "split.json").string();

std::string write_level(const std::filesystem::path& path, const lode::Level& level) {
    std::ofstream(path) << lode::serialize_level(level);
    return path.string();
}

}  // namespace

TEST_CASE("augment counts grids for the corpus") {
    const auto r = lode_cli({"augment", "--corpus", kCorpus});
    CHECK(r.code == lode::cli::kExitOk);
    CHECK(r.out == "150 levels -> 3300 augmented grids\n");
    const auto j = lode_cli({"--format", "json", "augment", "--corpus", kCorpus});
    CHECK(json::parse(j.out) == json{{"levels", 150}, {"grids", 3300}});
}

TEST_CASE("check reports playability as text and JSON") {
    fixtures::TempDir dir("check");
    lode::Level level;
    for (int c = 0; c < lode::kLevelWidth; ++c) level.set(c, 21, lode::TileKind::Solid);
    level.set(10, 20, lode::TileKind::Gold);
    level.set_spawn(lode::Cell{0, 20});
    const auto path = write_level(dir.path / "flat.txt", level);
    const auto text = lode_cli({"check", "--level", path});
    CHECK(text.code == 0);
    CHECK(text.out.rfind("playable\n", 0) == 0);
    CHECK(text.out.find("gold reachable: 1/1") != std::string::npos);
    const auto j = lode_cli({"--format", "json", "check", "--level", path});
    const auto report = json::parse(j.out);
    CHECK(report["playable"] == true);
    CHECK(report["total_gold"] == 1);

    const auto none = lode_cli({"check"});  // empty level
    CHECK(none.out.rfind("not playable\n", 0) == 0);
}

TEST_CASE("render writes a PPM image") {
    fixtures::TempDir dir("render");
    const auto path = write_level(dir.path / "empty.txt", lode::Level());
    const auto ppm = (dir.path / "empty.ppm").string();
    const auto r = lode_cli({"render", "--level", path, "--out", ppm, "--scale", "2"});
    REQUIRE(r.code == 0);
    std::ifstream in(ppm, std::ios::binary);
    std::string magic;
    int w = 0, h = 0, maxval = 0;
    in >> magic >> w >> h >> maxval;
    in.get();
    CHECK(magic == "P6");
    CHECK(w == 64);
    CHECK(h == 44);
    CHECK(maxval == 255);
    const std::string pixels((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(pixels.size() == static_cast<std::size_t>(w * h * 3));
    CHECK(pixels.find_first_not_of('\0') == std::string::npos);  // Empty renders black everywhere
    CHECK(lode_cli({"render"}).code == lode::cli::kExitValidation);
}

TEST_CASE("exit codes for bad input") {
    CHECK(lode_cli({}).code == lode::cli::kExitValidation);
    CHECK(lode_cli({"teleport"}).code == lode::cli::kExitValidation);
    CHECK(lode_cli({"augment", "--corpus", "/nonexistent"}).code == lode::cli::kExitValidation);
    CHECK(lode_cli({"check", "--level", "/nonexistent.txt"}).code == lode::cli::kExitValidation);
    CHECK(lode_cli({"score", "--models", "/nonexistent"}).code == lode::cli::kExitValidation);
    CHECK(lode_cli({"--format", "yaml", "augment"}).code == lode::cli::kExitValidation);
    CHECK(lode_cli({"train", "--preset", "huge"}).code == lode::cli::kExitValidation);
    const auto r = lode_cli({"suggest", "--models", "/nonexistent"});
    CHECK(r.code == lode::cli::kExitValidation);
    CHECK(r.err.find("error:") != std::string::npos);

    fixtures::TempDir dir("badlevel");
    std::ofstream(dir.path / "bad.txt") << "XXXX\n";
    CHECK(lode_cli({"check", "--level", (dir.path / "bad.txt").string()}).code == lode::cli::kExitValidation);
}

TEST_CASE("train writes a model and loss history, eval reads it back") {
    fixtures::TempDir dir("train");
    const auto models = (dir.path / "models").string();
    const auto r = lode_cli({"train", "--corpus", kCorpus, "--split", kSplit, "--models", models, "--epochs", "1",
                             "--theme", "Gold"});
    REQUIRE(r.code == 0);
    CHECK(std::filesystem::exists(dir.path / "models" / "vae-gold.levae"));
    std::ifstream csv(dir.path / "models" / "vae-gold-loss.csv");
    std::string header, row;
    std::getline(csv, header);
    std::getline(csv, row);
    CHECK(header == "epoch,loss,reconstruction,kl,learning_rate");
    CHECK(row.rfind("1,", 0) == 0);

    const auto e = lode_cli({"--format", "json", "eval", "--corpus", kCorpus, "--split", kSplit, "--models", models,
                             "--theme", "Gold", "--limit", "2"});
    REQUIRE(e.code == 0);
    const auto j = json::parse(e.out);
    CHECK(j["model"] == "Gold");
    CHECK(j["levels"].size() == 2);
    CHECK(j["mean_curve"].size() == 11);
    CHECK(j["mean_accuracy"].get<double>() >= 0.0);
    CHECK(j["mean_accuracy"].get<double>() <= 1.0);

    CHECK(lode_cli({"eval", "--corpus", kCorpus, "--models", models, "--theme", "Ladder"}).code ==
          lode::cli::kExitValidation);
}

TEST_CASE("score and suggest use a model directory") {
    fixtures::TempDir dir("score");
    const auto& set = fixtures::tiny_models();
    lode::vae::save_model_file(*set.platform, dir.path / "vae-platform.levae");
    lode::vae::save_model_file(*set.ladder, dir.path / "vae-ladder.levae");
    lode::vae::save_model_file(*set.gold, dir.path / "vae-gold.levae");
    lode::vae::save_model_file(*set.all, dir.path / "vae-all.levae");
    const auto models = dir.path.string();

    const auto s = lode_cli({"--format", "json", "score", "--models", models});
    REQUIRE(s.code == 0);
    const auto score = json::parse(s.out);
    CHECK(score["score"].get<double>() == doctest::Approx(lode::editor::originality_score(lode::Level(), *set.all)));
    CHECK(score["area"] == 704);

    const auto out_dir = dir.path / "sugg";
    const auto g = lode_cli({"--format", "json", "--seed", "7", "suggest", "--models", models, "--out", out_dir.string()});
    REQUIRE(g.code == 0);
    const auto j = json::parse(g.out);
    CHECK(j["seed"] == "7");
    CHECK(j["items"].size() == 6);
    for (int id = 0; id < 6; ++id) CHECK(std::filesystem::exists(out_dir / ("suggestion_" + std::to_string(id) + ".txt")));
    const auto again = lode_cli({"--format", "json", "--seed", "7", "suggest", "--models", models});
    CHECK(json::parse(again.out) == j);
}
