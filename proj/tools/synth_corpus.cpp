// Writes a deterministic stand-in corpus of 150 Lode Runner style levels in VGLC text format.
// Levels cycle through three flavours (gold-heavy, platform-heavy, ladder-heavy) so the default
// thematic split has something to find. Real VGLC files can replace the output directory as-is.

#include "lode/level.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>
#include <vector>

namespace {

using lode::Cell;
using lode::Level;
using lode::TileKind;

enum class Flavour { Gold, Platform, Ladder };

int uniform(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

bool standable(const Level& l, int c, int r) {
    if (r + 1 >= l.height()) return l.at(c, r) == TileKind::Empty;
    const auto below = l.at(c, r + 1);
    return l.at(c, r) == TileKind::Empty &&
           (below == TileKind::Solid || below == TileKind::Breakable || below == TileKind::Ladder);
}

Level generate(std::mt19937_64& rng, Flavour flavour) {
    const int w = lode::kLevelWidth;
    const int h = lode::kLevelHeight;
    Level level(w, h);
    for (int c = 0; c < w; ++c) level.set(c, h - 1, TileKind::Solid);

    const int platform_count = flavour == Flavour::Platform ? uniform(rng, 5, 6) : uniform(rng, 3, 4);
    std::vector<int> rows;
    const int spacing = (h - 3) / (platform_count + 1);
    for (int i = 1; i <= platform_count; ++i) rows.push_back(std::clamp(i * spacing + uniform(rng, -1, 1), 2, h - 3));
    rows.push_back(h - 1);
    std::sort(rows.begin(), rows.end());
    rows.erase(std::unique(rows.begin(), rows.end()), rows.end());

    for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
        const int r = rows[i];
        int c = uniform(rng, 0, 3);
        const int max_len = flavour == Flavour::Platform ? 14 : 9;
        while (c < w) {
            const int len = uniform(rng, 4, max_len);
            for (int k = c; k < std::min(w, c + len); ++k) {
                level.set(k, r, uniform(rng, 0, 5) == 0 ? TileKind::Solid : TileKind::Breakable);
            }
            c += len + uniform(rng, 2, flavour == Flavour::Platform ? 3 : 6);
        }
    }

    // Ladders join consecutive platform rows; ladder-heavy levels also get long multi-floor ladders.
    const int ladders_per_gap = flavour == Flavour::Ladder ? uniform(rng, 2, 3) : uniform(rng, 1, 2);
    for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
        for (int k = 0; k < ladders_per_gap; ++k) {
            const int c = uniform(rng, 1, w - 2);
            for (int r = rows[i]; r < rows[i + 1]; ++r) level.set(c, r, TileKind::Ladder);
            level.set(c, rows[i] - 1, TileKind::Ladder);
        }
    }
    if (flavour == Flavour::Ladder) {
        const int long_ladders = uniform(rng, 2, 4);
        for (int k = 0; k < long_ladders; ++k) {
            const int c = uniform(rng, 1, w - 2);
            const int top = uniform(rng, 1, 4);
            for (int r = top; r < h - 1; ++r) level.set(c, r, TileKind::Ladder);
        }
    }

    // Ropes hang in the gaps between floors.
    const int ropes = uniform(rng, 1, 3);
    for (int k = 0; k < ropes; ++k) {
        const std::size_t gap = static_cast<std::size_t>(uniform(rng, 0, static_cast<int>(rows.size()) - 2));
        const int r = rows[gap] + 2 < rows[gap + 1] ? rows[gap] + 2 : rows[gap] - 2;
        if (r <= 0) continue;
        const int start = uniform(rng, 0, w - 8);
        const int len = uniform(rng, 4, 10);
        for (int c = start; c < std::min(w, start + len); ++c) {
            if (level.at(c, r) == TileKind::Empty) level.set(c, r, TileKind::Rope);
        }
    }

    std::vector<Cell> spots;
    for (int r = 0; r < h - 1; ++r) {
        for (int c = 0; c < w; ++c) {
            if (standable(level, c, r)) spots.push_back({c, r});
        }
    }
    std::shuffle(spots.begin(), spots.end(), rng);
    const int gold = flavour == Flavour::Gold ? uniform(rng, 12, 18) : uniform(rng, 3, 7);
    const int enemies = uniform(rng, 1, 4);
    std::size_t next = 0;
    for (int k = 0; k < gold && next < spots.size(); ++k) level.set(spots[next++], TileKind::Gold);
    for (int k = 0; k < enemies && next < spots.size(); ++k) level.set(spots[next++], TileKind::Enemy);
    if (next < spots.size()) level.set_spawn(spots[next]);
    return level;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Generate a synthetic Lode Runner level corpus"};
    std::string out_dir = "data/corpus";
    int count = 150;
    std::uint64_t seed = 1983;
    app.add_option("--out", out_dir, "Output directory");
    app.add_option("--count", count, "Number of levels");
    app.add_option("--seed", seed, "Generator seed");
    CLI11_PARSE(app, argc, argv);

    std::filesystem::create_directories(out_dir);
    for (int i = 0; i < count; ++i) {
        std::mt19937_64 rng(seed * 1000003ULL + static_cast<std::uint64_t>(i));
        const auto flavour = static_cast<Flavour>(i % 3);
        const auto level = generate(rng, flavour);
        std::ostringstream name;
        name << "level_" << std::setw(3) << std::setfill('0') << (i + 1) << ".txt";
        std::ofstream out(std::filesystem::path(out_dir) / name.str());
        out << lode::serialize_level(level);
    }
    std::cout << "wrote " << count << " levels to " << out_dir << "\n";
    return 0;
}
