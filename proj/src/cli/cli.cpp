#include "lode/cli.hpp"

#include "lode/codec.hpp"
#include "lode/editor.hpp"
#include "lode/evaluate.hpp"
#include "lode/playability.hpp"
#include "lode/service/server.hpp"
#include "lode/share.hpp"
#include "lode/suggest.hpp"
#include "lode/vae.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

namespace lode::cli {

namespace fs = std::filesystem;
using codec::json;

namespace {

/// Bad input from the operator: missing paths, malformed files, inconsistent options.
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct Options {
    std::string corpus = "data/corpus";
    std::string split = "data/split.json";
    std::string models = "models";
    std::string data_dir = "var/lode";
    std::string preset = "desk";
    std::uint64_t seed = 20210817;
    std::string format = "text";

    // subcommand specifics
    std::string out;
    std::string level;
    std::vector<std::string> themes;
    int epochs = 0;
    int iterations = 10;
    int generation = 0;
    int limit = 0;
    int scale = 8;
    std::string model_theme = "All";
    std::string host = "127.0.0.1";
    int port = 8080;
    int max_refreshes = editor::kMaxRefreshes;
    int max_wand = editor::kMaxWandTiles;
    double expiry_hours = 24.0;
};

bool as_json(const Options& o) { return o.format == "json"; }

void require_dir(const std::string& path, const char* what) {
    if (!fs::is_directory(path)) throw UsageError(std::string(what) + " directory not found: " + path);
}

void require_file(const std::string& path, const char* what) {
    if (!fs::is_regular_file(path)) throw UsageError(std::string(what) + " file not found: " + path);
}

std::vector<CorpusEntry> corpus_of(const Options& o) {
    require_dir(o.corpus, "corpus");
    return load_corpus(o.corpus);
}

std::vector<std::string> ids_of(const std::vector<CorpusEntry>& corpus) {
    std::vector<std::string> ids;
    for (const auto& e : corpus) ids.push_back(e.id);
    return ids;
}

DatasetSplit split_of(const Options& o, const std::vector<CorpusEntry>& corpus) {
    require_file(o.split, "split");
    const auto ids = ids_of(corpus);
    return load_split(o.split, ids);
}

std::vector<Level> levels_for(Theme theme, const DatasetSplit& split, const std::vector<CorpusEntry>& corpus) {
    const auto ids = theme == Theme::All ? split.all() : split.ids(theme);
    std::map<std::string, const Level*> by_id;
    for (const auto& e : corpus) by_id[e.id] = &e.level;
    std::vector<Level> out;
    for (const auto& id : ids) out.push_back(by_id.at(id)->without_spawn());
    return out;
}

Theme theme_arg(const std::string& name) {
    const auto t = theme_from_name(name);
    if (!t) throw UsageError("unknown theme '" + name + "' (Gold, Platform, Ladder, All)");
    return *t;
}

Level level_arg(const Options& o) {
    if (o.level.empty()) return Level();
    require_file(o.level, "level");
    std::vector<ParseWarning> warnings;
    Level level = load_level_file(o.level, TileCharset::vglc(), &warnings);
    if (!warnings.empty()) {
        const auto& w = warnings.front();
        throw UsageError(o.level + ":" + std::to_string(w.line) + ":" + std::to_string(w.column) + ": " + w.message);
    }
    return level;
}

vae::VaeModel model_arg(const Options& o, Theme theme) {
    const auto path = fs::path(o.models) / suggest::model_file_name(theme);
    require_file(path.string(), "model");
    return vae::load_model_file(path);
}

suggest::ModelSet models_arg(const Options& o) {
    require_dir(o.models, "models");
    for (const auto t : {Theme::Platform, Theme::Ladder, Theme::Gold, Theme::All}) {
        require_file((fs::path(o.models) / suggest::model_file_name(t)).string(), "model");
    }
    return suggest::load_model_set(o.models);
}

vae::VaeConfig preset_config(const Options& o) {
    vae::VaeConfig cfg;
    if (o.preset == "desk") {
        cfg = vae::VaeConfig::desk();
    } else if (o.preset == "paper") {
        cfg = vae::VaeConfig::paper();
    } else {
        throw UsageError("unknown preset '" + o.preset + "' (desk, paper)");
    }
    cfg.seed = o.seed;
    if (o.epochs > 0) cfg.epochs = o.epochs;
    cfg.validate();
    return cfg;
}

std::string ascii(const Level& level) { return serialize_level(level); }

void write_ppm(const Level& level, int scale, const fs::path& path) {
    static constexpr std::array<std::array<unsigned char, 3>, kTileKinds> kColors = {{
        {120, 60, 20},    // solid
        {190, 110, 60},   // breakable
        {230, 230, 230},  // ladder
        {150, 150, 150},  // rope
        {255, 200, 0},    // gold
        {220, 40, 40},    // enemy
        {0, 0, 0},        // empty
    }};
    static constexpr std::array<unsigned char, 3> kSpawn = {40, 120, 255};
    if (scale < 1) throw UsageError("scale must be positive");
    const int w = level.width() * scale;
    const int h = level.height() * scale;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "P6\n" << w << ' ' << h << "\n255\n";
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const Cell c{x / scale, y / scale};
            const auto& rgb = level.spawn() == c ? kSpawn : kColors[tile_index(level.at(c))];
            out.write(reinterpret_cast<const char*>(rgb.data()), 3);
        }
    }
}

// ---------------------------------------------------------------------------

int cmd_augment(const Options& o, std::ostream& out, std::ostream& err) {
    const auto corpus = corpus_of(o);
    std::vector<Level> levels;
    for (const auto& e : corpus) levels.push_back(e.level.without_spawn());
    const auto grids = augment(levels);
    if (corpus.empty()) err << "warning: no level files in " << o.corpus << "\n";
    if (as_json(o)) {
        out << json{{"levels", corpus.size()}, {"grids", grids.size()}}.dump() << "\n";
    } else {
        out << corpus.size() << " levels -> " << grids.size() << " augmented grids\n";
    }
    return kExitOk;
}

int cmd_make_split(const Options& o, std::ostream& out) {
    const auto corpus = corpus_of(o);
    const auto split = heuristic_split(corpus);
    const std::string target = o.out.empty() ? o.split : o.out;
    if (fs::path(target).has_parent_path()) fs::create_directories(fs::path(target).parent_path());
    std::ofstream f(target);
    f << split_to_json(split) << "\n";
    if (!f) throw std::runtime_error("cannot write " + target);
    out << "wrote " << target << "\n";
    return kExitOk;
}

int cmd_train(const Options& o, std::ostream& out) {
    const auto corpus = corpus_of(o);
    const auto split = split_of(o, corpus);
    const auto cfg = preset_config(o);
    std::vector<Theme> themes;
    for (const auto& name : o.themes) themes.push_back(theme_arg(name));
    if (themes.empty()) themes = {Theme::Gold, Theme::Platform, Theme::Ladder, Theme::All};
    fs::create_directories(o.models);
    for (const auto theme : themes) {
        const auto levels = levels_for(theme, split, corpus);
        const auto grids = augment(levels);
        const std::string name(theme_name(theme));
        out << "training VAE-" << name << " on " << grids.size() << " grids, " << cfg.epochs << " epochs\n" << std::flush;
        vae::TrainOptions options;
        options.dataset_name = name;
        const int every = std::max(1, cfg.epochs / 10);
        options.on_epoch = [&](const vae::EpochStats& s) {
            if (s.epoch % every == 0) {
                out << "  epoch " << s.epoch << " loss " << s.loss << " (cce " << s.reconstruction << ", kl " << s.kl
                    << ")\n"
                    << std::flush;
            }
        };
        const auto model = vae::train(cfg, grids, options);
        const auto model_path = fs::path(o.models) / suggest::model_file_name(theme);
        vae::save_model_file(model, model_path);
        auto csv_name = suggest::model_file_name(theme);
        csv_name.replace(csv_name.find(".levae"), 6, "-loss.csv");
        std::ofstream csv(fs::path(o.models) / csv_name);
        csv << "epoch,loss,reconstruction,kl,learning_rate\n" << std::setprecision(9);
        for (const auto& s : model.info.history) {
            csv << s.epoch << ',' << s.loss << ',' << s.reconstruction << ',' << s.kl << ',' << s.learning_rate << "\n";
        }
        if (!csv) throw std::runtime_error("cannot write loss history for " + name);
        out << "  wrote " << model_path.string() << "\n";
    }
    return kExitOk;
}

int cmd_eval(const Options& o, std::ostream& out) {
    const Theme theme = theme_arg(o.model_theme);
    const auto model = model_arg(o, theme);
    if (model.config().input_dim != kGridValues) throw UsageError("model input size does not match 22x42x7 level grids");
    const auto corpus = corpus_of(o);
    std::vector<std::pair<std::string, Level>> levels;
    if (fs::is_regular_file(o.split)) {
        const auto split = load_split(o.split, ids_of(corpus));
        const auto ids = theme == Theme::All ? split.all() : split.ids(theme);
        for (const auto& e : corpus) {
            if (std::find(ids.begin(), ids.end(), e.id) != ids.end()) levels.emplace_back(e.id, e.level.without_spawn());
        }
    } else {
        for (const auto& e : corpus) levels.emplace_back(e.id, e.level.without_spawn());
    }
    if (o.limit > 0 && levels.size() > static_cast<std::size_t>(o.limit)) levels.resize(static_cast<std::size_t>(o.limit));
    if (levels.empty()) throw UsageError("no levels to evaluate");

    json per_level = json::array();
    double accuracy_sum = 0.0;
    std::vector<double> mean_curve(static_cast<std::size_t>(o.iterations) + 1, 0.0);
    for (const auto& [id, level] : levels) {
        const double acc = eval::tile_accuracy(model, level);
        const auto curve = eval::convergence_curve(model, level, level, o.iterations);
        accuracy_sum += acc;
        for (std::size_t i = 0; i < curve.size(); ++i) mean_curve[i] += curve[i] / static_cast<double>(levels.size());
        per_level.push_back({{"id", id}, {"accuracy", acc}, {"curve", curve}});
    }
    const double mean_accuracy = accuracy_sum / static_cast<double>(levels.size());
    if (as_json(o)) {
        out << json{{"model", theme_name(theme)}, {"levels", per_level}, {"mean_accuracy", mean_accuracy}, {"mean_curve", mean_curve}}
                   .dump(2)
            << "\n";
        return kExitOk;
    }
    out << std::fixed << std::setprecision(4);
    for (const auto& l : per_level) out << l["id"].get<std::string>() << "  accuracy " << l["accuracy"].get<double>() << "\n";
    out << "mean accuracy " << mean_accuracy << " over " << levels.size() << " levels\n";
    out << "convergence (mean hamming to source):";
    out << std::setprecision(2);
    for (const double d : mean_curve) out << ' ' << d;
    out << "\n";
    return kExitOk;
}

int cmd_suggest(const Options& o, std::ostream& out) {
    const auto models = models_arg(o);
    const Level level = level_arg(o);
    const auto set = suggest::generate_set(models, level, o.seed, o.generation);
    if (!o.out.empty()) {
        fs::create_directories(o.out);
        for (const auto& s : set.items) {
            std::ofstream f(fs::path(o.out) / ("suggestion_" + std::to_string(s.id) + ".txt"));
            f << ascii(s.level);
        }
    }
    if (as_json(o)) {
        out << codec::suggestions_to_json(set).dump(2) << "\n";
        return kExitOk;
    }
    for (const auto& s : set.items) {
        out << "[" << s.id << "] " << suggest::role_name(s.source) << " / " << suggest::variance_name(s.variance) << "\n"
            << ascii(s.level) << "\n";
    }
    return kExitOk;
}

int cmd_score(const Options& o, std::ostream& out) {
    const auto model = model_arg(o, Theme::All);
    const Level level = level_arg(o);
    const Level recon = vae::reconstruct(model, level.without_spawn());
    const double score = editor::originality_from_reconstruction(level, recon);
    const int distance = hamming_distance(level, recon);
    if (as_json(o)) {
        out << json{{"score", score}, {"hamming", distance}, {"area", level.area()}, {"below_threshold", score < 25.0}}.dump()
            << "\n";
    } else {
        out << "originality " << std::fixed << std::setprecision(2) << score << "% (" << distance << "/" << level.area()
            << " cells differ from the VAE-All reconstruction)" << (score < 25.0 ? " [below 25%]" : "") << "\n";
    }
    return kExitOk;
}

int cmd_check(const Options& o, std::ostream& out) {
    const Level level = level_arg(o);
    const auto report = check_playability(level);
    if (as_json(o)) {
        out << codec::report_to_json(report).dump(2) << "\n";
        return kExitOk;
    }
    out << (report.playable ? "playable" : "not playable") << "\n"
        << "spawn: " << (report.has_spawn ? "yes" : "missing") << "\n"
        << "gold reachable: " << report.reachable_gold << "/" << report.total_gold << "\n";
    for (const auto c : report.unreachable_cells) out << "  unreachable gold at col " << c.col << ", row " << c.row << "\n";
    out << "note: " << report.note << "\n";
    return kExitOk;
}

int cmd_render(const Options& o, std::ostream& out) {
    if (o.level.empty()) throw UsageError("render needs --level");
    const Level level = level_arg(o);
    out << ascii(level);
    if (!o.out.empty()) {
        write_ppm(level, o.scale, o.out);
        out << "wrote " << o.out << "\n";
    }
    return kExitOk;
}

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int) { g_stop = true; }

int cmd_serve(const Options& o, std::ostream& out) {
    const auto models = models_arg(o);
    service::StoreConfig cfg;
    cfg.data_dir = o.data_dir;
    cfg.budgets = {o.max_refreshes, o.max_wand};
    cfg.expiry_ms = static_cast<std::int64_t>(o.expiry_hours * 3600.0 * 1000.0);
    const auto all = models.all;
    service::SessionStore store(cfg, editor::model_generator(models),
                                [all](const Level& level) { return editor::originality_score(level, *all); });
    service::Server server(store);
    const int port = server.bind(o.host, o.port);
    out << "listening on http://" << o.host << ":" << port << "\n" << std::flush;
    g_stop = false;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::thread watcher([&] {
        while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
        server.stop();
    });
    server.run();
    g_stop = true;
    watcher.join();
    store.write_snapshot();
    return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    Options o;
    CLI::App app{"Lode Runner level VAEs and the suggestion-only level editor service", "lode"};
    app.require_subcommand(1);
    app.add_option("--format", o.format, "Output format")->check(CLI::IsMember({"text", "json"}));
    app.add_option("--seed", o.seed, "Random seed");

    auto corpus_opt = [&](CLI::App* c) { c->add_option("--corpus", o.corpus, "Directory of level text files"); };
    auto split_opt = [&](CLI::App* c) { c->add_option("--split", o.split, "Theme split JSON"); };
    auto models_opt = [&](CLI::App* c) { c->add_option("--models", o.models, "Model directory")->envname("LODE_MODELS"); };
    auto level_opt = [&](CLI::App* c) { c->add_option("--level", o.level, "Level text file (default: empty level)"); };

    auto* augment_cmd = app.add_subcommand("augment", "Count augmented training grids");
    corpus_opt(augment_cmd);

    auto* split_cmd = app.add_subcommand("make-split", "Write a heuristic Gold/Platform/Ladder split");
    corpus_opt(split_cmd);
    split_opt(split_cmd);
    split_cmd->add_option("--out", o.out, "Output path (default: --split)");

    auto* train_cmd = app.add_subcommand("train", "Train the themed VAEs and VAE-All");
    corpus_opt(train_cmd);
    split_opt(train_cmd);
    models_opt(train_cmd);
    train_cmd->add_option("--preset", o.preset, "Training preset")->check(CLI::IsMember({"desk", "paper"}));
    train_cmd->add_option("--epochs", o.epochs, "Override the preset epoch count")->check(CLI::PositiveNumber);
    train_cmd->add_option("--theme", o.themes, "Train only these themes (Gold, Platform, Ladder, All)");

    auto* eval_cmd = app.add_subcommand("eval", "Reconstruction accuracy and iterated-reconstruction convergence");
    corpus_opt(eval_cmd);
    split_opt(eval_cmd);
    models_opt(eval_cmd);
    eval_cmd->add_option("--theme", o.model_theme, "Model to evaluate");
    eval_cmd->add_option("--iterations", o.iterations, "Reconstruction iterations")->check(CLI::NonNegativeNumber);
    eval_cmd->add_option("--limit", o.limit, "Evaluate at most this many levels")->check(CLI::NonNegativeNumber);

    auto* suggest_cmd = app.add_subcommand("suggest", "Generate the 3x2 suggestion grid for a level");
    models_opt(suggest_cmd);
    level_opt(suggest_cmd);
    suggest_cmd->add_option("--generation", o.generation, "Generation index recorded in the set");
    suggest_cmd->add_option("--out", o.out, "Directory for suggestion_<id>.txt files");

    auto* score_cmd = app.add_subcommand("score", "Originality score against VAE-All");
    models_opt(score_cmd);
    level_opt(score_cmd);

    auto* check_cmd = app.add_subcommand("check", "Static playability check (no digging)");
    level_opt(check_cmd);

    auto* render_cmd = app.add_subcommand("render", "Print a level as text and write a PPM image");
    level_opt(render_cmd);
    render_cmd->add_option("--out", o.out, "PPM output path");
    render_cmd->add_option("--scale", o.scale, "Pixels per tile")->check(CLI::PositiveNumber);

    auto* serve_cmd = app.add_subcommand("serve", "Run the editor HTTP service");
    models_opt(serve_cmd);
    serve_cmd->add_option("--data-dir", o.data_dir, "Journal and snapshot directory")->envname("LODE_DATA_DIR");
    serve_cmd->add_option("--host", o.host, "Bind address")->envname("LODE_HOST");
    serve_cmd->add_option("--port", o.port, "Bind port (0 picks a free port)")->envname("LODE_PORT");
    serve_cmd->add_option("--max-refreshes", o.max_refreshes, "Refresh budget per session")->check(CLI::NonNegativeNumber);
    serve_cmd->add_option("--max-wand", o.max_wand, "Wand budget per session")->check(CLI::NonNegativeNumber);
    serve_cmd->add_option("--expiry-hours", o.expiry_hours, "Idle session lifetime")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitValidation;
    }

    try {
        if (*augment_cmd) return cmd_augment(o, out, err);
        if (*split_cmd) return cmd_make_split(o, out);
        if (*train_cmd) return cmd_train(o, out);
        if (*eval_cmd) return cmd_eval(o, out);
        if (*suggest_cmd) return cmd_suggest(o, out);
        if (*score_cmd) return cmd_score(o, out);
        if (*check_cmd) return cmd_check(o, out);
        if (*render_cmd) return cmd_render(o, out);
        if (*serve_cmd) return cmd_serve(o, out);
    } catch (const SplitError& e) {
        err << "error: invalid split\n";
        for (const auto& p : e.problems()) err << "  " << p << "\n";
        return kExitValidation;
    } catch (const vae::ModelFormatError& e) {
        err << "error: invalid model file: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitValidation;
}

}  // namespace lode::cli
