#include "pxgen/toolkit/cli.hpp"

#include "pxgen/analysis.hpp"
#include "pxgen/criteria.hpp"
#include "pxgen/discovery.hpp"
#include "pxgen/errors.hpp"
#include "pxgen/model.hpp"
#include "pxgen/toolkit/idx.hpp"
#include "pxgen/toolkit/pgm.hpp"
#include "pxgen/toolkit/score_table.hpp"
#include "pxgen/toolkit/synth.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

namespace pxgen::toolkit {

namespace {

using nlohmann::json;

const std::vector<std::string> kExtrinsicNames{"mse", "frechet_per_anchor", "frechet"};
const std::vector<std::string> kQuadrantNames{"HIHE", "HILE", "LIHE", "LILE"};

struct DataOpts {
    std::string images;
    std::string labels;
    int label = -1;
    std::size_t limit = 0;

    void add(CLI::App* cmd, const std::string& what) {
        cmd->add_option("--images", images, what + " (IDX image file)")->required();
        cmd->add_option("--labels", labels, "IDX label file matching --images");
        cmd->add_option("--label", label, "keep only this label (needs --labels)");
        cmd->add_option("--limit", limit, "keep at most this many images (0 = all)");
    }

    std::vector<Image> load() const {
        auto imgs = read_idx_images(images);
        if (label >= 0) {
            if (labels.empty()) {
                throw InvalidArgument("--label needs --labels");
            }
            const auto labs = read_idx_labels(labels);
            if (labs.size() != imgs.size()) {
                throw FormatError("label file holds " + std::to_string(labs.size()) +
                                  " labels for " + std::to_string(imgs.size()) + " images");
            }
            std::vector<Image> kept;
            for (std::size_t i = 0; i < imgs.size(); ++i) {
                if (labs[i] == label) {
                    kept.push_back(std::move(imgs[i]));
                }
            }
            imgs = std::move(kept);
        }
        if (limit > 0 && imgs.size() > limit) {
            imgs.resize(limit);
        }
        if (imgs.empty()) {
            throw InsufficientData("no images selected from " + images);
        }
        return imgs;
    }
};

struct TrainOpts {
    TrainConfig cfg;

    void add(CLI::App* cmd) {
        cmd->add_option("--epochs", cfg.epochs, "training epochs")->capture_default_str();
        cmd->add_option("--batch-size", cfg.batch_size, "minibatch size")->capture_default_str();
        cmd->add_option("--lr", cfg.learning_rate, "Adam learning rate")->capture_default_str();
        cmd->add_option("--latent-dim", cfg.latent_dim, "latent dimension")->capture_default_str();
        cmd->add_option("--hidden", cfg.hidden_dims, "hidden widths, e.g. 256,64")
            ->delimiter(',')
            ->capture_default_str();
        cmd->add_option("--checkpoint-interval", cfg.checkpoint_interval,
                        "store a checkpoint every this many epochs")
            ->capture_default_str();
    }
};

FeatureMap feature_map_for(const VaeParams& p, int window) {
    FeatureMap fm;
    fm.width = p.image_width;
    fm.height = p.image_height;
    fm.window = window;
    return fm;
}

FeatureMap feature_map_for(const Image& im, int window) {
    FeatureMap fm;
    fm.width = im.width;
    fm.height = im.height;
    fm.window = window;
    return fm;
}

void print_json(std::ostream& out, const json& j) { out << j.dump(2) << '\n'; }

json train_config_json(const TrainConfig& c) {
    return {{"epochs", c.epochs},
            {"batch_size", c.batch_size},
            {"learning_rate", c.learning_rate},
            {"checkpoint_interval", c.checkpoint_interval},
            {"latent_dim", c.latent_dim},
            {"hidden_dims", c.hidden_dims},
            {"seed", c.seed}};
}

std::vector<Image> pick(std::span<const Image> all, std::span<const std::size_t> ids) {
    std::vector<Image> out;
    for (std::size_t id : ids) {
        if (id >= all.size()) {
            throw FormatError("anchor id " + std::to_string(id) + " is outside the " +
                              std::to_string(all.size()) + "-image anchor file");
        }
        out.push_back(all[id]);
    }
    return out;
}

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t mid = v.size() / 2;
    return v.size() % 2 == 1 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

json summarize_scores(const ScoreTable& t) {
    json groups = json::object();
    std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> by;
    for (const auto& r : t.rows) {
        auto& [in, ex] = by[std::string(to_string(r.quadrant))];
        in.push_back(r.intrinsic);
        ex.push_back(r.extrinsic);
    }
    for (const auto& [q, v] : by) {
        groups[q] = {{"count", v.first.size()},
                     {"median_intrinsic", median_of(v.first)},
                     {"median_extrinsic", median_of(v.second)}};
    }
    return {{"rows", t.rows.size()},
            {"model_checksum", t.model_checksum},
            {"thresholds", t.thresholds ? thresholds_to_json(*t.thresholds) : json(nullptr)},
            {"groups", groups}};
}

}  // namespace

json summarize_report(const ValidationReport& report) {
    json finals = json::object();
    json per_step = json::object();
    for (Scenario s : report.scenarios()) {
        const std::string name(to_string(s));
        finals[name] = report.final_step_median(s);
        std::map<int, std::vector<double>> steps;
        for (const auto& c : report.cells) {
            if (c.scenario == s) {
                steps[c.step].push_back(c.distance);
            }
        }
        for (auto& [step, v] : steps) {
            per_step[name][std::to_string(step)] = median_of(v);
        }
    }
    return {{"seeds", report.seeds()},
            {"cells", report.cells.size()},
            {"final_step_median", finals},
            {"step_median", per_step},
            {"config", report.config}};
}

int cli_dispatch(const std::vector<std::string>& args) {
    return cli_dispatch(args, std::cout, std::cerr);
}

int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"pxgen: anchor-based explanations for generative models", "pxgen"};
    app.require_subcommand(1);
    app.failure_message(CLI::FailureMessage::help);
    app.set_config("--config", "", "TOML/INI file with one [section] per subcommand");
    app.allow_config_extras(CLI::config_extras_mode::error);

    std::function<void()> run;
    std::uint64_t seed = 0;
    auto add_seed = [&](CLI::App* cmd) {
        cmd->add_option("--seed", seed, "RNG seed (falls back to $PXGEN_SEED, then 0)")
            ->envname("PXGEN_SEED");
    };

    // synth ------------------------------------------------------------------
    struct {
        std::size_t n = 1000;
        int class_id = 0;
        double jitter = 1.0;
        std::string out, labels_out;
    } sy;
    auto* synth = app.add_subcommand("synth", "render a synthetic ring/bar dataset as IDX");
    synth->add_option("--n", sy.n, "number of images")->capture_default_str();
    synth->add_option("--class", sy.class_id, "0 = ring, 1 = bar")->capture_default_str();
    synth->add_option("--jitter", sy.jitter, "shape jitter scale")->capture_default_str();
    synth->add_option("--out", sy.out, "IDX image file")->required();
    synth->add_option("--labels-out", sy.labels_out, "IDX label file");
    add_seed(synth);
    synth->callback([&] {
        run = [&] {
            const auto imgs = synth_dataset(sy.n, sy.class_id, seed, sy.jitter);
            write_idx(sy.out, imgs);
            if (!sy.labels_out.empty()) {
                write_idx_labels(sy.labels_out, std::vector<int>(imgs.size(), sy.class_id));
            }
            print_json(out, {{"images", imgs.size()}, {"class", sy.class_id}, {"seed", seed}});
        };
    });

    // train ------------------------------------------------------------------
    DataOpts tr_data;
    TrainOpts tr;
    std::string tr_out, tr_ckpt_dir, tr_loss_out;
    auto* train_cmd = app.add_subcommand("train", "train a VAE and write its checkpoint");
    tr_data.add(train_cmd, "training set");
    tr.add(train_cmd);
    train_cmd->add_option("--out", tr_out, "final checkpoint")->required();
    train_cmd->add_option("--checkpoint-dir", tr_ckpt_dir,
                          "also write every scheduled checkpoint here (epoch_NNNN.ckpt)");
    train_cmd->add_option("--loss-out", tr_loss_out, "per-epoch loss curve as JSON");
    add_seed(train_cmd);
    train_cmd->callback([&] {
        run = [&] {
            tr.cfg.seed = seed;
            const auto data = tr_data.load();
            const auto result = train(data, tr.cfg);
            save_checkpoint(tr_out, Checkpoint{tr.cfg.epochs, result.params, tr.cfg.learning_rate, seed});
            json written = json::array();
            if (!tr_ckpt_dir.empty()) {
                for (const auto& c : result.checkpoints) {
                    std::ostringstream name;
                    name << tr_ckpt_dir << "/epoch_" << std::setw(4) << std::setfill('0') << c.epoch
                         << ".ckpt";
                    save_checkpoint(name.str(), c);
                    written.push_back(name.str());
                }
            }
            if (!tr_loss_out.empty()) {
                write_file(tr_loss_out, json{{"loss", result.loss_curve}}.dump(2) + "\n");
            }
            print_json(out, {{"images", data.size()},
                             {"final_loss", result.loss_curve.back()},
                             {"checksum", params_checksum(result.params)},
                             {"checkpoints", written},
                             {"config", train_config_json(tr.cfg)}});
        };
    });

    // sample -----------------------------------------------------------------
    struct {
        std::string model, out, idx_out;
        std::size_t n = 100;
        std::size_t columns = 10;
    } sa;
    auto* sample_cmd = app.add_subcommand("sample", "decode z ~ N(0, I) into images");
    sample_cmd->add_option("--model", sa.model, "checkpoint")->required();
    sample_cmd->add_option("--n", sa.n, "number of samples")->capture_default_str();
    sample_cmd->add_option("--out", sa.out, "PGM grid");
    sample_cmd->add_option("--idx-out", sa.idx_out, "IDX image file");
    sample_cmd->add_option("--columns", sa.columns, "grid columns")->capture_default_str();
    add_seed(sample_cmd);
    sample_cmd->callback([&] {
        run = [&] {
            if (sa.out.empty() && sa.idx_out.empty()) {
                throw InvalidArgument("sample: give --out and/or --idx-out");
            }
            const auto params = load_checkpoint(sa.model).params;
            const auto imgs = sample(params, sa.n, seed);
            if (!sa.out.empty()) write_grid(imgs, sa.columns, sa.out);
            if (!sa.idx_out.empty()) write_idx(sa.idx_out, imgs);
            print_json(out, {{"samples", imgs.size()}, {"seed", seed}});
        };
    });

    // score ------------------------------------------------------------------
    struct {
        std::string model, anchors, out, extrinsic = "mse";
        int window = 4;
    } sc;
    auto* score_cmd = app.add_subcommand("score", "score anchors against a model");
    score_cmd->add_option("--model", sc.model, "checkpoint")->required();
    score_cmd->add_option("--anchors", sc.anchors, "IDX image file")->required();
    score_cmd->add_option("--extrinsic", sc.extrinsic, "extrinsic measure")
        ->check(CLI::IsMember(kExtrinsicNames))
        ->capture_default_str();
    score_cmd->add_option("--window", sc.window, "avg-pool window for Fréchet features")
        ->capture_default_str();
    score_cmd->add_option("--out", sc.out, "score table (CSV)")->required();
    score_cmd->callback([&] {
        run = [&] {
            const auto params = load_checkpoint(sc.model).params;
            const auto anchors = read_idx_images(sc.anchors);
            const auto kind = parse_extrinsic_kind(sc.extrinsic);
            ScoreTable t;
            t.model_checksum = params_checksum(params);
            t.config = {{"command", "score"},
                        {"anchors", sc.anchors},
                        {"anchor_count", anchors.size()},
                        {"extrinsic", to_string(kind)},
                        {"feature_window", sc.window}};
            t.rows = score_anchors(params, anchors, kind, feature_map_for(params, sc.window));
            save_score_table(sc.out, t);
            print_json(out, summarize_scores(t));
        };
    });

    // calibrate --------------------------------------------------------------
    struct {
        std::string model, out, mode = "avg_max", extrinsic = "mse";
        double p = 95.0;
        int n = 300;
        int r = 10;
        int window = 4;
    } ca;
    auto* calib_cmd = app.add_subcommand("calibrate", "derive affinity cutoffs from generated samples");
    calib_cmd->add_option("--model", ca.model, "checkpoint")->required();
    calib_cmd->add_option("--mode", ca.mode, "cutoff statistic")
        ->check(CLI::IsMember({"avg_max", "percentile"}))
        ->capture_default_str();
    calib_cmd->add_option("--p", ca.p, "percentile (percentile mode)")->capture_default_str();
    calib_cmd->add_option("--n", ca.n, "samples per iteration")->capture_default_str();
    calib_cmd->add_option("--r", ca.r, "iterations")->capture_default_str();
    calib_cmd->add_option("--extrinsic", ca.extrinsic, "extrinsic measure")
        ->check(CLI::IsMember(kExtrinsicNames))
        ->capture_default_str();
    calib_cmd->add_option("--window", ca.window, "avg-pool window")->capture_default_str();
    calib_cmd->add_option("--out", ca.out, "thresholds JSON")->required();
    add_seed(calib_cmd);
    calib_cmd->callback([&] {
        run = [&] {
            const auto params = load_checkpoint(ca.model).params;
            CalibrationConfig cfg;
            cfg.mode = parse_threshold_mode(ca.mode);
            cfg.percentile = ca.p;
            cfg.samples_per_iteration = ca.n;
            cfg.iterations = ca.r;
            cfg.seed = seed;
            cfg.extrinsic_kind = parse_extrinsic_kind(ca.extrinsic);
            cfg.feature_map = feature_map_for(params, ca.window);
            const auto t = calibrate(params, cfg);
            const json j = thresholds_to_json(t);
            write_file(ca.out, j.dump(2) + "\n");
            print_json(out, j);
        };
    });

    // classify ---------------------------------------------------------------
    struct {
        std::string scores, thresholds, out, summary;
    } cl;
    auto* classify_cmd = app.add_subcommand("classify", "assign quadrants to a score table");
    classify_cmd->add_option("--scores", cl.scores, "score table")->required();
    classify_cmd->add_option("--thresholds", cl.thresholds, "thresholds JSON")->required();
    classify_cmd->add_option("--out", cl.out, "output table (default: rewrite --scores)");
    classify_cmd->add_option("--summary", cl.summary, "quadrant-size JSON");
    classify_cmd->callback([&] {
        run = [&] {
            auto table = load_score_table(cl.scores);
            json tj;
            try {
                tj = json::parse(read_file(cl.thresholds));
            } catch (const json::exception& e) {
                throw FormatError("thresholds: " + std::string(e.what()));
            }
            const Thresholds t = thresholds_from_json(tj);
            if (table.config.contains("extrinsic") &&
                table.config["extrinsic"] != std::string(to_string(t.extrinsic_kind))) {
                throw FormatError("thresholds were calibrated for extrinsic '" +
                                  std::string(to_string(t.extrinsic_kind)) +
                                  "' but the table holds '" +
                                  table.config["extrinsic"].get<std::string>() + "'");
            }
            const auto part = classify(table.rows, t);
            table.thresholds = t;
            save_score_table(cl.out.empty() ? cl.scores : cl.out, table);
            const json summary = {{"HIHE", part.hihe.size()},
                                  {"HILE", part.hile.size()},
                                  {"LIHE", part.lihe.size()},
                                  {"LILE", part.lile.size()},
                                  {"total", table.rows.size()}};
            if (!cl.summary.empty()) write_file(cl.summary, summary.dump(2) + "\n");
            print_json(out, summary);
        };
    });

    // subset -----------------------------------------------------------------
    struct {
        std::string scores, anchors, model, out, recon_out, view = "delusion";
        double fraction = 0.05;
        std::size_t columns = 10;
    } su;
    auto* subset_cmd = app.add_subcommand("subset", "delusion / conception anchor grids");
    subset_cmd->add_option("--scores", su.scores, "score table")->required();
    subset_cmd->add_option("--anchors", su.anchors, "IDX image file the table was scored on")
        ->required();
    subset_cmd->add_option("--view", su.view, "which subset")
        ->check(CLI::IsMember({"delusion", "conception"}))
        ->capture_default_str();
    subset_cmd->add_option("--fraction", su.fraction, "share of anchors")->capture_default_str();
    subset_cmd->add_option("--out", su.out, "PGM grid of the anchors")->required();
    subset_cmd->add_option("--model", su.model, "checkpoint, for the reconstruction grid");
    subset_cmd->add_option("--recon-out", su.recon_out, "PGM grid of reconstructions");
    subset_cmd->add_option("--columns", su.columns, "grid columns")->capture_default_str();
    subset_cmd->callback([&] {
        run = [&] {
            if (!su.recon_out.empty() && su.model.empty()) {
                throw InvalidArgument("--recon-out needs --model");
            }
            const auto table = load_score_table(su.scores);
            const auto anchors = read_idx_images(su.anchors);
            const auto pos = su.view == "delusion" ? delusion_subset(table.rows, su.fraction)
                                                   : conception_subset(table.rows, su.fraction);
            std::vector<std::size_t> ids;
            for (std::size_t i : pos) ids.push_back(table.rows[i].id);
            const auto chosen = pick(anchors, ids);
            write_grid(chosen, su.columns, su.out);
            if (!su.recon_out.empty()) {
                const auto params = load_checkpoint(su.model).params;
                std::vector<Image> recon;
                for (const auto& a : chosen) recon.push_back(reconstruct(params, a));
                write_grid(recon, su.columns, su.recon_out);
            }
            print_json(out, {{"view", su.view}, {"fraction", su.fraction}, {"ids", ids}});
        };
    });

    // select -----------------------------------------------------------------
    struct {
        std::string scores, anchors, model, out, group = "HIHE", method = "k_center",
                                                   space = "pixel";
        std::size_t k = 10;
        std::size_t columns = 0;
    } se;
    auto* select_cmd = app.add_subcommand("select", "pick k representative anchors from a quadrant");
    select_cmd->add_option("--scores", se.scores, "classified score table")->required();
    select_cmd->add_option("--anchors", se.anchors, "IDX image file the table was scored on")
        ->required();
    select_cmd->add_option("--group", se.group, "quadrant")
        ->check(CLI::IsMember(kQuadrantNames))
        ->capture_default_str();
    select_cmd->add_option("--k", se.k, "representatives")->capture_default_str();
    select_cmd->add_option("--method", se.method, "selection algorithm")
        ->check(CLI::IsMember({"k_dispersion", "k_center", "brute_dispersion", "brute_center"}))
        ->capture_default_str();
    select_cmd->add_option("--space", se.space, "distance space")
        ->check(CLI::IsMember({"pixel", "latent_mean"}))
        ->capture_default_str();
    select_cmd->add_option("--model", se.model, "checkpoint (latent_mean space)");
    select_cmd->add_option("--out", se.out, "PGM grid")->required();
    select_cmd->add_option("--columns", se.columns, "grid columns (default k)");
    select_cmd->callback([&] {
        run = [&] {
            const auto table = load_score_table(se.scores);
            if (!table.thresholds) {
                throw FormatError("select: score table has no quadrants; run classify first");
            }
            const auto anchors = read_idx_images(se.anchors);
            const Quadrant q = parse_quadrant(se.group);
            std::vector<std::size_t> group;
            for (const auto& r : table.rows) {
                if (r.quadrant == q) {
                    if (r.id >= anchors.size()) {
                        throw FormatError("anchor id " + std::to_string(r.id) +
                                          " is outside the anchor file");
                    }
                    group.push_back(r.id);
                }
            }
            const auto method = parse_selection_method(se.method);
            const auto space = parse_distance_space(se.space);
            SelectionResult res;
            if (space == DistanceSpace::LatentMean) {
                if (se.model.empty()) {
                    throw InvalidArgument("--space latent_mean needs --model");
                }
                res = select_from_group(anchors, group, se.k, method, space,
                                        load_checkpoint(se.model).params);
            } else {
                res = select_from_group(anchors, group, se.k, method, space);
            }
            write_grid(pick(anchors, res.chosen), se.columns ? se.columns : se.k, se.out);
            print_json(out, {{"group", se.group},
                             {"group_size", group.size()},
                             {"method", to_string(res.method)},
                             {"space", se.space},
                             {"chosen", res.chosen},
                             {"objective", res.objective}});
        };
    });

    // tracin -----------------------------------------------------------------
    struct {
        std::vector<std::string> checkpoints;
        std::string targets, model, out;
        std::size_t n_targets = 100;
    } tc;
    DataOpts tc_data;
    auto* tracin_cmd = app.add_subcommand("tracin", "TracIn influence of training points on targets");
    tc_data.add(tracin_cmd, "training set");
    tracin_cmd->add_option("--checkpoints", tc.checkpoints, "checkpoint files")->required();
    tracin_cmd->add_option("--targets", tc.targets, "IDX target images");
    tracin_cmd->add_option("--model", tc.model, "checkpoint to sample targets from");
    tracin_cmd->add_option("--n-targets", tc.n_targets, "sampled targets")->capture_default_str();
    tracin_cmd->add_option("--out", tc.out, "CSV index,score")->required();
    add_seed(tracin_cmd);
    tracin_cmd->callback([&] {
        run = [&] {
            if (tc.targets.empty() == tc.model.empty()) {
                throw InvalidArgument("tracin: give exactly one of --targets and --model");
            }
            const auto data = tc_data.load();
            std::vector<Checkpoint> ckpts;
            for (const auto& p : tc.checkpoints) ckpts.push_back(load_checkpoint(p));
            const auto targets = tc.targets.empty()
                                     ? sample(load_checkpoint(tc.model).params, tc.n_targets, seed)
                                     : read_idx_images(tc.targets);
            const auto scores = tracin_scores(ckpts, data, targets);
            std::string csv = "index,score\n";
            for (const auto& s : scores) {
                csv += std::to_string(s.index) + "," + format_double(s.score) + "\n";
            }
            write_file(tc.out, csv);
            print_json(out, {{"train", data.size()},
                             {"targets", targets.size()},
                             {"checkpoints", ckpts.size()}});
        };
    });

    // validate ---------------------------------------------------------------
    DataOpts va_data;
    TrainOpts va_train;
    StudyConfig study;
    std::string va_out, va_csv, va_mode = "percentile", va_extrinsic = "mse";
    bool va_no_tracin = false;
    auto* validate_cmd = app.add_subcommand("validate", "representative-sample removal study");
    va_data.add(validate_cmd, "training set");
    va_train.add(validate_cmd);
    validate_cmd->add_option("--seeds", study.seeds, "training seeds")
        ->delimiter(',')
        ->capture_default_str();
    validate_cmd->add_option("--steps", study.steps, "removal steps")->capture_default_str();
    validate_cmd->add_option("--gen-size", study.gen_size, "generated images per model")
        ->capture_default_str();
    validate_cmd->add_option("--window", study.feature_map.window, "avg-pool window")
        ->capture_default_str();
    validate_cmd->add_option("--regularizer", study.regularizer, "covariance ridge")
        ->capture_default_str();
    validate_cmd->add_option("--calib-mode", va_mode, "cutoff statistic")
        ->check(CLI::IsMember({"avg_max", "percentile"}))
        ->capture_default_str();
    validate_cmd->add_option("--calib-n", study.calibration.samples_per_iteration,
                             "calibration samples per iteration")
        ->capture_default_str();
    validate_cmd->add_option("--calib-r", study.calibration.iterations, "calibration iterations")
        ->capture_default_str();
    validate_cmd->add_option("--calib-p", study.calibration.percentile, "calibration percentile")
        ->capture_default_str();
    validate_cmd->add_option("--extrinsic", va_extrinsic, "extrinsic measure")
        ->check(CLI::IsMember(kExtrinsicNames))
        ->capture_default_str();
    validate_cmd->add_flag("--no-tracin", va_no_tracin, "skip the TracIn scenario");
    validate_cmd->add_option("--tracin-targets", study.tracin_targets, "TracIn targets")
        ->capture_default_str();
    validate_cmd->add_option("--out", va_out, "report JSON")->required();
    validate_cmd->add_option("--csv", va_csv, "report CSV");
    validate_cmd->callback([&] {
        run = [&] {
            const auto data = va_data.load();
            study.train = va_train.cfg;
            study.feature_map = feature_map_for(data.front(), study.feature_map.window);
            study.calibration.mode = parse_threshold_mode(va_mode);
            study.calibration.extrinsic_kind = parse_extrinsic_kind(va_extrinsic);
            study.calibration.feature_map = study.feature_map;
            study.include_tracin = !va_no_tracin;
            const auto report = run_study(data, study);
            write_file(va_out, report.to_json().dump(2) + "\n");
            if (!va_csv.empty()) write_file(va_csv, report.to_csv());
            print_json(out, summarize_report(report));
        };
    });

    // report -----------------------------------------------------------------
    struct {
        std::string report, scores, csv;
    } re;
    auto* report_cmd = app.add_subcommand("report", "summarize a validation report or score table");
    auto* rep_opt = report_cmd->add_option("--report", re.report, "validation report JSON");
    auto* sco_opt = report_cmd->add_option("--scores", re.scores, "score table");
    rep_opt->excludes(sco_opt);
    report_cmd->add_option("--csv", re.csv, "rewrite the report as CSV")->needs(rep_opt);
    report_cmd->callback([&] {
        run = [&] {
            if (!re.report.empty()) {
                ValidationReport rep;
                try {
                    rep = ValidationReport::from_json(json::parse(read_file(re.report)));
                } catch (const json::exception& e) {
                    throw FormatError("report: " + std::string(e.what()));
                }
                if (!re.csv.empty()) write_file(re.csv, rep.to_csv());
                print_json(out, summarize_report(rep));
            } else if (!re.scores.empty()) {
                print_json(out, summarize_scores(load_score_table(re.scores)));
            } else {
                throw InvalidArgument("report: give --report or --scores");
            }
        };
    });

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? 0 : 1;
    }

    try {
        run();
    } catch (const InvalidArgument& e) {
        err << "usage error: " << e.what() << '\n';
        return 1;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}

}  // namespace pxgen::toolkit
