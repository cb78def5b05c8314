// viewloc command-line front end. Every subcommand writes only under --out and
// echoes its resolved configuration there as <subcommand>.config.json.

#include "viewloc/baselines.hpp"
#include "viewloc/errors.hpp"
#include "viewloc/eval.hpp"
#include "viewloc/json_io.hpp"
#include "viewloc/locmap.hpp"
#include "viewloc/model.hpp"
#include "viewloc/oracle.hpp"
#include "viewloc/parallel.hpp"
#include "viewloc/planner.hpp"
#include "viewloc/rng.hpp"
#include "viewloc/sfm_io.hpp"
#include "viewloc/simworld.hpp"

#include "CLI11.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace viewloc;

namespace {

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out = ".";
    int jobs = 1;
};

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("--config", c.config, "JSON config file (flags override its keys)")->check(CLI::ExistingFile);
    sub->add_option("--seed", c.seed, "root seed");
    sub->add_option("--out", c.out, "output directory")->required();
    sub->add_option("--jobs", c.jobs, "worker threads")->check(CLI::PositiveNumber);
}

json load_config(const Common& c) {
    if (c.config.empty()) return json::object();
    json j = read_json_file(c.config);
    if (!j.is_object()) throw ConfigError(c.config + ": config must be a JSON object");
    return j;
}

json section(const json& j, const char* key) { return j.contains(key) ? j.at(key) : json::object(); }

std::string out_path(const Common& c, const std::string& name) {
    fs::create_directories(c.out);
    return (fs::path(c.out) / name).string();
}

void echo_config(const Common& c, const std::string& sub, const json& resolved) {
    write_text_file(out_path(c, sub + ".config.json"), resolved.dump(2) + "\n");
}

ViewGrid parse_grid(const std::string& s) {
    const auto x = s.find('x');
    int h = 0, w = 0;
    try {
        if (x == std::string::npos) throw std::invalid_argument(s);
        h = std::stoi(s.substr(0, x));
        w = std::stoi(s.substr(x + 1));
    } catch (const std::exception&) {
        throw ConfigError("--grid expects HxW, got '" + s + "'");
    }
    if (h <= 0 || w <= 0) throw ConfigError("--grid dimensions must be positive");
    ViewGrid g;
    g.n_pitch = h;
    g.n_yaw = w;
    g.pitch_step = 120.0 / h;
    g.yaw_step = 360.0 / w;
    g.validate();
    return g;
}

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ConfigError("cannot parse number '" + item + "'");
        }
    }
    return out;
}

std::vector<Vec3> parse_keypoints(const std::string& s) {
    std::vector<Vec3> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ';')) {
        const auto v = parse_list(item);
        if (v.size() != 3) throw ConfigError("keypoint '" + item + "' needs x,y,z");
        out.emplace_back(v[0], v[1], v[2]);
    }
    return out;
}

std::vector<Vec3> keypoints_from_json(const json& j) {
    std::vector<Vec3> out;
    for (const auto& p : j) out.push_back(vec3_from_json(p));
    return out;
}

json keypoints_to_json(const std::vector<Vec3>& kps) {
    json j = json::array();
    for (const auto& p : kps) j.push_back(vec3_to_json(p));
    return j;
}

Trajectory read_trajectory_csv(const std::string& path, const ViewGrid& grid) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    Trajectory t;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (lineno == 1 || line.empty()) continue;
        std::vector<double> v;
        try {
            v = parse_list(line);
        } catch (const ConfigError& e) {
            throw ParseError(path, lineno, e.what());
        }
        if (v.size() != 7) throw ParseError(path, lineno, "expected 7 columns");
        t.waypoints.push_back({Vec3(v[1], v[2], v[3]), 0.0});
        t.selected.push_back(angles_to_cell(grid, v[4], v[5]));
        t.costs.push_back(v[6]);
    }
    return t;
}

ModelConfig resolve_model_config(const json& cfg, const std::optional<std::string>& grid,
                                 const std::optional<std::string>& mode, const std::optional<int>& classes,
                                 const std::optional<std::uint64_t>& seed) {
    json m = section(cfg, "model");
    ModelConfig c = model_config_from_json(m);
    if (grid) c.grid = parse_grid(*grid);
    if (mode) c.mode = input_mode_from_string(*mode);
    if (classes) c.n_classes = *classes;
    if (seed) c.seed = *seed;
    c.validate();
    return c;
}

LabelOptions resolve_label(const json& cfg, const std::optional<std::string>& grid,
                           const std::optional<int>& threshold_index, const std::optional<std::uint64_t>& seed) {
    LabelOptions l = label_options_from_json(section(cfg, "label"));
    if (grid) l.grid = parse_grid(*grid);
    if (threshold_index) l.label_threshold_index = *threshold_index;
    if (seed) l.noise.seed = *seed;
    l.label_threshold();
    return l;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"viewloc: localization-quality maps and localization-aware viewpoint planning"};
    app.require_subcommand(1);
    app.failure_message(CLI::FailureMessage::help);

    // gen-scene
    Common gs;
    std::optional<int> gs_landmarks, gs_occluders;
    auto* gen_scene = app.add_subcommand("gen-scene", "generate a synthetic scene (no mapping poses)");
    add_common(gen_scene, gs);
    gen_scene->add_option("--landmarks", gs_landmarks, "number of landmarks");
    gen_scene->add_option("--occluders", gs_occluders, "number of occluder boxes");

    // sweep
    Common sw;
    std::string sw_scene;
    std::optional<double> sw_spacing, sw_azimuth;
    auto* sweep = app.add_subcommand("sweep", "simulate the mapping sweep and write the mapped scene");
    add_common(sweep, sw);
    sweep->add_option("--scene", sw_scene, "input scene file")->required()->check(CLI::ExistingFile);
    sweep->add_option("--grid-spacing", sw_spacing, "anchor grid spacing (m)");
    sweep->add_option("--azimuth-step", sw_azimuth, "azimuth step per anchor (deg)");

    // gen-data
    Common gd;
    std::vector<std::string> gd_scenes;
    std::optional<int> gd_waypoints, gd_classes, gd_threshold;
    std::optional<std::string> gd_grid;
    auto* gen_data = app.add_subcommand("gen-data", "label waypoints with the localization oracle");
    add_common(gen_data, gd);
    gen_data->add_option("--scene", gd_scenes, "mapped scene files (scene id = position)")->required()->check(
        CLI::ExistingFile);
    gen_data->add_option("--waypoints", gd_waypoints, "waypoints per scene");
    gen_data->add_option("--classes", gd_classes, "2 (binary) or 4")->check(CLI::IsMember({2, 4}));
    gen_data->add_option("--threshold-index", gd_threshold, "label threshold index (0-3)");
    gen_data->add_option("--grid", gd_grid, "viewing grid HxW");

    // train
    Common tr;
    std::string tr_data;
    std::optional<int> tr_epochs, tr_classes;
    std::optional<double> tr_lr;
    std::optional<std::string> tr_mode, tr_grid;
    auto* train_cmd = app.add_subcommand("train", "train the LocMap model on a dataset");
    add_common(train_cmd, tr);
    train_cmd->add_option("--data", tr_data, "dataset (.jsonl)")->required()->check(CLI::ExistingFile);
    train_cmd->add_option("--epochs", tr_epochs, "training epochs");
    train_cmd->add_option("--lr", tr_lr, "learning rate");
    train_cmd->add_option("--mode", tr_mode, "input mode: full, cam, map");
    train_cmd->add_option("--classes", tr_classes, "2 or 4")->check(CLI::IsMember({2, 4}));
    train_cmd->add_option("--grid", tr_grid, "viewing grid HxW");

    // predict
    Common pr;
    std::string pr_scene, pr_model;
    double pr_x = 0, pr_y = 0, pr_z = 0;
    std::optional<int> pr_upsample;
    auto* predict = app.add_subcommand("predict", "predict the LocMap at one waypoint");
    add_common(predict, pr);
    predict->add_option("--scene", pr_scene, "mapped scene file")->required()->check(CLI::ExistingFile);
    predict->add_option("--model", pr_model, "checkpoint")->required()->check(CLI::ExistingFile);
    predict->add_option("--x", pr_x)->required();
    predict->add_option("--y", pr_y)->required();
    predict->add_option("--z", pr_z)->required();
    predict->add_option("--upsample", pr_upsample, "also write an upsampled map (2 or 4)")->check(
        CLI::IsMember({2, 4}));

    // plan
    Common pl;
    std::string pl_scene, pl_model;
    std::optional<std::string> pl_scorer, pl_metric, pl_keypoints, pl_grid;
    std::optional<double> pl_lambda, pl_spacing;
    std::optional<int> pl_threshold;
    std::uint64_t pl_scene_id = 0;
    bool pl_dump_maps = false;
    auto* plan = app.add_subcommand("plan", "plan viewpoints along a keypoint path");
    add_common(plan, pl);
    plan->add_option("--scene", pl_scene, "mapped scene file")->required()->check(CLI::ExistingFile);
    plan->add_option("--model", pl_model, "checkpoint (model scorer)")->check(CLI::ExistingFile);
    plan->add_option("--scorer", pl_scorer, "model, fif, oracle, forward");
    plan->add_option("--metric", pl_metric, "FIF metric: mineig, det, trace");
    plan->add_option("--keypoints", pl_keypoints, "path as x,y,z;x,y,z;...");
    plan->add_option("--lambda", pl_lambda, "smoothness weight");
    plan->add_option("--spacing", pl_spacing, "waypoint spacing (m)");
    plan->add_option("--grid", pl_grid, "viewing grid HxW");
    plan->add_option("--threshold-index", pl_threshold, "oracle label threshold index");
    plan->add_option("--scene-id", pl_scene_id, "scene id for oracle trial seeds");
    plan->add_flag("--dump-maps", pl_dump_maps, "write per-step cost maps under <out>/cost_maps");

    // eval
    Common ev;
    std::vector<std::string> ev_scenes;
    std::string ev_data, ev_model, ev_traj;
    std::optional<std::string> ev_metric, ev_grid;
    std::optional<int> ev_threshold;
    std::uint64_t ev_scene_id = 0;
    auto* eval = app.add_subcommand("eval", "success-rate reports for datasets and trajectories");
    add_common(eval, ev);
    eval->add_option("--scene", ev_scenes, "scene files (indexed by scene id)")->check(CLI::ExistingFile);
    eval->add_option("--data", ev_data, "labeled dataset (.jsonl)")->check(CLI::ExistingFile);
    eval->add_option("--model", ev_model, "checkpoint")->check(CLI::ExistingFile);
    eval->add_option("--trajectory", ev_traj, "trajectory CSV to localize along")->check(CLI::ExistingFile);
    eval->add_option("--metric", ev_metric, "FIF metric: mineig, det, trace");
    eval->add_option("--grid", ev_grid, "viewing grid HxW (trajectory evaluation)");
    eval->add_option("--threshold-index", ev_threshold, "threshold index for labels");
    eval->add_option("--scene-id", ev_scene_id, "scene id for trajectory trial seeds");

    // heatmap
    Common hm;
    std::string hm_scene, hm_model;
    std::optional<std::string> hm_scorer, hm_metric, hm_grid;
    std::optional<double> hm_height, hm_spacing;
    std::optional<int> hm_topk, hm_threshold;
    auto* heatmap = app.add_subcommand("heatmap", "global score heatmap over the scene footprint");
    add_common(heatmap, hm);
    heatmap->add_option("--scene", hm_scene, "mapped scene file")->required()->check(CLI::ExistingFile);
    heatmap->add_option("--model", hm_model, "checkpoint (model scorer)")->check(CLI::ExistingFile);
    heatmap->add_option("--scorer", hm_scorer, "model, fif, oracle");
    heatmap->add_option("--metric", hm_metric, "FIF metric: mineig, det, trace");
    heatmap->add_option("--height", hm_height, "sample height (m)");
    heatmap->add_option("--spacing", hm_spacing, "sample spacing (m)");
    heatmap->add_option("--top-k", hm_topk, "cells averaged per sample");
    heatmap->add_option("--grid", hm_grid, "viewing grid HxW");
    heatmap->add_option("--threshold-index", hm_threshold, "oracle label threshold index");

    // sparsify-sweep
    Common sp;
    std::string sp_scene, sp_model;
    std::optional<std::string> sp_fractions, sp_scorer, sp_metric, sp_grid;
    std::optional<int> sp_waypoints, sp_threshold;
    auto* sparsify_cmd = app.add_subcommand("sparsify-sweep", "success rates under map sparsification");
    add_common(sparsify_cmd, sp);
    sparsify_cmd->add_option("--scene", sp_scene, "mapped scene file")->required()->check(CLI::ExistingFile);
    sparsify_cmd->add_option("--model", sp_model, "checkpoint (model policy)")->check(CLI::ExistingFile);
    sparsify_cmd->add_option("--fraction-list", sp_fractions, "comma-separated removal fractions");
    sparsify_cmd->add_option("--scorer", sp_scorer, "selection policy: model, fif, oracle, forward");
    sparsify_cmd->add_option("--metric", sp_metric, "FIF metric: mineig, det, trace");
    sparsify_cmd->add_option("--waypoints", sp_waypoints, "evaluation waypoints");
    sparsify_cmd->add_option("--grid", sp_grid, "viewing grid HxW");
    sparsify_cmd->add_option("--threshold-index", sp_threshold, "label threshold index");

    // convert
    Common cv;
    std::string cv_in, cv_to;
    auto* convert = app.add_subcommand("convert", "convert between scene JSON and COLMAP text");
    add_common(convert, cv);
    convert->add_option("--in", cv_in, "scene JSON file or COLMAP text directory")->required()->check(
        CLI::ExistingPath);
    convert->add_option("--to", cv_to, "colmap or json")->required()->check(CLI::IsMember({"colmap", "json"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (*gen_scene) {
            const json cfg = load_config(gs);
            SceneSpec spec = scene_spec_from_json(section(cfg, "scene"));
            if (gs.seed) spec.seed = *gs.seed;
            if (gs_landmarks) spec.n_landmarks = *gs_landmarks;
            if (gs_occluders) spec.n_occluders = *gs_occluders;
            spec.validate();
            echo_config(gs, "gen-scene", {{"scene", to_json(spec)}});
            save_scene(generate_scene(spec), out_path(gs, "scene.json"));
        } else if (*sweep) {
            const json cfg = load_config(sw);
            SweepOptions o = sweep_options_from_json(section(cfg, "sweep"));
            if (sw.seed) o.seed = *sw.seed;
            if (sw_spacing) o.grid_spacing = *sw_spacing;
            if (sw_azimuth) o.azimuth_step = *sw_azimuth;
            echo_config(sw, "sweep", {{"sweep", to_json(o)}, {"scene", sw_scene}});
            SceneModel scene = load_scene(sw_scene);
            build_mapping_sweep(scene, o);
            save_scene(scene, out_path(sw, "scene.json"));
        } else if (*gen_data) {
            const json cfg = load_config(gd);
            DatasetOptions o = dataset_options_from_json(section(cfg, "dataset"));
            if (gd.seed) {
                o.seed = *gd.seed;
                o.label.noise.seed = *gd.seed;
            }
            if (gd_waypoints) o.n_waypoints_per_scene = *gd_waypoints;
            if (gd_classes) o.n_classes = *gd_classes;
            if (gd_threshold) o.label.label_threshold_index = *gd_threshold;
            if (gd_grid) o.label.grid = parse_grid(*gd_grid);
            o.label.label_threshold();
            o.jobs = gd.jobs;
            json echo = to_json(o);
            echo.erase("jobs");  // thread count never changes the output
            echo_config(gd, "gen-data", {{"dataset", echo}, {"scenes", gd_scenes}});
            std::vector<SceneModel> scenes;
            for (const auto& p : gd_scenes) scenes.push_back(load_scene(p));
            write_dataset(out_path(gd, "dataset.jsonl"), generate_dataset(scenes, o));
        } else if (*train_cmd) {
            const json cfg = load_config(tr);
            const ModelConfig mc = resolve_model_config(cfg, tr_grid, tr_mode, tr_classes, tr.seed);
            TrainOptions to = train_options_from_json(section(cfg, "train"));
            if (tr.seed) to.seed = *tr.seed;
            if (tr_epochs) to.epochs = *tr_epochs;
            if (tr_lr) to.learning_rate = *tr_lr;
            echo_config(tr, "train", {{"model", to_json(mc)}, {"train", to_json(to)}, {"data", tr_data}});
            const auto data = read_dataset(tr_data);
            const auto res = train(data, mc, to);
            std::string csv = "epoch,loss\n";
            for (std::size_t e = 0; e < res.loss_history.size(); ++e) {
                char buf[64];
                std::snprintf(buf, sizeof buf, "%zu,%.17g\n", e, res.loss_history[e]);
                csv += buf;
            }
            write_text_file(out_path(tr, "loss.csv"), csv);
            save_checkpoint(out_path(tr, "model.ckpt"), mc, res.params,
                            {{"n_samples", data.size()}, {"train", to_json(to)}});
        } else if (*predict) {
            load_config(pr);
            const auto ck = load_checkpoint(pr_model);
            echo_config(pr, "predict",
                        {{"scene", pr_scene}, {"model", pr_model}, {"position", {pr_x, pr_y, pr_z}},
                         {"upsample", pr_upsample ? json(*pr_upsample) : json(nullptr)}});
            const SceneModel scene = load_scene(pr_scene);
            const LocMap m = predict_locmap(ck.params, ck.config, scene, {Vec3(pr_x, pr_y, pr_z), 0.0});
            write_locmap_csv(m, out_path(pr, "locmap.csv"));
            write_pgm(m.values, out_path(pr, "locmap.pgm"));
            if (pr_upsample) {
                const LocMap up = upsample_locmap(m, *pr_upsample);
                write_locmap_csv(up, out_path(pr, "locmap_up.csv"));
                write_pgm(up.values, out_path(pr, "locmap_up.pgm"));
            }
        } else if (*plan) {
            const json cfg = load_config(pl);
            PlanConfig pc = plan_config_from_json(section(cfg, "plan"));
            if (pl_scorer) pc.scorer = scorer_kind_from_string(*pl_scorer);
            if (pl_lambda) pc.lambda = *pl_lambda;
            if (pl_spacing) pc.spacing = *pl_spacing;
            if (pl_grid) pc.grid = parse_grid(*pl_grid);
            pc.jobs = pl.jobs;
            pc.validate();
            std::vector<Vec3> kps = cfg.contains("keypoints") ? keypoints_from_json(cfg.at("keypoints"))
                                                              : std::vector<Vec3>{};
            if (pl_keypoints) kps = parse_keypoints(*pl_keypoints);
            if (kps.empty()) throw ConfigError("plan needs keypoints (--keypoints or config 'keypoints')");
            const FifMetric metric = fif_metric_from_string(pl_metric.value_or(cfg.value("metric", "mineig")));
            LabelOptions lo = resolve_label(cfg, pl_grid, pl_threshold, pl.seed);
            lo.grid = pc.grid;
            json echo_plan = to_json(pc);
            echo_plan.erase("jobs");
            echo_config(pl, "plan",
                        {{"plan", echo_plan},
                         {"keypoints", keypoints_to_json(kps)},
                         {"metric", to_string(metric)},
                         {"label", to_json(lo)},
                         {"scene", pl_scene},
                         {"scene_id", pl_scene_id},
                         {"model", pl_model}});
            const SceneModel scene = load_scene(pl_scene);
            std::optional<Checkpoint> ck;
            Scorer scorer;
            switch (pc.scorer) {
                case ScorerKind::Model:
                    if (pl_model.empty()) throw ConfigError("the model scorer needs --model");
                    ck = load_checkpoint(pl_model);
                    if (!(ck->config.grid == pc.grid)) throw ConfigError("checkpoint grid does not match plan grid");
                    scorer = model_scorer(ck->params, ck->config, scene);
                    break;
                case ScorerKind::Fif: scorer = fif_scorer(scene, pc.grid, metric); break;
                case ScorerKind::OracleLabels: scorer = oracle_scorer(scene, lo, pl_scene_id); break;
                case ScorerKind::ForwardFacing: break;
            }
            const Trajectory t = plan_viewpoints(kps, pc, scorer, pl_dump_maps);
            write_trajectory_csv(t, pc.grid, out_path(pl, "trajectory.csv"));
            if (pl_dump_maps) {
                fs::create_directories(fs::path(pl.out) / "cost_maps");
                for (std::size_t k = 0; k < t.cost_maps.size(); ++k)
                    write_locmap_csv(LocMap(pc.grid, t.cost_maps[k]),
                                     (fs::path(pl.out) / "cost_maps" / ("step_" + std::to_string(k) + ".csv")).string());
            }
        } else if (*eval) {
            const json cfg = load_config(ev);
            if (ev_data.empty() && ev_traj.empty()) throw ConfigError("eval needs --data and/or --trajectory");
            const FifMetric metric = fif_metric_from_string(ev_metric.value_or(cfg.value("metric", "mineig")));
            LabelOptions lo = resolve_label(cfg, ev_grid, ev_threshold, ev.seed);
            echo_config(ev, "eval",
                        {{"scenes", ev_scenes},
                         {"data", ev_data},
                         {"model", ev_model},
                         {"trajectory", ev_traj},
                         {"metric", to_string(metric)},
                         {"label", to_json(lo)},
                         {"scene_id", ev_scene_id}});
            std::vector<SceneModel> scenes;
            for (const auto& p : ev_scenes) scenes.push_back(load_scene(p));
            std::vector<EvalReport> reports;
            json details = json::object();
            if (!ev_data.empty()) {
                const auto data = read_dataset(ev_data);
                if (data.empty()) throw ConfigError("dataset is empty");
                std::vector<CellErrors> cells;
                for (const auto& s : data) cells.push_back({s.t_err, s.r_err});
                const ViewGrid grid = data.front().grid;
                std::vector<GridCell> fwd;
                for (const auto& s : data) fwd.push_back(forward_facing(s.waypoint.default_yaw, grid));
                reports.push_back(make_report("forward", selected_errors(cells, fwd), lo.thresholds));
                if (!scenes.empty()) {
                    std::vector<GridCell> fif(data.size());
                    parallel_for(data.size(), ev.jobs, [&](std::size_t k) {
                        const auto& s = data[k];
                        if (s.scene_id >= scenes.size())
                            throw ConfigError("sample scene id " + std::to_string(s.scene_id) + " has no --scene");
                        const auto& sc = scenes[s.scene_id];
                        fif[k] = fif_locmap(sc, s.waypoint, grid, metric, sc.intrinsics).argmax();
                    });
                    reports.push_back(make_report(std::string("fif-") + to_string(metric),
                                                  selected_errors(cells, fif), lo.thresholds));
                }
                if (!ev_model.empty()) {
                    const auto ck = load_checkpoint(ev_model);
                    std::vector<GridCell> sel(data.size());
                    parallel_for(data.size(), ev.jobs, [&](std::size_t k) {
                        sel[k] = predict_sample(ck.params, ck.config, data[k]).argmax();
                    });
                    reports.push_back(make_report("model", selected_errors(cells, sel), lo.thresholds));
                }
                EvalReport ub;
                ub.policy = "upper-bound";
                ub.thresholds = lo.thresholds;
                ub.rates = upper_bound(cells, lo.thresholds);
                ub.n_total = cells.size();
                reports.push_back(ub);
            }
            if (!ev_traj.empty()) {
                if (scenes.empty()) throw ConfigError("trajectory evaluation needs --scene");
                const auto& sc = scenes[ev_scene_id < scenes.size() ? ev_scene_id : 0];
                const Trajectory t = read_trajectory_csv(ev_traj, lo.grid);
                reports.push_back(
                    make_report("trajectory", evaluate_trajectory(sc, t, lo, ev_scene_id, ev.jobs), lo.thresholds));
            }
            json jr = json::array();
            for (const auto& r : reports) jr.push_back(to_json(r));
            write_text_file(out_path(ev, "report.json"), jr.dump(1) + "\n");
            write_text_file(out_path(ev, "report.csv"), reports_to_csv(reports));
            const std::string text = reports_to_text(reports);
            write_text_file(out_path(ev, "report.txt"), text);
            std::cout << text;
        } else if (*heatmap) {
            const json cfg = load_config(hm);
            HeatmapOptions ho;
            const json hj = section(cfg, "heatmap");
            ho.height = hm_height.value_or(hj.value("height", ho.height));
            ho.spacing = hm_spacing.value_or(hj.value("spacing", ho.spacing));
            ho.top_k = hm_topk.value_or(hj.value("top_k", ho.top_k));
            ho.jobs = hm.jobs;
            const std::string scorer_name = hm_scorer.value_or(cfg.value("scorer", "fif"));
            const ScorerKind kind = scorer_kind_from_string(scorer_name);
            if (kind == ScorerKind::ForwardFacing) throw ConfigError("heatmap scorer must be model, fif, or oracle");
            const FifMetric metric = fif_metric_from_string(hm_metric.value_or(cfg.value("metric", "mineig")));
            LabelOptions lo = resolve_label(cfg, hm_grid, hm_threshold, hm.seed);
            echo_config(hm, "heatmap",
                        {{"heatmap", {{"height", ho.height}, {"spacing", ho.spacing}, {"top_k", ho.top_k}}},
                         {"scorer", scorer_name},
                         {"metric", to_string(metric)},
                         {"label", to_json(lo)},
                         {"scene", hm_scene},
                         {"model", hm_model}});
            const SceneModel scene = load_scene(hm_scene);
            std::optional<Checkpoint> ck;
            Scorer scorer;
            if (kind == ScorerKind::Model) {
                if (hm_model.empty()) throw ConfigError("the model scorer needs --model");
                ck = load_checkpoint(hm_model);
                scorer = model_scorer(ck->params, ck->config, scene);
            } else if (kind == ScorerKind::Fif) {
                scorer = fif_scorer(scene, lo.grid, metric);
                scorer.normalize = false;
            } else {
                scorer = oracle_scorer(scene, lo, 0);
            }
            const Heatmap h = global_heatmap(scorer.score, scene, ho);
            write_heatmap(h, out_path(hm, "heatmap.csv"), out_path(hm, "heatmap.pgm"),
                          out_path(hm, "heatmap_mask.pgm"));
        } else if (*sparsify_cmd) {
            const json cfg = load_config(sp);
            std::vector<double> fractions = cfg.contains("fractions")
                                                ? cfg.at("fractions").get<std::vector<double>>()
                                                : std::vector<double>{0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
            if (sp_fractions) fractions = parse_list(*sp_fractions);
            for (double f : fractions)
                if (!(f >= 0.0 && f <= 1.0)) throw ConfigError("fractions must lie in [0, 1]");
            const std::string policy_name = sp_scorer.value_or(cfg.value("scorer", "fif"));
            const ScorerKind kind = scorer_kind_from_string(policy_name);
            const FifMetric metric = fif_metric_from_string(sp_metric.value_or(cfg.value("metric", "mineig")));
            SparsifyOptions so;
            so.label = resolve_label(cfg, sp_grid, sp_threshold, sp.seed);
            so.seed = sp.seed.value_or(cfg.value("seed", std::uint64_t{0}));
            so.jobs = sp.jobs;
            const int n_wp = sp_waypoints.value_or(cfg.value("waypoints", 20));
            echo_config(sp, "sparsify-sweep",
                        {{"fractions", fractions},
                         {"scorer", policy_name},
                         {"metric", to_string(metric)},
                         {"label", to_json(so.label)},
                         {"seed", so.seed},
                         {"waypoints", n_wp},
                         {"scene", sp_scene},
                         {"model", sp_model}});
            const SceneModel scene = load_scene(sp_scene);
            const auto wps = sample_waypoints(scene, n_wp, 0.4, 2.0, 0.3, derive_seed(so.seed, {0x5a}));
            std::optional<Checkpoint> ck;
            if (kind == ScorerKind::Model) {
                if (sp_model.empty()) throw ConfigError("the model policy needs --model");
                ck = load_checkpoint(sp_model);
            }
            const ViewGrid grid = so.label.grid;
            const LabelOptions lo = so.label;
            SelectionPolicy policy = [&](const SceneModel& s, const Waypoint& wp, std::size_t k) -> GridCell {
                switch (kind) {
                    case ScorerKind::Model:
                        if (s.poses.empty()) return forward_facing(wp.default_yaw, grid);
                        return predict_locmap(ck->params, ck->config, s, wp).argmax();
                    case ScorerKind::Fif: return fif_locmap(s, wp, grid, metric, s.intrinsics).argmax();
                    case ScorerKind::OracleLabels:
                        return LocMap(grid, label_waypoint(s, wp, lo, {0, k}).labels.cast<double>()).argmax();
                    case ScorerKind::ForwardFacing: break;
                }
                return forward_facing(wp.default_yaw, grid);
            };
            const auto rows = sparsification_sweep(scene, wps, fractions, policy, so);
            write_text_file(out_path(sp, "sparsify.csv"), sparsify_rows_to_csv(rows, so.label.thresholds));
        } else if (*convert) {
            load_config(cv);
            echo_config(cv, "convert", {{"in", cv_in}, {"to", cv_to}});
            if (cv_to == "colmap") {
                const SceneModel scene = load_scene(cv_in);
                const std::string dir = out_path(cv, "colmap");
                fs::create_directories(dir);
                write_colmap_text(scene, dir);
            } else {
                save_scene(parse_colmap_text(cv_in), out_path(cv, "scene.json"));
            }
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const json::exception& e) {
        std::cerr << "error: invalid config: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
