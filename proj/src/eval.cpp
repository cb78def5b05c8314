#include "viewloc/eval.hpp"

#include "viewloc/errors.hpp"
#include "viewloc/parallel.hpp"
#include "viewloc/sfm_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>

namespace viewloc {

namespace {

double percent(std::size_t count, std::size_t total) {
    return std::round(10000.0 * static_cast<double>(count) / static_cast<double>(total)) / 100.0;
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

std::string threshold_label(const Threshold& t) { return fmt("%g", t.t_m) + "m/" + fmt("%g", t.r_deg) + "deg"; }

}  // namespace

std::vector<double> success_rates(const std::vector<PoseError>& errors, const std::vector<Threshold>& thresholds) {
    if (errors.empty()) throw ConfigError("success rate is undefined for an empty error list");
    std::vector<double> out;
    for (const auto& th : thresholds) {
        const auto n = std::count_if(errors.begin(), errors.end(),
                                     [&](const PoseError& e) { return within(e.t_err, e.r_err, th); });
        out.push_back(percent(static_cast<std::size_t>(n), errors.size()));
    }
    return out;
}

std::vector<double> upper_bound(const std::vector<CellErrors>& waypoints, const std::vector<Threshold>& thresholds) {
    if (waypoints.empty()) throw ConfigError("upper bound is undefined for an empty waypoint list");
    std::vector<double> out;
    for (const auto& th : thresholds) {
        std::size_t n = 0;
        for (const auto& w : waypoints) {
            bool any = false;
            for (Eigen::Index k = 0; k < w.t_err.size() && !any; ++k) any = within(w.t_err(k), w.r_err(k), th);
            n += any ? 1 : 0;
        }
        out.push_back(percent(n, waypoints.size()));
    }
    return out;
}

PoseError avg_errors_successful(const std::vector<PoseError>& errors, const Threshold& threshold) {
    PoseError sum{0.0, 0.0};
    std::size_t n = 0;
    for (const auto& e : errors)
        if (within(e.t_err, e.r_err, threshold)) {
            sum.t_err += e.t_err;
            sum.r_err += e.r_err;
            ++n;
        }
    if (n == 0) throw ConfigError("no successful localizations to average");
    return {sum.t_err / static_cast<double>(n), sum.r_err / static_cast<double>(n)};
}

std::vector<PoseError> selected_errors(const std::vector<CellErrors>& waypoints, const std::vector<GridCell>& cells) {
    if (waypoints.size() != cells.size()) throw ConfigError("one selected cell per waypoint required");
    std::vector<PoseError> out;
    for (std::size_t k = 0; k < cells.size(); ++k)
        out.push_back({waypoints[k].t_err(cells[k].i, cells[k].j), waypoints[k].r_err(cells[k].i, cells[k].j)});
    return out;
}

EvalReport make_report(std::string policy, const std::vector<PoseError>& errors,
                       const std::vector<Threshold>& thresholds) {
    EvalReport r;
    r.policy = std::move(policy);
    r.thresholds = thresholds;
    r.rates = success_rates(errors, thresholds);
    r.n_total = errors.size();
    for (const auto& th : thresholds)
        r.n_success.push_back(static_cast<std::size_t>(std::count_if(
            errors.begin(), errors.end(), [&](const PoseError& e) { return within(e.t_err, e.r_err, th); })));
    if (!thresholds.empty() && r.n_success.back() > 0) {
        r.has_avg = true;
        r.avg = avg_errors_successful(errors, thresholds.back());
    }
    r.per_waypoint = errors;
    return r;
}

json to_json(const EvalReport& r) {
    json th = json::array(), per = json::array();
    for (const auto& t : r.thresholds) th.push_back({{"t_m", t.t_m}, {"r_deg", t.r_deg}});
    for (const auto& e : r.per_waypoint) per.push_back({number_or_null(e.t_err), number_or_null(e.r_err)});
    json j{{"policy", r.policy}, {"thresholds", th},      {"rates", r.rates},
           {"n_total", r.n_total}, {"n_success", r.n_success}, {"per_waypoint", per}};
    j["avg_t_err"] = r.has_avg ? json(r.avg.t_err) : json(nullptr);
    j["avg_r_err"] = r.has_avg ? json(r.avg.r_err) : json(nullptr);
    return j;
}

std::string reports_to_text(const std::vector<EvalReport>& reports) {
    if (reports.empty()) return "";
    std::size_t name_w = 6;
    for (const auto& r : reports) name_w = std::max(name_w, r.policy.size());
    auto pad = [](std::string s, std::size_t w) {
        if (s.size() < w) s.insert(0, w - s.size(), ' ');
        return s;
    };
    std::string out = std::string("policy") + std::string(name_w - 6, ' ');
    for (const auto& t : reports.front().thresholds) out += "  " + pad(threshold_label(t), 12);
    out += "  " + pad("avg_t_m", 9) + "  " + pad("avg_r_deg", 9) + "\n";
    for (const auto& r : reports) {
        out += r.policy + std::string(name_w - r.policy.size(), ' ');
        for (double v : r.rates) out += "  " + pad(fmt("%.2f", v), 12);
        out += "  " + pad(r.has_avg ? fmt("%.4f", r.avg.t_err) : "-", 9);
        out += "  " + pad(r.has_avg ? fmt("%.3f", r.avg.r_err) : "-", 9) + "\n";
    }
    return out;
}

std::string reports_to_csv(const std::vector<EvalReport>& reports) {
    std::string out = "policy";
    if (!reports.empty())
        for (const auto& t : reports.front().thresholds) out += "," + threshold_label(t);
    out += ",n_total,avg_t_err,avg_r_err\n";
    for (const auto& r : reports) {
        out += r.policy;
        for (double v : r.rates) out += "," + fmt("%.2f", v);
        out += "," + std::to_string(r.n_total);
        out += "," + (r.has_avg ? fmt("%.17g", r.avg.t_err) : std::string("nan"));
        out += "," + (r.has_avg ? fmt("%.17g", r.avg.r_err) : std::string("nan")) + "\n";
    }
    return out;
}

std::vector<PoseError> evaluate_trajectory(const SceneModel& scene, const Trajectory& t, const LabelOptions& opts,
                                           std::uint64_t scene_id, int jobs) {
    std::vector<PoseError> out(t.waypoints.size());
    parallel_for(t.waypoints.size(), jobs, [&](std::size_t k) {
        const Waypoint wp{t.waypoints[k].position, 0.0};
        const auto r = localize_cell(scene, wp, t.selected[k], opts, {scene_id, k});
        out[k] = {r.t_err, r.r_err};
    });
    return out;
}

Heatmap global_heatmap(const WaypointScorer& scorer, const SceneModel& scene, const HeatmapOptions& opts) {
    if (!(opts.spacing > 0.0) || opts.top_k <= 0) throw ConfigError("heatmap needs spacing > 0 and top_k > 0");
    Heatmap h;
    h.spacing = opts.spacing;
    h.height = opts.height;
    h.x0 = scene.bounds.min_corner.x();
    h.y0 = scene.bounds.min_corner.y();
    const Vec3 ext = scene.bounds.max_corner - scene.bounds.min_corner;
    const int nx = static_cast<int>(std::floor(ext.x() / opts.spacing + 1e-9)) + 1;
    const int ny = static_cast<int>(std::floor(ext.y() / opts.spacing + 1e-9)) + 1;
    h.values = Eigen::MatrixXd::Constant(ny, nx, std::numeric_limits<double>::quiet_NaN());
    const auto n = static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny);
    parallel_for(n, opts.jobs, [&](std::size_t k) {
        const int r = static_cast<int>(k / static_cast<std::size_t>(nx));
        const int c = static_cast<int>(k % static_cast<std::size_t>(nx));
        const Vec3 p(h.x0 + c * opts.spacing, h.y0 + r * opts.spacing, opts.height);
        for (const auto& o : scene.occluders)
            if (o.contains(p)) return;
        const LocMap m = scorer({p, 0.0}, k);
        std::vector<double> v(m.values.data(), m.values.data() + m.values.size());
        const auto top = std::min<std::size_t>(static_cast<std::size_t>(opts.top_k), v.size());
        std::partial_sort(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(top), v.end(), std::greater<>());
        double s = 0.0;
        for (std::size_t t = 0; t < top; ++t) s += v[t];
        h.values(r, c) = s / static_cast<double>(top);
    });
    return h;
}

void write_heatmap(const Heatmap& h, const std::string& csv_path, const std::string& pgm_path,
                   const std::string& mask_path) {
    std::string csv;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (Eigen::Index r = 0; r < h.values.rows(); ++r) {
        for (Eigen::Index c = 0; c < h.values.cols(); ++c) {
            const double v = h.values(r, c);
            if (c) csv += ",";
            csv += std::isnan(v) ? std::string("nan") : fmt("%.17g", v);
            if (std::isfinite(v)) {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        }
        csv += "\n";
    }
    write_text_file(csv_path, csv);
    Eigen::MatrixXd norm = Eigen::MatrixXd::Zero(h.values.rows(), h.values.cols());
    Eigen::MatrixXd mask = Eigen::MatrixXd::Zero(h.values.rows(), h.values.cols());
    for (Eigen::Index k = 0; k < h.values.size(); ++k) {
        const double v = h.values(k);
        if (!std::isfinite(v)) continue;
        mask(k) = 1.0;
        norm(k) = hi > lo ? (v - lo) / (hi - lo) : 0.0;
    }
    write_pgm(norm, pgm_path);
    write_pgm(mask, mask_path);
}

std::vector<SparsifyRow> sparsification_sweep(const SceneModel& scene, const std::vector<Waypoint>& waypoints,
                                              std::vector<double> fractions, const SelectionPolicy& policy,
                                              const SparsifyOptions& opts) {
    if (waypoints.empty()) throw ConfigError("sparsification sweep needs waypoints");
    std::sort(fractions.begin(), fractions.end());
    std::vector<SparsifyRow> rows;
    for (double f : fractions) {
        const SceneModel sparse = sparsify(scene, f, opts.seed);
        std::vector<CellErrors> cells(waypoints.size());
        std::vector<GridCell> chosen(waypoints.size());
        parallel_for(waypoints.size(), opts.jobs, [&](std::size_t k) {
            if (sparse.poses.empty()) {
                const auto inf = std::numeric_limits<double>::infinity();
                cells[k] = {Eigen::MatrixXd::Constant(opts.label.grid.n_pitch, opts.label.grid.n_yaw, inf),
                            Eigen::MatrixXd::Constant(opts.label.grid.n_pitch, opts.label.grid.n_yaw, inf)};
            } else {
                const auto l = label_waypoint(sparse, {waypoints[k].position, 0.0}, opts.label, {opts.scene_id, k});
                cells[k] = {l.t_err, l.r_err};
            }
            chosen[k] = policy(sparse, waypoints[k], k);
        });
        SparsifyRow row;
        row.fraction = f;
        row.n_poses = sparse.poses.size();
        row.n_landmarks = sparse.points.size();
        row.policy_rates = success_rates(selected_errors(cells, chosen), opts.label.thresholds);
        row.upper_bound_rates = upper_bound(cells, opts.label.thresholds);
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string sparsify_rows_to_csv(const std::vector<SparsifyRow>& rows, const std::vector<Threshold>& thresholds) {
    std::string out = "fraction,n_poses,n_landmarks";
    for (const auto& t : thresholds) out += ",policy_" + threshold_label(t);
    for (const auto& t : thresholds) out += ",upper_" + threshold_label(t);
    out += "\n";
    for (const auto& r : rows) {
        out += fmt("%g", r.fraction) + "," + std::to_string(r.n_poses) + "," + std::to_string(r.n_landmarks);
        for (double v : r.policy_rates) out += "," + fmt("%.2f", v);
        for (double v : r.upper_bound_rates) out += "," + fmt("%.2f", v);
        out += "\n";
    }
    return out;
}

}  // namespace viewloc
