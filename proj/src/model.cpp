#include "viewloc/model.hpp"

#include "viewloc/autodiff.hpp"
#include "viewloc/errors.hpp"
#include "viewloc/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace viewloc {

using ad::Mat;
using Id = ad::Tape::Id;

const char* to_string(InputMode m) {
    switch (m) {
        case InputMode::Full: return "full";
        case InputMode::CamOnly: return "cam";
        case InputMode::MapOnly: return "map";
    }
    return "full";
}

InputMode input_mode_from_string(const std::string& s) {
    if (s == "full") return InputMode::Full;
    if (s == "cam" || s == "cam-only") return InputMode::CamOnly;
    if (s == "map" || s == "map-only") return InputMode::MapOnly;
    throw ConfigError("unknown input mode '" + s + "' (expected full, cam, map)");
}

void ModelConfig::validate() const {
    if (d_model <= 0 || n_heads <= 0 || d_model % n_heads != 0)
        throw ConfigError("d_model must be a positive multiple of n_heads");
    if (n_self_layers < 0 || n_cross_layers < 0 || mlp_hidden <= 0 || ffn_mult <= 0)
        throw ConfigError("layer counts must be >= 0 and widths > 0");
    if (n_classes != 2 && n_classes != 4) throw ConfigError("n_classes must be 2 or 4");
    if (max_landmarks <= 0 || max_poses <= 0) throw ConfigError("sequence caps must be positive");
    grid.validate();
}

json to_json(const ModelConfig& c) {
    return {{"d_model", c.d_model},
            {"n_heads", c.n_heads},
            {"n_self_layers", c.n_self_layers},
            {"n_cross_layers", c.n_cross_layers},
            {"mlp_hidden", c.mlp_hidden},
            {"ffn_mult", c.ffn_mult},
            {"grid", to_json(c.grid)},
            {"n_classes", c.n_classes},
            {"max_landmarks", c.max_landmarks},
            {"max_poses", c.max_poses},
            {"mode", to_string(c.mode)},
            {"preprocess",
             {{"min_track", c.preprocess.min_track},
              {"max_reproj", c.preprocess.max_reproj},
              {"half_extent", c.preprocess.half_extent}}},
            {"seed", c.seed}};
}

ModelConfig model_config_from_json(const json& j) {
    ModelConfig c;
    c.d_model = j.value("d_model", c.d_model);
    c.n_heads = j.value("n_heads", c.n_heads);
    c.n_self_layers = j.value("n_self_layers", c.n_self_layers);
    c.n_cross_layers = j.value("n_cross_layers", c.n_cross_layers);
    c.mlp_hidden = j.value("mlp_hidden", c.mlp_hidden);
    c.ffn_mult = j.value("ffn_mult", c.ffn_mult);
    if (j.contains("grid")) c.grid = grid_from_json(j.at("grid"));
    c.n_classes = j.value("n_classes", c.n_classes);
    c.max_landmarks = j.value("max_landmarks", c.max_landmarks);
    c.max_poses = j.value("max_poses", c.max_poses);
    if (j.contains("mode")) c.mode = input_mode_from_string(j.at("mode").get<std::string>());
    if (j.contains("preprocess")) {
        const auto& p = j.at("preprocess");
        c.preprocess.min_track = p.value("min_track", c.preprocess.min_track);
        c.preprocess.max_reproj = p.value("max_reproj", c.preprocess.max_reproj);
        c.preprocess.half_extent = p.value("half_extent", c.preprocess.half_extent);
    }
    c.seed = j.value("seed", c.seed);
    c.validate();
    return c;
}

void ModelParams::add(std::string name, Eigen::MatrixXd value) {
    if (index_.count(name)) throw ConfigError("duplicate parameter " + name);
    index_[name] = tensors_.size();
    tensors_.push_back({std::move(name), std::move(value)});
}

std::size_t ModelParams::index_of(const std::string& name) const {
    const auto it = index_.find(name);
    if (it == index_.end()) throw ConfigError("unknown parameter " + name);
    return it->second;
}

const Eigen::MatrixXd& ModelParams::get(const std::string& name) const { return tensors_[index_of(name)].value; }

std::size_t ModelParams::scalar_count() const {
    std::size_t n = 0;
    for (const auto& t : tensors_) n += static_cast<std::size_t>(t.value.size());
    return n;
}

std::vector<Eigen::MatrixXd> ModelParams::zeros_like() const {
    std::vector<Eigen::MatrixXd> out;
    out.reserve(tensors_.size());
    for (const auto& t : tensors_) out.push_back(Eigen::MatrixXd::Zero(t.value.rows(), t.value.cols()));
    return out;
}

namespace {

enum class Init { Xavier, Zero, One };

struct Shape {
    std::string name;
    int rows;
    int cols;
    Init init;
};

void add_linear(std::vector<Shape>& s, const std::string& p, int in, int out) {
    s.push_back({p + ".w", in, out, Init::Xavier});
    s.push_back({p + ".b", 1, out, Init::Zero});
}

void add_ln(std::vector<Shape>& s, const std::string& p, int d) {
    s.push_back({p + ".g", 1, d, Init::One});
    s.push_back({p + ".b", 1, d, Init::Zero});
}

void add_attention(std::vector<Shape>& s, const std::string& p, int d) {
    for (const char* m : {".q", ".k", ".v", ".o"}) add_linear(s, p + m, d, d);
}

void add_ffn(std::vector<Shape>& s, const std::string& p, int d, int hidden) {
    add_ln(s, p + ".ln", d);
    add_linear(s, p + ".fc1", d, hidden);
    add_linear(s, p + ".fc2", hidden, d);
}

void add_encoder(std::vector<Shape>& s, const std::string& p, int d, int hidden) {
    add_ln(s, p + ".ln", d);
    add_attention(s, p + ".attn", d);
    add_ffn(s, p + ".ffn", d, hidden);
}

std::vector<Shape> param_shapes(const ModelConfig& c) {
    std::vector<Shape> s;
    const int d = c.d_model, ff = c.ffn_mult * c.d_model;
    if (c.uses_poses()) {
        add_linear(s, "pose.embed", 7, d);
        for (int l = 0; l < c.n_self_layers; ++l) add_encoder(s, "pose.self" + std::to_string(l), d, ff);
    }
    if (c.uses_landmarks()) {
        add_linear(s, "lm.embed", 6, d);
        for (int l = 0; l < c.n_self_layers; ++l) add_encoder(s, "lm.self" + std::to_string(l), d, ff);
    }
    if (c.mode == InputMode::Full) {
        for (int l = 0; l < c.n_cross_layers; ++l) {
            const std::string p = "cross" + std::to_string(l);
            add_ln(s, p + ".pose_ln", d);
            add_ln(s, p + ".lm_ln", d);
            add_attention(s, p + ".pose_from_lm", d);
            add_attention(s, p + ".lm_from_pose", d);
            add_ffn(s, p + ".pose_ffn", d, ff);
            add_ffn(s, p + ".lm_ffn", d, ff);
        }
    }
    if (c.uses_poses()) add_ln(s, "pose.final_ln", d);
    if (c.uses_landmarks()) add_ln(s, "lm.final_ln", d);
    const int head_in = c.mode == InputMode::Full ? 2 * d : d;
    add_linear(s, "head.fc1", head_in, c.mlp_hidden);
    add_linear(s, "head.fc2", c.mlp_hidden, c.grid.size() * c.logits_per_cell());
    return s;
}

/// Graph builder over one sample; parameters become tape leaves on demand.
class Net {
public:
    Net(ad::Tape& tape, const ModelParams& params, const ModelConfig& config, std::vector<Mat>* grads)
        : t_(tape), p_(params), c_(config), grads_(grads) {}

    Id w(const std::string& name) {
        const std::size_t k = p_.index_of(name);
        return t_.param(p_.tensors()[k].value, grads_ ? &(*grads_)[k] : nullptr);
    }

    Id linear(Id x, const std::string& p) { return t_.add_bias(t_.matmul(x, w(p + ".w")), w(p + ".b")); }
    Id ln(Id x, const std::string& p) { return t_.layer_norm(x, w(p + ".g"), w(p + ".b")); }

    Id attention(Id queries, Id keys, const std::string& p) {
        const Id q = linear(queries, p + ".q");
        const Id k = linear(keys, p + ".k");
        const Id v = linear(keys, p + ".v");
        const int dh = c_.d_model / c_.n_heads;
        const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
        std::vector<Id> heads;
        for (int h = 0; h < c_.n_heads; ++h) {
            const Id qh = t_.slice_cols(q, h * dh, dh);
            const Id kh = t_.slice_cols(k, h * dh, dh);
            const Id vh = t_.slice_cols(v, h * dh, dh);
            const Id att = t_.softmax_rows(t_.scale(t_.matmul_nt(qh, kh), scale));
            heads.push_back(t_.matmul(att, vh));
        }
        const Id merged = heads.size() == 1 ? heads.front() : t_.hcat(heads);
        return linear(merged, p + ".o");
    }

    Id ffn(Id x, const std::string& p) {
        const Id h = t_.gelu(linear(ln(x, p + ".ln"), p + ".fc1"));
        return t_.add(x, linear(h, p + ".fc2"));
    }

    Id encoder(Id x, const std::string& p) {
        const Id h = ln(x, p + ".ln");
        x = t_.add(x, attention(h, h, p + ".attn"));
        return ffn(x, p + ".ffn");
    }

    ad::Tape& tape() { return t_; }

private:
    ad::Tape& t_;
    const ModelParams& p_;
    const ModelConfig& c_;
    std::vector<Mat>* grads_;
};

Mat gather_rows(const Mat& m, const std::vector<std::uint8_t>& mask) {
    Eigen::Index n = 0;
    for (auto b : mask) n += b ? 1 : 0;
    Mat out(n, m.cols());
    Eigen::Index r = 0;
    for (Eigen::Index k = 0; k < m.rows(); ++k)
        if (mask[static_cast<std::size_t>(k)]) out.row(r++) = m.row(k);
    return out;
}

/// Returns the 1 x (H*W*logits_per_cell) output node.
Id build_graph(ad::Tape& tape, const ModelParams& params, const ModelConfig& c, const Features& f,
               std::vector<Mat>* grads) {
    if (f.poses.rows() != static_cast<Eigen::Index>(f.pose_mask.size()) ||
        f.landmarks.rows() != static_cast<Eigen::Index>(f.landmark_mask.size()) ||
        (f.poses.rows() > 0 && f.poses.cols() != 7) || (f.landmarks.rows() > 0 && f.landmarks.cols() != 6))
        throw ConfigError("feature masks and shapes are inconsistent");
    if (!f.poses.allFinite() || !f.landmarks.allFinite()) throw NumericError("non-finite model input");

    // masked rows are excluded outright, which is exactly attention with -inf key mask
    const Mat poses = c.uses_poses() ? gather_rows(f.poses, f.pose_mask) : Mat(0, 7);
    const Mat lms = c.uses_landmarks() ? gather_rows(f.landmarks, f.landmark_mask) : Mat(0, 6);
    const bool have_p = poses.rows() > 0;
    const bool have_l = lms.rows() > 0;
    if (!have_p && !have_l)
        throw DegenerateInputError(std::string("no input rows for mode '") + to_string(c.mode) + "'");

    Net net(tape, params, c, grads);
    Id xp = -1, xl = -1;
    if (have_p) {
        xp = net.linear(tape.input(poses), "pose.embed");
        for (int l = 0; l < c.n_self_layers; ++l) xp = net.encoder(xp, "pose.self" + std::to_string(l));
    }
    if (have_l) {
        xl = net.linear(tape.input(lms), "lm.embed");
        for (int l = 0; l < c.n_self_layers; ++l) xl = net.encoder(xl, "lm.self" + std::to_string(l));
    }
    if (c.mode == InputMode::Full) {
        for (int l = 0; l < c.n_cross_layers; ++l) {
            const std::string p = "cross" + std::to_string(l);
            const Id hp = have_p ? net.ln(xp, p + ".pose_ln") : -1;
            const Id hl = have_l ? net.ln(xl, p + ".lm_ln") : -1;
            if (have_p && have_l) {
                const Id np = tape.add(xp, net.attention(hp, hl, p + ".pose_from_lm"));
                const Id nl = tape.add(xl, net.attention(hl, hp, p + ".lm_from_pose"));
                xp = np;
                xl = nl;
            }
            if (have_p) xp = net.ffn(xp, p + ".pose_ffn");
            if (have_l) xl = net.ffn(xl, p + ".lm_ffn");
        }
    }

    const int d = c.d_model;
    std::vector<Id> pooled;
    if (c.uses_poses())
        pooled.push_back(have_p ? tape.mean_rows(net.ln(xp, "pose.final_ln")) : tape.input(Mat::Zero(1, d)));
    if (c.uses_landmarks())
        pooled.push_back(have_l ? tape.mean_rows(net.ln(xl, "lm.final_ln")) : tape.input(Mat::Zero(1, d)));
    const Id z = pooled.size() == 1 ? pooled.front() : tape.hcat(pooled);
    const Id h = tape.gelu(net.linear(z, "head.fc1"));
    return net.linear(h, "head.fc2");
}

Mat to_cell_rows(const Mat& flat, int cells, int per_cell) {
    Mat out(cells, per_cell);
    for (int c = 0; c < cells; ++c)
        for (int k = 0; k < per_cell; ++k) out(c, k) = flat(0, c * per_cell + k);
    return out;
}

Mat to_flat(const Mat& rows) {
    Mat out(1, rows.size());
    for (Eigen::Index c = 0; c < rows.rows(); ++c)
        for (Eigen::Index k = 0; k < rows.cols(); ++k) out(0, c * rows.cols() + k) = rows(c, k);
    return out;
}

std::vector<std::size_t> subsample(std::size_t n, std::size_t cap, Rng& rng) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    if (n <= cap) return idx;
    for (std::size_t k = 0; k < cap; ++k) std::swap(idx[k], idx[k + rng.next_below(n - k)]);
    idx.resize(cap);
    std::sort(idx.begin(), idx.end());
    return idx;
}

}  // namespace

ModelParams init_params(const ModelConfig& config) {
    config.validate();
    Rng rng(derive_seed(config.seed, {0x1417}));
    ModelParams p;
    for (const auto& s : param_shapes(config)) {
        Mat m(s.rows, s.cols);
        switch (s.init) {
            case Init::Zero: m.setZero(); break;
            case Init::One: m.setOnes(); break;
            case Init::Xavier: {
                const double limit = std::sqrt(6.0 / (s.rows + s.cols));
                for (Eigen::Index k = 0; k < m.size(); ++k) m(k) = rng.uniform(-limit, limit);
                break;
            }
        }
        p.add(s.name, std::move(m));
    }
    return p;
}

Features featurize(const std::vector<Pose>& poses, const std::vector<Landmark>& landmarks,
                   const ModelConfig& config, std::uint64_t seed) {
    if (poses.empty() && landmarks.empty()) throw DegenerateInputError("no poses and no landmarks to featurize");
    Rng rng(seed);
    const auto pi = subsample(poses.size(), static_cast<std::size_t>(config.max_poses), rng);
    const auto li = subsample(landmarks.size(), static_cast<std::size_t>(config.max_landmarks), rng);
    Features f;
    f.poses.resize(static_cast<Eigen::Index>(pi.size()), 7);
    for (std::size_t r = 0; r < pi.size(); ++r) {
        const Pose& p = poses[pi[r]];
        const Quat& q = p.orientation;
        f.poses.row(static_cast<Eigen::Index>(r)) << p.position.x(), p.position.y(), p.position.z(), q.w(), q.x(),
            q.y(), q.z();
    }
    f.landmarks.resize(static_cast<Eigen::Index>(li.size()), 6);
    for (std::size_t r = 0; r < li.size(); ++r) {
        const Landmark& l = landmarks[li[r]];
        f.landmarks.row(static_cast<Eigen::Index>(r)) << l.position.x(), l.position.y(), l.position.z(), l.color.x(),
            l.color.y(), l.color.z();
    }
    f.pose_mask.assign(pi.size(), 1);
    f.landmark_mask.assign(li.size(), 1);
    return f;
}

Features pad_features(const Features& f, Eigen::Index pose_rows, Eigen::Index landmark_rows) {
    Features out = f;
    if (pose_rows > f.poses.rows()) {
        out.poses = Mat::Zero(pose_rows, 7);
        out.poses.topRows(f.poses.rows()) = f.poses;
        out.pose_mask.resize(static_cast<std::size_t>(pose_rows), 0);
    }
    if (landmark_rows > f.landmarks.rows()) {
        out.landmarks = Mat::Zero(landmark_rows, 6);
        out.landmarks.topRows(f.landmarks.rows()) = f.landmarks;
        out.landmark_mask.resize(static_cast<std::size_t>(landmark_rows), 0);
    }
    return out;
}

Eigen::MatrixXd forward(const ModelParams& params, const ModelConfig& config, const Features& features) {
    ad::Tape tape;
    const Id out = build_graph(tape, params, config, features, nullptr);
    Mat logits = to_cell_rows(tape.value(out), config.grid.size(), config.logits_per_cell());
    if (!logits.allFinite()) throw NumericError("model produced non-finite logits");
    return logits;
}

LossResult loss_and_grad(const Eigen::MatrixXd& logits, const Eigen::MatrixXi& labels, int n_classes,
                         const std::vector<double>& class_weights) {
    const Eigen::Index cells = labels.size();
    const int per_cell = n_classes == 2 ? 1 : n_classes;
    if (logits.rows() != cells || logits.cols() != per_cell)
        throw ConfigError("logits shape does not match labels");
    if (!class_weights.empty() && class_weights.size() != static_cast<std::size_t>(n_classes))
        throw ConfigError("class_weights needs one weight per class");
    auto weight = [&](int y) { return class_weights.empty() ? 1.0 : class_weights[static_cast<std::size_t>(y)]; };

    LossResult res;
    res.dlogits = Mat::Zero(cells, per_cell);
    const double inv = 1.0 / static_cast<double>(cells);
    for (Eigen::Index c = 0; c < cells; ++c) {
        // labels are H x W; cells run row-major over (pitch, yaw)
        const int y = labels(c / labels.cols(), c % labels.cols());
        if (y < 0 || y >= n_classes)
            throw RangeError("label " + std::to_string(y) + " outside [0, " + std::to_string(n_classes) + ")");
        const double wy = weight(y);
        if (n_classes == 2) {
            const double z = logits(c, 0);
            const double l = std::max(z, 0.0) - y * z + std::log1p(std::exp(-std::abs(z)));
            const double s = z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
            res.value += wy * l;
            res.dlogits(c, 0) = wy * (s - y) * inv;
        } else {
            const double m = logits.row(c).maxCoeff();
            const Eigen::RowVectorXd e = (logits.row(c).array() - m).exp();
            const double se = e.sum();
            res.value += wy * (m + std::log(se) - logits(c, y));
            res.dlogits.row(c) = wy * inv * (e / se);
            res.dlogits(c, y) -= wy * inv;
        }
    }
    res.value *= inv;
    return res;
}

double loss(const Eigen::MatrixXd& logits, const Eigen::MatrixXi& labels, int n_classes,
            const std::vector<double>& class_weights) {
    return loss_and_grad(logits, labels, n_classes, class_weights).value;
}

GradientResult gradients(const ModelParams& params, const ModelConfig& config, std::span<const Example> batch,
                         const std::vector<double>& class_weights) {
    if (batch.empty()) throw ConfigError("gradients need a non-empty batch");
    GradientResult res;
    res.grads = params.zeros_like();
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    for (const auto& ex : batch) {
        ad::Tape tape;
        const Id out = build_graph(tape, params, config, ex.features, &res.grads);
        const Mat logits = to_cell_rows(tape.value(out), config.grid.size(), config.logits_per_cell());
        if (!logits.allFinite()) throw NumericError("model produced non-finite logits");
        const auto l = loss_and_grad(logits, ex.labels, config.n_classes, class_weights);
        res.loss += l.value * inv_b;
        tape.backward(out, to_flat(l.dlogits) * inv_b);
    }
    return res;
}

json to_json(const TrainOptions& o) {
    return {{"epochs", o.epochs},
            {"batch_size", o.batch_size},
            {"learning_rate", o.learning_rate},
            {"beta1", o.beta1},
            {"beta2", o.beta2},
            {"adam_eps", o.adam_eps},
            {"class_weights", o.class_weights},
            {"seed", o.seed}};
}

TrainOptions train_options_from_json(const json& j) {
    TrainOptions o;
    o.epochs = j.value("epochs", o.epochs);
    o.batch_size = j.value("batch_size", o.batch_size);
    o.learning_rate = j.value("learning_rate", o.learning_rate);
    o.beta1 = j.value("beta1", o.beta1);
    o.beta2 = j.value("beta2", o.beta2);
    o.adam_eps = j.value("adam_eps", o.adam_eps);
    if (j.contains("class_weights")) o.class_weights = j.at("class_weights").get<std::vector<double>>();
    o.seed = j.value("seed", o.seed);
    if (o.epochs < 0 || o.batch_size <= 0 || !(o.learning_rate >= 0.0)) throw ConfigError("invalid train options");
    return o;
}

Example make_example(const TrainingSample& s, const ModelConfig& config, std::uint64_t seed) {
    if (!(s.grid == config.grid)) throw ConfigError("sample grid does not match model grid");
    return {featurize(s.poses, s.landmarks, config, seed), s.labels};
}

TrainResult train(const std::vector<TrainingSample>& dataset, const ModelConfig& config, const TrainOptions& opts) {
    if (dataset.empty()) throw ConfigError("cannot train on an empty dataset");
    config.validate();
    std::vector<Example> examples;
    examples.reserve(dataset.size());
    for (std::size_t k = 0; k < dataset.size(); ++k)
        examples.push_back(make_example(dataset[k], config, derive_seed(opts.seed, {k})));

    TrainResult res{init_params(config), {}};
    auto& tensors = res.params.tensors();
    auto m = res.params.zeros_like();
    auto v = res.params.zeros_like();
    long step = 0;
    std::vector<std::size_t> order(examples.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> sample_loss(examples.size(), 0.0);

    for (int epoch = 0; epoch < opts.epochs; ++epoch) {
        Rng rng(derive_seed(opts.seed, {0xe90c, static_cast<std::uint64_t>(epoch)}));
        for (std::size_t k = order.size(); k > 1; --k) std::swap(order[k - 1], order[rng.next_below(k)]);

        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(opts.batch_size)) {
            const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(opts.batch_size));
            std::vector<Example> batch;
            for (std::size_t k = start; k < end; ++k) batch.push_back(examples[order[k]]);
            // per-sample losses at the pre-update parameters, for the epoch summary
            for (std::size_t k = start; k < end; ++k)
                sample_loss[order[k]] = loss(forward(res.params, config, examples[order[k]].features),
                                             examples[order[k]].labels, config.n_classes, opts.class_weights);
            const auto g = gradients(res.params, config, batch, opts.class_weights);
            ++step;
            const double bc1 = 1.0 - std::pow(opts.beta1, static_cast<double>(step));
            const double bc2 = 1.0 - std::pow(opts.beta2, static_cast<double>(step));
            for (std::size_t t = 0; t < tensors.size(); ++t) {
                m[t] = opts.beta1 * m[t] + (1.0 - opts.beta1) * g.grads[t];
                v[t] = opts.beta2 * v[t] + (1.0 - opts.beta2) * g.grads[t].cwiseProduct(g.grads[t]);
                tensors[t].value.array() -= opts.learning_rate * (m[t].array() / bc1) /
                                            ((v[t].array() / bc2).sqrt() + opts.adam_eps);
            }
        }
        double total = 0.0;
        for (double l : sample_loss) total += l;
        res.loss_history.push_back(total / static_cast<double>(sample_loss.size()));
    }
    return res;
}

LocMap logits_to_locmap(const Eigen::MatrixXd& logits, const ModelConfig& config) {
    const auto& g = config.grid;
    Eigen::MatrixXd v(g.n_pitch, g.n_yaw);
    for (int c = 0; c < g.size(); ++c) {
        double score;
        if (config.n_classes == 2) {
            const double z = logits(c, 0);
            score = z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
        } else {
            const double m = logits.row(c).maxCoeff();
            const Eigen::RowVectorXd e = (logits.row(c).array() - m).exp();
            double expect = 0.0;
            for (int k = 0; k < config.n_classes; ++k) expect += k * e(k);
            score = expect / e.sum() / (config.n_classes - 1);
        }
        v(c / g.n_yaw, c % g.n_yaw) = score;
    }
    return {g, std::move(v)};
}

LocMap predict_locmap(const ModelParams& params, const ModelConfig& config, const SceneModel& scene,
                      const Waypoint& wp) {
    if (scene.poses.empty()) throw ConfigError("scene has no mapping poses");
    const auto ego = preprocess_inputs(scene.pose_list(), scene.landmark_list(), wp, config.preprocess);
    const auto f = featurize(ego.poses, ego.landmarks, config, config.seed);
    return logits_to_locmap(forward(params, config, f), config);
}

LocMap predict_sample(const ModelParams& params, const ModelConfig& config, const TrainingSample& s) {
    const auto f = featurize(s.poses, s.landmarks, config, config.seed);
    return logits_to_locmap(forward(params, config, f), config);
}

void save_checkpoint(const std::string& path, const ModelConfig& config, const ModelParams& params,
                     const json& metadata) {
    json tensors = json::array();
    for (const auto& t : params.tensors()) {
        std::vector<double> data(t.value.data(), t.value.data() + t.value.size());
        tensors.push_back({{"name", t.name}, {"rows", t.value.rows()}, {"cols", t.value.cols()}, {"data", data}});
    }
    const json j{{"format", "viewloc-checkpoint"},
                 {"version", 1},
                 {"config", to_json(config)},
                 {"metadata", metadata},
                 {"params", std::move(tensors)}};
    write_text_file(path, j.dump() + "\n");
}

Checkpoint load_checkpoint(const std::string& path, const ModelConfig* expected) {
    const json j = read_json_file(path);
    try {
        if (j.value("format", std::string()) != "viewloc-checkpoint") throw ConfigError(path + " is not a checkpoint");
        const int version = j.value("version", 0);
        if (version != 1) throw VersionError(version, 1);
        Checkpoint ck;
        ck.config = model_config_from_json(j.at("config"));
        if (expected && to_json(*expected) != to_json(ck.config))
            throw ConfigError("checkpoint config does not match the requested model config");
        ck.metadata = j.value("metadata", json::object());
        ck.params = init_params(ck.config);
        const auto& stored = j.at("params");
        auto& tensors = ck.params.tensors();
        if (stored.size() != tensors.size()) throw ConfigError("checkpoint parameter count mismatch");
        for (std::size_t k = 0; k < tensors.size(); ++k) {
            const auto& s = stored[k];
            auto& t = tensors[k];
            if (s.at("name").get<std::string>() != t.name || s.at("rows").get<Eigen::Index>() != t.value.rows() ||
                s.at("cols").get<Eigen::Index>() != t.value.cols())
                throw ConfigError("checkpoint tensor " + t.name + " does not match the config");
            const auto data = s.at("data").get<std::vector<double>>();
            if (static_cast<Eigen::Index>(data.size()) != t.value.size())
                throw ConfigError("checkpoint tensor " + t.name + " has wrong length");
            std::copy(data.begin(), data.end(), t.value.data());
        }
        return ck;
    } catch (const json::exception& e) {
        throw ParseError(path, 0, std::string("invalid checkpoint: ") + e.what());
    }
}

}  // namespace viewloc
