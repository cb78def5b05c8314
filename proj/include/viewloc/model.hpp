#pragma once

#include "viewloc/geom.hpp"
#include "viewloc/json_io.hpp"
#include "viewloc/locmap.hpp"
#include "viewloc/oracle.hpp"
#include "viewloc/scene.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace viewloc {

/// Which input branches the network uses. CamOnly / MapOnly drop the other
/// branch and the cross-attention stack.
enum class InputMode { Full, CamOnly, MapOnly };

const char* to_string(InputMode m);
InputMode input_mode_from_string(const std::string& s);

struct ModelConfig {
    int d_model = 64;
    int n_heads = 4;
    int n_self_layers = 2;   // per branch
    int n_cross_layers = 2;
    int mlp_hidden = 128;
    int ffn_mult = 2;        // encoder feed-forward width = ffn_mult * d_model
    ViewGrid grid;
    int n_classes = 2;       // 2 (binary logits) or 4
    int max_landmarks = 2048;
    int max_poses = 256;
    InputMode mode = InputMode::Full;
    PreprocessOptions preprocess;
    std::uint64_t seed = 0;

    void validate() const;
    /// Logit columns per cell: 1 for binary, n_classes otherwise.
    int logits_per_cell() const { return n_classes == 2 ? 1 : n_classes; }
    bool uses_poses() const { return mode != InputMode::MapOnly; }
    bool uses_landmarks() const { return mode != InputMode::CamOnly; }
};

json to_json(const ModelConfig& c);
ModelConfig model_config_from_json(const json& j);

struct NamedTensor {
    std::string name;
    Eigen::MatrixXd value;
};

/// All network weights, in a fixed creation order.
class ModelParams {
public:
    void add(std::string name, Eigen::MatrixXd value);
    const Eigen::MatrixXd& get(const std::string& name) const;
    std::size_t index_of(const std::string& name) const;

    std::vector<NamedTensor>& tensors() { return tensors_; }
    const std::vector<NamedTensor>& tensors() const { return tensors_; }
    std::size_t scalar_count() const;
    /// Zero tensors with the same shapes (gradient accumulators).
    std::vector<Eigen::MatrixXd> zeros_like() const;

private:
    std::vector<NamedTensor> tensors_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// Xavier-uniform weights, zero biases, unit layer-norm gains; seeded by config.seed.
ModelParams init_params(const ModelConfig& config);

/// Pose rows (p_c, q_c) and landmark rows (xyz, rgb), with row masks.
/// Rows whose mask is false are padding and never influence the output.
struct Features {
    Eigen::MatrixXd poses;      // M x 7
    Eigen::MatrixXd landmarks;  // N x 6
    std::vector<std::uint8_t> pose_mask;
    std::vector<std::uint8_t> landmark_mask;
};

/// Builds feature rows from preprocessed (egocentric, cropped) inputs.
/// Sequences above the config caps are subsampled uniformly with `seed`.
/// Throws DegenerateInputError when both sequences are empty.
Features featurize(const std::vector<Pose>& poses, const std::vector<Landmark>& landmarks,
                   const ModelConfig& config, std::uint64_t seed);

/// Appends zero rows (mask false) up to the given lengths.
Features pad_features(const Features& f, Eigen::Index pose_rows, Eigen::Index landmark_rows);

/// Logits of shape (H*W) x logits_per_cell, cells in row-major (pitch, yaw) order.
/// Throws NumericError on non-finite inputs, DegenerateInputError if the
/// branches the config uses are all empty.
Eigen::MatrixXd forward(const ModelParams& params, const ModelConfig& config, const Features& features);

struct LossResult {
    double value = 0.0;
    Eigen::MatrixXd dlogits;
};

/// Mean per-cell cross-entropy (sigmoid for binary, softmax otherwise),
/// each cell weighted by class_weights[label] (empty = all ones).
/// Throws RangeError for labels outside [0, n_classes).
LossResult loss_and_grad(const Eigen::MatrixXd& logits, const Eigen::MatrixXi& labels, int n_classes,
                         const std::vector<double>& class_weights = {});
double loss(const Eigen::MatrixXd& logits, const Eigen::MatrixXi& labels, int n_classes,
            const std::vector<double>& class_weights = {});

struct Example {
    Features features;
    Eigen::MatrixXi labels;
};

struct GradientResult {
    double loss = 0.0;                    // mean over the batch
    std::vector<Eigen::MatrixXd> grads;   // parameter-shaped, same order as ModelParams
};

/// Exact gradients of the mean batch loss; samples are accumulated in order.
GradientResult gradients(const ModelParams& params, const ModelConfig& config, std::span<const Example> batch,
                         const std::vector<double>& class_weights = {});

struct TrainOptions {
    int epochs = 50;
    int batch_size = 8;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    std::vector<double> class_weights;
    std::uint64_t seed = 0;
};

json to_json(const TrainOptions& o);
TrainOptions train_options_from_json(const json& j);

struct TrainResult {
    ModelParams params;
    std::vector<double> loss_history;  // mean per-sample loss of each epoch
};

/// Adam on shuffled mini-batches. Each sample's subsample is fixed for the
/// whole run, so a zero learning rate gives a constant loss history.
/// Throws ConfigError on an empty dataset.
TrainResult train(const std::vector<TrainingSample>& dataset, const ModelConfig& config, const TrainOptions& opts);

Example make_example(const TrainingSample& s, const ModelConfig& config, std::uint64_t seed);

/// Converts logits to a per-direction score in [0, 1]: sigmoid for binary,
/// normalized expected quality level for multi-class.
LocMap logits_to_locmap(const Eigen::MatrixXd& logits, const ModelConfig& config);

/// Preprocess + featurize + forward at a world waypoint. The LocMap is
/// expressed in the world yaw frame (waypoint default_yaw is not applied).
LocMap predict_locmap(const ModelParams& params, const ModelConfig& config, const SceneModel& scene,
                      const Waypoint& wp);
/// Same, from already preprocessed sample inputs.
LocMap predict_sample(const ModelParams& params, const ModelConfig& config, const TrainingSample& s);

struct Checkpoint {
    ModelConfig config;
    ModelParams params;
    json metadata;
};

void save_checkpoint(const std::string& path, const ModelConfig& config, const ModelParams& params,
                     const json& metadata = json::object());
/// Throws ConfigError if `expected` is given and differs from the stored config.
Checkpoint load_checkpoint(const std::string& path, const ModelConfig* expected = nullptr);

}  // namespace viewloc
