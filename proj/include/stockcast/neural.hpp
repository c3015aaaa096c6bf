#pragma once

#include "stockcast/data.hpp"
#include "stockcast/rng.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace stockcast {

enum class CellKind { Rnn, Lstm };

struct NetSpec {
    CellKind kind = CellKind::Lstm;
    std::vector<int> widths{256, 128}; // stacked recurrent layer sizes
    double dropout = 0.2;              // after each recurrent layer
    int window_len = 7;
    int n_features = 1;
};

/// One recurrent layer. For LSTM the gate blocks stack row-wise in the order
/// (input, forget, cell candidate, output): wx is [G*h x in], wh [G*h x h],
/// b [G*h] with G = 4; a plain tanh RNN has G = 1.
struct LayerParams {
    Eigen::MatrixXd wx;
    Eigen::MatrixXd wh;
    Eigen::VectorXd b;
};

struct LayerGrads {
    Eigen::MatrixXd wx;
    Eigen::MatrixXd wh;
    Eigen::VectorXd b;
};

struct Network {
    NetSpec spec;
    std::vector<LayerParams> layers;
    Eigen::RowVectorXd dense_w;
    double dense_b = 0.0;
};

struct NetworkGrads {
    std::vector<LayerGrads> layers;
    Eigen::RowVectorXd dense_w;
    double dense_b = 0.0;
};

/// Glorot-uniform weights, zero biases. Deterministic per rng state.
Network init_network(const NetSpec& spec, Rng& rng);
NetworkGrads zero_grads(const Network& net);

// ---- single-layer primitives (sequence columns are time steps) ----

struct RnnCache {
    Eigen::MatrixXd xs; // in x T
    Eigen::MatrixXd hs; // h x (T+1); column 0 is the initial state
};

struct LstmCache {
    Eigen::MatrixXd xs;
    Eigen::MatrixXd hs;    // h x (T+1)
    Eigen::MatrixXd cs;    // h x (T+1)
    Eigen::MatrixXd gates; // 4h x T, post-nonlinearity, (i, f, g, o) blocks
};

/// h_t = tanh(wx x_t + wh h_{t-1} + b). The full state sequence is returned;
/// callers wanting only h_T read the last column.
RnnCache rnn_forward(const LayerParams& p, const Eigen::MatrixXd& xs, const Eigen::VectorXd& h0);

/// Backpropagation through time. dh_out holds one gradient column per step
/// (zero columns for unused outputs); parameter gradients accumulate into
/// `grads` and the input-sequence gradient is returned.
Eigen::MatrixXd rnn_backward(const LayerParams& p, const RnnCache& cache,
                             const Eigen::MatrixXd& dh_out, LayerGrads& grads);

LstmCache lstm_forward(const LayerParams& p, const Eigen::MatrixXd& xs,
                       const Eigen::VectorXd& h0, const Eigen::VectorXd& c0);

Eigen::MatrixXd lstm_backward(const LayerParams& p, const LstmCache& cache,
                              const Eigen::MatrixXd& dh_out, LayerGrads& grads);

/// Inverted dropout: training mode zeroes units with probability `rate` and
/// scales survivors by 1/(1-rate); eval mode is the identity. The returned
/// mask already carries the scaling.
struct DropoutResult {
    Eigen::VectorXd output;
    Eigen::VectorXd mask; // entries 0 or 1/(1-rate); all-ones in eval mode
};
DropoutResult dropout_forward(const Eigen::VectorXd& x, double rate, bool train, Rng& rng);

double dense_forward(const Eigen::RowVectorXd& w, double b, const Eigen::VectorXd& h);

// ---- full stacked network ----

struct ForwardCache {
    std::vector<RnnCache> rnn;
    std::vector<LstmCache> lstm;
    std::vector<Eigen::MatrixXd> dropout_masks; // per layer, matching its output shape
    Eigen::VectorXd dense_input;
    double prediction = 0.0;
};

/// Layer 1 feeds its full hidden sequence (through dropout) to layer 2,
/// whose final hidden state (through dropout) feeds the dense head.
/// Train mode draws dropout masks from `rng`; eval mode is deterministic.
double network_forward(const Network& net, const Eigen::MatrixXd& window, bool train, Rng* rng,
                       ForwardCache* cache);

void network_backward(const Network& net, const ForwardCache& cache, double dprediction,
                      NetworkGrads& grads);

// ---- optimizer ----

struct AdamConfig {
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct AdamState {
    AdamConfig config;
    std::int64_t t = 0;
    std::vector<Eigen::VectorXd> m; // one flat block per parameter tensor
    std::vector<Eigen::VectorXd> v;
};

/// Flat views over every trainable tensor, in a fixed enumeration order
/// shared by the optimizer, the serializer and gradient checks.
struct ParamBlock {
    std::string name;
    double* data = nullptr;
    std::size_t rows = 0;
    std::size_t cols = 0;

    std::size_t size() const { return rows * cols; }
};
std::vector<ParamBlock> param_blocks(Network& net);
std::vector<ParamBlock> grad_blocks(NetworkGrads& grads);

/// One bias-corrected Adam update on a flat array; the building block of
/// adam_step and directly usable for scalar problems.
void adam_update(double* param, const double* grad, std::size_t n, Eigen::VectorXd& m,
                 Eigen::VectorXd& v, std::int64_t t, const AdamConfig& config);

AdamState make_adam_state(const Network& net, const AdamConfig& config);
void adam_step(Network& net, const NetworkGrads& grads, AdamState& state);

/// Scale all gradients so their global L2 norm is at most max_norm.
void clip_global_norm(NetworkGrads& grads, double max_norm);

// ---- training ----

struct TrainConfig {
    int epochs = 100;
    int batch_size = 64;
    double lr = 0.001;
    std::uint64_t seed = 0;
    bool shuffle = true;
    double clip_norm = 5.0;
};

struct TrainResult {
    Network net;
    std::vector<double> epoch_rmse; // eval-mode RMSE over the train set, per epoch
};

/// Minibatch training on MSE gradients (RMSE is what gets reported). The
/// last incomplete batch is included. Deterministic per (seed, config, data).
TrainResult train(const NetSpec& spec, const WindowedDataset& data, const TrainConfig& config);

/// Eval-mode predictions, one scalar per window, in scaled space.
std::vector<double> predict_series(const Network& net,
                                   const std::vector<std::vector<double>>& windows);

Eigen::MatrixXd window_to_input(const std::vector<double>& window, int n_features);

/// Shape-tagged little-endian float64 blob (`weights.bin`) plus a JSON
/// manifest (`network.json`) describing the spec and every block.
void save_network(const Network& net, const std::string& dir);
Network load_network(const std::string& dir);

} // namespace stockcast
