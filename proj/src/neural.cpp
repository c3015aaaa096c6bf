#include "stockcast/neural.hpp"

#include "stockcast/errors.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include <json.hpp>

namespace stockcast {

namespace {

int gate_count(CellKind kind) { return kind == CellKind::Lstm ? 4 : 1; }

Eigen::MatrixXd glorot(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    Eigen::MatrixXd m(rows, cols);
    double* data = m.data();
    for (Eigen::Index i = 0; i < rows * cols; ++i) data[i] = rng.uniform(-limit, limit);
    return m;
}

Eigen::VectorXd sigmoid(const Eigen::VectorXd& v) {
    return v.unaryExpr([](double a) { return 1.0 / (1.0 + std::exp(-a)); });
}

void check_finite(const Eigen::VectorXd& v, const char* where) {
    if (!v.allFinite()) throw ModelError(std::string(where) + ": non-finite activation");
}

} // namespace

Network init_network(const NetSpec& spec, Rng& rng) {
    if (spec.widths.empty()) throw std::invalid_argument("init_network: no layer widths");
    if (!(spec.dropout >= 0.0 && spec.dropout < 1.0)) {
        throw std::invalid_argument("init_network: dropout must lie in [0, 1)");
    }
    Network net;
    net.spec = spec;
    const int G = gate_count(spec.kind);
    int in_dim = spec.n_features;
    for (int width : spec.widths) {
        if (width < 1) throw std::invalid_argument("init_network: layer width must be >= 1");
        LayerParams layer;
        layer.wx = glorot(static_cast<Eigen::Index>(G) * width, in_dim, rng);
        layer.wh = glorot(static_cast<Eigen::Index>(G) * width, width, rng);
        layer.b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(G) * width);
        net.layers.push_back(std::move(layer));
        in_dim = width;
    }
    net.dense_w = glorot(1, in_dim, rng);
    net.dense_b = 0.0;
    return net;
}

NetworkGrads zero_grads(const Network& net) {
    NetworkGrads grads;
    for (const auto& layer : net.layers) {
        grads.layers.push_back({Eigen::MatrixXd::Zero(layer.wx.rows(), layer.wx.cols()),
                                Eigen::MatrixXd::Zero(layer.wh.rows(), layer.wh.cols()),
                                Eigen::VectorXd::Zero(layer.b.size())});
    }
    grads.dense_w = Eigen::RowVectorXd::Zero(net.dense_w.size());
    grads.dense_b = 0.0;
    return grads;
}

RnnCache rnn_forward(const LayerParams& p, const Eigen::MatrixXd& xs, const Eigen::VectorXd& h0) {
    const Eigen::Index T = xs.cols();
    const Eigen::Index h = p.wh.cols();
    if (p.wx.cols() != xs.rows() || p.wx.rows() != h || h0.size() != h) {
        throw std::invalid_argument("rnn_forward: shape mismatch");
    }
    RnnCache cache;
    cache.xs = xs;
    cache.hs.resize(h, T + 1);
    cache.hs.col(0) = h0;
    for (Eigen::Index t = 0; t < T; ++t) {
        const Eigen::VectorXd a = p.wx * xs.col(t) + p.wh * cache.hs.col(t) + p.b;
        cache.hs.col(t + 1) = a.array().tanh();
        check_finite(cache.hs.col(t + 1), "rnn_forward");
    }
    return cache;
}

Eigen::MatrixXd rnn_backward(const LayerParams& p, const RnnCache& cache,
                             const Eigen::MatrixXd& dh_out, LayerGrads& grads) {
    const Eigen::Index T = cache.xs.cols();
    Eigen::MatrixXd dxs = Eigen::MatrixXd::Zero(cache.xs.rows(), T);
    Eigen::VectorXd dh_next = Eigen::VectorXd::Zero(p.wh.cols());
    for (Eigen::Index t = T - 1; t >= 0; --t) {
        const Eigen::VectorXd dh = dh_out.col(t) + dh_next;
        const Eigen::VectorXd h = cache.hs.col(t + 1);
        const Eigen::VectorXd da = dh.cwiseProduct((1.0 - h.array().square()).matrix());
        grads.wx += da * cache.xs.col(t).transpose();
        grads.wh += da * cache.hs.col(t).transpose();
        grads.b += da;
        dxs.col(t) = p.wx.transpose() * da;
        dh_next = p.wh.transpose() * da;
    }
    return dxs;
}

LstmCache lstm_forward(const LayerParams& p, const Eigen::MatrixXd& xs,
                       const Eigen::VectorXd& h0, const Eigen::VectorXd& c0) {
    const Eigen::Index T = xs.cols();
    const Eigen::Index h = p.wh.cols();
    if (p.wx.cols() != xs.rows() || p.wx.rows() != 4 * h || h0.size() != h || c0.size() != h) {
        throw std::invalid_argument("lstm_forward: shape mismatch");
    }
    LstmCache cache;
    cache.xs = xs;
    cache.hs.resize(h, T + 1);
    cache.cs.resize(h, T + 1);
    cache.gates.resize(4 * h, T);
    cache.hs.col(0) = h0;
    cache.cs.col(0) = c0;
    for (Eigen::Index t = 0; t < T; ++t) {
        const Eigen::VectorXd a = p.wx * xs.col(t) + p.wh * cache.hs.col(t) + p.b;
        const Eigen::VectorXd i = sigmoid(a.segment(0, h));
        const Eigen::VectorXd f = sigmoid(a.segment(h, h));
        const Eigen::VectorXd g = a.segment(2 * h, h).array().tanh();
        const Eigen::VectorXd o = sigmoid(a.segment(3 * h, h));
        cache.gates.col(t) << i, f, g, o;
        cache.cs.col(t + 1) = f.cwiseProduct(cache.cs.col(t)) + i.cwiseProduct(g);
        cache.hs.col(t + 1) =
            o.cwiseProduct(cache.cs.col(t + 1).array().tanh().matrix());
        check_finite(cache.hs.col(t + 1), "lstm_forward");
    }
    return cache;
}

Eigen::MatrixXd lstm_backward(const LayerParams& p, const LstmCache& cache,
                              const Eigen::MatrixXd& dh_out, LayerGrads& grads) {
    const Eigen::Index T = cache.xs.cols();
    const Eigen::Index h = p.wh.cols();
    Eigen::MatrixXd dxs = Eigen::MatrixXd::Zero(cache.xs.rows(), T);
    Eigen::VectorXd dh_next = Eigen::VectorXd::Zero(h);
    Eigen::VectorXd dc_next = Eigen::VectorXd::Zero(h);
    Eigen::VectorXd da(4 * h);
    for (Eigen::Index t = T - 1; t >= 0; --t) {
        const auto i = cache.gates.col(t).segment(0, h);
        const auto f = cache.gates.col(t).segment(h, h);
        const auto g = cache.gates.col(t).segment(2 * h, h);
        const auto o = cache.gates.col(t).segment(3 * h, h);
        const Eigen::ArrayXd tc = cache.cs.col(t + 1).array().tanh();

        const Eigen::VectorXd dh = dh_out.col(t) + dh_next;
        const Eigen::ArrayXd dc =
            dc_next.array() + dh.array() * o.array() * (1.0 - tc.square());

        da.segment(0, h) =
            (dc * g.array() * i.array() * (1.0 - i.array())).matrix(); // input gate
        da.segment(h, h) =
            (dc * cache.cs.col(t).array() * f.array() * (1.0 - f.array())).matrix(); // forget
        da.segment(2 * h, h) = (dc * i.array() * (1.0 - g.array().square())).matrix(); // cell
        da.segment(3 * h, h) =
            (dh.array() * tc * o.array() * (1.0 - o.array())).matrix(); // output gate

        grads.wx += da * cache.xs.col(t).transpose();
        grads.wh += da * cache.hs.col(t).transpose();
        grads.b += da;
        dxs.col(t) = p.wx.transpose() * da;
        dh_next = p.wh.transpose() * da;
        dc_next = (dc * f.array()).matrix();
    }
    return dxs;
}

DropoutResult dropout_forward(const Eigen::VectorXd& x, double rate, bool train, Rng& rng) {
    if (!(rate >= 0.0 && rate < 1.0)) {
        throw std::invalid_argument("dropout_forward: rate must lie in [0, 1)");
    }
    DropoutResult result;
    if (!train || rate == 0.0) {
        result.output = x;
        result.mask = Eigen::VectorXd::Ones(x.size());
        return result;
    }
    const double keep_scale = 1.0 / (1.0 - rate);
    result.mask.resize(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        result.mask(i) = rng.uniform() < rate ? 0.0 : keep_scale;
    }
    result.output = x.cwiseProduct(result.mask);
    return result;
}

double dense_forward(const Eigen::RowVectorXd& w, double b, const Eigen::VectorXd& h) {
    if (w.size() != h.size()) throw std::invalid_argument("dense_forward: shape mismatch");
    return w.dot(h) + b;
}

double network_forward(const Network& net, const Eigen::MatrixXd& window, bool train, Rng* rng,
                       ForwardCache* cache) {
    if (window.rows() != net.spec.n_features || window.cols() != net.spec.window_len) {
        throw std::invalid_argument("network_forward: window shape mismatch");
    }
    if (train && rng == nullptr) {
        throw std::invalid_argument("network_forward: training mode needs an rng");
    }
    const bool lstm = net.spec.kind == CellKind::Lstm;
    const std::size_t n_layers = net.layers.size();

    ForwardCache local;
    ForwardCache& fc = cache ? *cache : local;
    fc.rnn.clear();
    fc.lstm.clear();
    fc.dropout_masks.assign(n_layers, {});

    Eigen::MatrixXd seq = window;
    Rng dummy(0);
    for (std::size_t l = 0; l < n_layers; ++l) {
        const LayerParams& p = net.layers[l];
        const Eigen::Index width = p.wh.cols();
        Eigen::MatrixXd hs;
        if (lstm) {
            fc.lstm.push_back(lstm_forward(p, seq, Eigen::VectorXd::Zero(width),
                                           Eigen::VectorXd::Zero(width)));
            hs = fc.lstm.back().hs.rightCols(seq.cols());
        } else {
            fc.rnn.push_back(rnn_forward(p, seq, Eigen::VectorXd::Zero(width)));
            hs = fc.rnn.back().hs.rightCols(seq.cols());
        }

        const bool last_layer = l + 1 == n_layers;
        if (last_layer) {
            // Only the final hidden state continues; dropout applies to it.
            const auto drop = dropout_forward(hs.col(hs.cols() - 1), net.spec.dropout, train,
                                              rng ? *rng : dummy);
            fc.dropout_masks[l] = drop.mask;
            fc.dense_input = drop.output;
        } else {
            // Full sequence continues to the next layer, one mask per step.
            Eigen::MatrixXd masked(hs.rows(), hs.cols());
            Eigen::MatrixXd masks(hs.rows(), hs.cols());
            for (Eigen::Index t = 0; t < hs.cols(); ++t) {
                const auto drop =
                    dropout_forward(hs.col(t), net.spec.dropout, train, rng ? *rng : dummy);
                masked.col(t) = drop.output;
                masks.col(t) = drop.mask;
            }
            fc.dropout_masks[l] = std::move(masks);
            seq = std::move(masked);
        }
    }
    fc.prediction = dense_forward(net.dense_w, net.dense_b, fc.dense_input);
    return fc.prediction;
}

void network_backward(const Network& net, const ForwardCache& cache, double dprediction,
                      NetworkGrads& grads) {
    const bool lstm = net.spec.kind == CellKind::Lstm;
    const std::size_t n_layers = net.layers.size();

    grads.dense_w += dprediction * cache.dense_input.transpose();
    grads.dense_b += dprediction;

    // Into the last layer's final hidden state, through its dropout mask.
    Eigen::VectorXd dh_last = net.dense_w.transpose() * dprediction;
    dh_last = dh_last.cwiseProduct(cache.dropout_masks[n_layers - 1]);

    Eigen::MatrixXd dh_seq; // gradient w.r.t. the next-lower layer's output
    for (std::size_t li = n_layers; li-- > 0;) {
        const Eigen::Index T = lstm ? cache.lstm[li].xs.cols() : cache.rnn[li].xs.cols();
        const Eigen::Index width = net.layers[li].wh.cols();

        Eigen::MatrixXd dh_out = Eigen::MatrixXd::Zero(width, T);
        if (li + 1 == n_layers) {
            dh_out.col(T - 1) = dh_last;
        } else {
            dh_out = dh_seq.cwiseProduct(cache.dropout_masks[li]);
        }

        const Eigen::MatrixXd dxs =
            lstm ? lstm_backward(net.layers[li], cache.lstm[li], dh_out, grads.layers[li])
                 : rnn_backward(net.layers[li], cache.rnn[li], dh_out, grads.layers[li]);
        dh_seq = dxs;
    }
}

std::vector<ParamBlock> param_blocks(Network& net) {
    std::vector<ParamBlock> blocks;
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        const std::string prefix = "layer" + std::to_string(l) + ".";
        auto& layer = net.layers[l];
        blocks.push_back({prefix + "wx", layer.wx.data(), static_cast<std::size_t>(layer.wx.rows()),
                          static_cast<std::size_t>(layer.wx.cols())});
        blocks.push_back({prefix + "wh", layer.wh.data(), static_cast<std::size_t>(layer.wh.rows()),
                          static_cast<std::size_t>(layer.wh.cols())});
        blocks.push_back(
            {prefix + "b", layer.b.data(), static_cast<std::size_t>(layer.b.size()), 1});
    }
    blocks.push_back({"dense.w", net.dense_w.data(), 1,
                      static_cast<std::size_t>(net.dense_w.size())});
    blocks.push_back({"dense.b", &net.dense_b, 1, 1});
    return blocks;
}

std::vector<ParamBlock> grad_blocks(NetworkGrads& grads) {
    std::vector<ParamBlock> blocks;
    for (std::size_t l = 0; l < grads.layers.size(); ++l) {
        const std::string prefix = "layer" + std::to_string(l) + ".";
        auto& layer = grads.layers[l];
        blocks.push_back({prefix + "wx", layer.wx.data(), static_cast<std::size_t>(layer.wx.rows()),
                          static_cast<std::size_t>(layer.wx.cols())});
        blocks.push_back({prefix + "wh", layer.wh.data(), static_cast<std::size_t>(layer.wh.rows()),
                          static_cast<std::size_t>(layer.wh.cols())});
        blocks.push_back(
            {prefix + "b", layer.b.data(), static_cast<std::size_t>(layer.b.size()), 1});
    }
    blocks.push_back({"dense.w", grads.dense_w.data(), 1,
                      static_cast<std::size_t>(grads.dense_w.size())});
    blocks.push_back({"dense.b", &grads.dense_b, 1, 1});
    return blocks;
}

void adam_update(double* param, const double* grad, std::size_t n, Eigen::VectorXd& m,
                 Eigen::VectorXd& v, std::int64_t t, const AdamConfig& config) {
    const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < n; ++i) {
        const double g = grad[i];
        m(static_cast<Eigen::Index>(i)) =
            config.beta1 * m(static_cast<Eigen::Index>(i)) + (1.0 - config.beta1) * g;
        v(static_cast<Eigen::Index>(i)) =
            config.beta2 * v(static_cast<Eigen::Index>(i)) + (1.0 - config.beta2) * g * g;
        const double m_hat = m(static_cast<Eigen::Index>(i)) / bc1;
        const double v_hat = v(static_cast<Eigen::Index>(i)) / bc2;
        param[i] -= config.lr * m_hat / (std::sqrt(v_hat) + config.epsilon);
    }
}

AdamState make_adam_state(const Network& net, const AdamConfig& config) {
    AdamState state;
    state.config = config;
    auto blocks = param_blocks(const_cast<Network&>(net));
    for (const auto& block : blocks) {
        state.m.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(block.size())));
        state.v.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(block.size())));
    }
    return state;
}

void adam_step(Network& net, const NetworkGrads& grads, AdamState& state) {
    auto params = param_blocks(net);
    auto gblocks = grad_blocks(const_cast<NetworkGrads&>(grads));
    if (params.size() != state.m.size()) throw std::invalid_argument("adam_step: state mismatch");
    state.t += 1;
    for (std::size_t k = 0; k < params.size(); ++k) {
        if (params[k].size() != gblocks[k].size()) {
            throw std::invalid_argument("adam_step: gradient shape mismatch");
        }
        adam_update(params[k].data, gblocks[k].data, params[k].size(), state.m[k], state.v[k],
                    state.t, state.config);
    }
}

void clip_global_norm(NetworkGrads& grads, double max_norm) {
    auto blocks = grad_blocks(grads);
    double sum_sq = 0.0;
    for (const auto& block : blocks) {
        for (std::size_t i = 0; i < block.size(); ++i) sum_sq += block.data[i] * block.data[i];
    }
    const double norm = std::sqrt(sum_sq);
    if (norm <= max_norm || norm == 0.0) return;
    const double scale = max_norm / norm;
    for (auto& block : blocks) {
        for (std::size_t i = 0; i < block.size(); ++i) block.data[i] *= scale;
    }
}

Eigen::MatrixXd window_to_input(const std::vector<double>& window, int n_features) {
    if (n_features < 1 || window.size() % static_cast<std::size_t>(n_features) != 0) {
        throw std::invalid_argument("window_to_input: bad feature count");
    }
    const Eigen::Index T = static_cast<Eigen::Index>(window.size()) / n_features;
    Eigen::MatrixXd xs(n_features, T);
    for (Eigen::Index t = 0; t < T; ++t) {
        for (Eigen::Index f = 0; f < n_features; ++f) {
            xs(f, t) = window[static_cast<std::size_t>(t * n_features + f)];
        }
    }
    return xs;
}

namespace {

double eval_rmse(const Network& net, const WindowedDataset& data) {
    double sum_sq = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const double pred = network_forward(
            net, window_to_input(data.inputs[i], net.spec.n_features), false, nullptr, nullptr);
        const double e = pred - data.targets[i];
        sum_sq += e * e;
    }
    return std::sqrt(sum_sq / static_cast<double>(data.size()));
}

} // namespace

TrainResult train(const NetSpec& spec, const WindowedDataset& data, const TrainConfig& config) {
    if (data.size() == 0) throw std::invalid_argument("train: empty dataset");
    if (config.epochs < 1 || config.batch_size < 1) {
        throw std::invalid_argument("train: epochs and batch size must be >= 1");
    }

    Rng rng(config.seed);
    TrainResult result;
    result.net = init_network(spec, rng);
    AdamConfig adam_config;
    adam_config.lr = config.lr;
    AdamState adam = make_adam_state(result.net, adam_config);

    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    ForwardCache cache;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        if (config.shuffle) rng.shuffle(order);
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t stop =
                std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
            const double batch_n = static_cast<double>(stop - start);

            NetworkGrads grads = zero_grads(result.net);
            double batch_loss = 0.0;
            for (std::size_t k = start; k < stop; ++k) {
                const std::size_t idx = order[k];
                const double pred = network_forward(
                    result.net, window_to_input(data.inputs[idx], spec.n_features), true, &rng,
                    &cache);
                const double err = pred - data.targets[idx];
                batch_loss += err * err / batch_n;
                network_backward(result.net, cache, 2.0 * err / batch_n, grads);
            }
            if (!std::isfinite(batch_loss)) {
                throw ModelError("train: non-finite loss at epoch " + std::to_string(epoch + 1));
            }
            clip_global_norm(grads, config.clip_norm);
            adam_step(result.net, grads, adam);
        }
        result.epoch_rmse.push_back(eval_rmse(result.net, data));
    }
    return result;
}

std::vector<double> predict_series(const Network& net,
                                   const std::vector<std::vector<double>>& windows) {
    std::vector<double> out;
    out.reserve(windows.size());
    for (const auto& window : windows) {
        out.push_back(network_forward(net, window_to_input(window, net.spec.n_features), false,
                                      nullptr, nullptr));
    }
    return out;
}

void save_network(const Network& net, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);

    auto blocks = param_blocks(const_cast<Network&>(net));
    nlohmann::ordered_json manifest;
    manifest["kind"] = net.spec.kind == CellKind::Lstm ? "lstm" : "rnn";
    manifest["widths"] = net.spec.widths;
    manifest["dropout"] = net.spec.dropout;
    manifest["window_len"] = net.spec.window_len;
    manifest["n_features"] = net.spec.n_features;
    manifest["dtype"] = "float64-le";
    auto jblocks = nlohmann::ordered_json::array();

    std::ofstream bin(fs::path(dir) / "weights.bin", std::ios::binary);
    if (!bin) throw InputError("save_network: cannot write " + dir + "/weights.bin");
    std::size_t offset = 0;
    for (const auto& block : blocks) {
        jblocks.push_back({{"name", block.name},
                           {"rows", block.rows},
                           {"cols", block.cols},
                           {"offset", offset}});
        bin.write(reinterpret_cast<const char*>(block.data),
                  static_cast<std::streamsize>(block.size() * sizeof(double)));
        offset += block.size();
    }
    manifest["blocks"] = std::move(jblocks);

    std::ofstream meta(fs::path(dir) / "network.json");
    if (!meta) throw InputError("save_network: cannot write " + dir + "/network.json");
    meta << manifest.dump(2) << "\n";
}

Network load_network(const std::string& dir) {
    namespace fs = std::filesystem;
    std::ifstream meta(fs::path(dir) / "network.json");
    if (!meta) throw InputError("load_network: cannot read " + dir + "/network.json");
    nlohmann::json manifest;
    meta >> manifest;

    NetSpec spec;
    spec.kind = manifest.at("kind").get<std::string>() == "lstm" ? CellKind::Lstm : CellKind::Rnn;
    spec.widths = manifest.at("widths").get<std::vector<int>>();
    spec.dropout = manifest.at("dropout").get<double>();
    spec.window_len = manifest.at("window_len").get<int>();
    spec.n_features = manifest.at("n_features").get<int>();

    Rng rng(0);
    Network net = init_network(spec, rng);
    auto blocks = param_blocks(net);

    std::ifstream bin(fs::path(dir) / "weights.bin", std::ios::binary);
    if (!bin) throw InputError("load_network: cannot read " + dir + "/weights.bin");
    const auto& jblocks = manifest.at("blocks");
    if (jblocks.size() != blocks.size()) throw InputError("load_network: block count mismatch");
    for (std::size_t k = 0; k < blocks.size(); ++k) {
        const auto& jb = jblocks[k];
        if (jb.at("name").get<std::string>() != blocks[k].name ||
            jb.at("rows").get<std::size_t>() != blocks[k].rows ||
            jb.at("cols").get<std::size_t>() != blocks[k].cols) {
            throw InputError("load_network: manifest does not match network shape");
        }
        bin.read(reinterpret_cast<char*>(blocks[k].data),
                 static_cast<std::streamsize>(blocks[k].size() * sizeof(double)));
        if (!bin) throw InputError("load_network: truncated weights.bin");
    }
    return net;
}

} // namespace stockcast
