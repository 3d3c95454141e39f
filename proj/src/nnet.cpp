#include "rstv/nnet.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <numeric>

#include "binio.hpp"

using nlohmann::json;

namespace rstv::nnet {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;
using MapVec = Eigen::Map<Eigen::VectorXd>;
using ConstMapVec = Eigen::Map<const Eigen::VectorXd>;

int64_t product(const std::vector<int>& shape) {
    int64_t p = 1;
    for (int d : shape) p *= d;
    return p;
}

struct ConvDims {
    int in_ch, h, w, out_ch, k, stride, oh, ow;
};

ConvDims conv_dims(const LayerSpec& spec, const std::vector<int>& in_shape) {
    if (in_shape.size() != 3) throw std::invalid_argument("conv2d input must be C,H,W");
    ConvDims d;
    d.in_ch = in_shape[0];
    d.h = in_shape[1];
    d.w = in_shape[2];
    d.out_ch = spec.out_ch;
    d.k = spec.kernel;
    d.stride = spec.stride;
    if (d.in_ch != spec.in_ch) throw std::invalid_argument("conv2d channel mismatch");
    if (d.h < d.k || d.w < d.k) throw std::invalid_argument("conv2d input smaller than kernel");
    d.oh = (d.h - d.k) / d.stride + 1;
    d.ow = (d.w - d.k) / d.stride + 1;
    return d;
}

void im2col(const double* x, const ConvDims& d, RowMat& cols) {
    cols.resize(static_cast<int64_t>(d.in_ch) * d.k * d.k, static_cast<int64_t>(d.oh) * d.ow);
    for (int c = 0; c < d.in_ch; ++c) {
        const double* plane = x + static_cast<int64_t>(c) * d.h * d.w;
        for (int ky = 0; ky < d.k; ++ky) {
            for (int kx = 0; kx < d.k; ++kx) {
                const int row = (c * d.k + ky) * d.k + kx;
                for (int oy = 0; oy < d.oh; ++oy) {
                    const double* src = plane + (oy * d.stride + ky) * d.w + kx;
                    double* dst = cols.data() + static_cast<int64_t>(row) * cols.cols() +
                                  static_cast<int64_t>(oy) * d.ow;
                    for (int ox = 0; ox < d.ow; ++ox) dst[ox] = src[ox * d.stride];
                }
            }
        }
    }
}

void col2im_add(const RowMat& dcols, const ConvDims& d, double* dx) {
    for (int c = 0; c < d.in_ch; ++c) {
        double* plane = dx + static_cast<int64_t>(c) * d.h * d.w;
        for (int ky = 0; ky < d.k; ++ky) {
            for (int kx = 0; kx < d.k; ++kx) {
                const int row = (c * d.k + ky) * d.k + kx;
                for (int oy = 0; oy < d.oh; ++oy) {
                    const double* src = dcols.data() + static_cast<int64_t>(row) * dcols.cols() +
                                        static_cast<int64_t>(oy) * d.ow;
                    double* dst = plane + (oy * d.stride + ky) * d.w + kx;
                    for (int ox = 0; ox < d.ow; ++ox) dst[ox * d.stride] += src[ox];
                }
            }
        }
    }
}

}  // namespace

Tensor::Tensor(std::vector<int> s) : shape(std::move(s)) {
    data.assign(static_cast<size_t>(product(shape)), 0.0);
}

LayerSpec LayerSpec::dense(int in, int out) {
    if (in <= 0 || out <= 0) throw std::invalid_argument("dense dims must be positive");
    LayerSpec l;
    l.kind = Kind::Dense;
    l.in = in;
    l.out = out;
    return l;
}

LayerSpec LayerSpec::conv2d(int in_ch, int out_ch, int kernel, int stride) {
    if (in_ch <= 0 || out_ch <= 0 || kernel <= 0) throw std::invalid_argument("conv dims must be positive");
    if (stride != 1 && stride != 2) throw std::invalid_argument("conv stride must be 1 or 2");
    LayerSpec l;
    l.kind = Kind::Conv2d;
    l.in_ch = in_ch;
    l.out_ch = out_ch;
    l.kernel = kernel;
    l.stride = stride;
    return l;
}

LayerSpec LayerSpec::maxpool2d(int k) {
    if (k != 2) throw std::invalid_argument("maxpool kernel must be 2");
    LayerSpec l;
    l.kind = Kind::MaxPool2d;
    l.pool = k;
    return l;
}

LayerSpec LayerSpec::relu() {
    LayerSpec l;
    l.kind = Kind::Relu;
    return l;
}

LayerSpec LayerSpec::dropout(double p) {
    if (p < 0.0 || p >= 1.0) throw std::invalid_argument("dropout rate must be in [0,1)");
    LayerSpec l;
    l.kind = Kind::Dropout;
    l.p = p;
    return l;
}

std::string LayerSpec::kind_name() const {
    switch (kind) {
        case Kind::Dense: return "dense";
        case Kind::Conv2d: return "conv2d";
        case Kind::MaxPool2d: return "maxpool2d";
        case Kind::Relu: return "relu";
        case Kind::Dropout: return "dropout";
    }
    return "?";
}

Network::Network(std::vector<int> input_shape, std::vector<LayerSpec> layers, uint64_t seed)
    : input_shape_(std::move(input_shape)), layers_(std::move(layers)), seed_(seed),
      rng_(Rng::mix(seed, 2)) {
    if (input_shape_.empty() || product(input_shape_) <= 0) {
        throw std::invalid_argument("bad input shape");
    }
    Rng init(Rng::mix(seed_, 1));
    std::vector<int> shape = input_shape_;
    for (const LayerSpec& l : layers_) {
        param_base_.push_back(-1);
        switch (l.kind) {
            case LayerSpec::Kind::Dense: {
                if (product(shape) != l.in) throw std::invalid_argument("dense input dim mismatch");
                param_base_.back() = static_cast<int>(params_.size());
                Tensor W({l.out, l.in});
                const double a = std::sqrt(6.0 / (l.in + l.out));
                for (auto& w : W.data) w = init.uniform(-a, a);
                params_.push_back(std::move(W));
                params_.emplace_back(std::vector<int>{l.out});
                shape = {l.out};
                break;
            }
            case LayerSpec::Kind::Conv2d: {
                ConvDims d = conv_dims(l, shape);
                param_base_.back() = static_cast<int>(params_.size());
                Tensor W({l.out_ch, l.in_ch, l.kernel, l.kernel});
                const int fan_in = l.in_ch * l.kernel * l.kernel;
                const int fan_out = l.out_ch * l.kernel * l.kernel;
                const double a = std::sqrt(6.0 / (fan_in + fan_out));
                for (auto& w : W.data) w = init.uniform(-a, a);
                params_.push_back(std::move(W));
                params_.emplace_back(std::vector<int>{l.out_ch});
                shape = {d.out_ch, d.oh, d.ow};
                break;
            }
            case LayerSpec::Kind::MaxPool2d: {
                if (shape.size() != 3) throw std::invalid_argument("maxpool input must be C,H,W");
                if (shape[1] < 2 || shape[2] < 2) throw std::invalid_argument("maxpool input too small");
                shape = {shape[0], shape[1] / 2, shape[2] / 2};
                break;
            }
            case LayerSpec::Kind::Relu:
            case LayerSpec::Kind::Dropout:
                break;
        }
        act_shapes_.push_back(shape);
    }
}

int Network::input_dim() const { return static_cast<int>(product(input_shape_)); }

int Network::output_dim() const {
    return static_cast<int>(product(act_shapes_.empty() ? input_shape_ : act_shapes_.back()));
}

void Network::reseed(uint64_t seed) const { rng_ = Rng(Rng::mix(seed, 2)); }

struct Network::Cache {
    // Input to each layer (act[0] = network input), plus act[L] = output.
    std::vector<Eigen::VectorXd> act;
    std::vector<Eigen::VectorXd> dropout_mask;  // per layer, empty unless dropout
    std::vector<std::vector<int>> pool_argmax;  // per layer, flat input index per output
};

void Network::forward_sample(const Eigen::VectorXd& x, bool train_mode, Cache* cache,
                             Eigen::VectorXd& out) const {
    if (x.size() != input_dim()) throw std::invalid_argument("input dim mismatch");
    Eigen::VectorXd cur = x;
    std::vector<int> shape = input_shape_;
    if (cache) {
        cache->act.assign(1, cur);
        cache->dropout_mask.assign(layers_.size(), {});
        cache->pool_argmax.assign(layers_.size(), {});
    }
    for (size_t li = 0; li < layers_.size(); ++li) {
        const LayerSpec& l = layers_[li];
        Eigen::VectorXd next;
        switch (l.kind) {
            case LayerSpec::Kind::Dense: {
                const Tensor& W = params_[param_base_[li]];
                const Tensor& b = params_[param_base_[li] + 1];
                ConstMapMat Wm(W.data.data(), l.out, l.in);
                ConstMapVec bv(b.data.data(), l.out);
                next.noalias() = Wm * cur;
                next += bv;
                break;
            }
            case LayerSpec::Kind::Conv2d: {
                ConvDims d = conv_dims(l, shape);
                RowMat cols;
                im2col(cur.data(), d, cols);
                const Tensor& W = params_[param_base_[li]];
                const Tensor& b = params_[param_base_[li] + 1];
                ConstMapMat Wm(W.data.data(), d.out_ch, static_cast<int64_t>(d.in_ch) * d.k * d.k);
                next.resize(static_cast<int64_t>(d.out_ch) * d.oh * d.ow);
                MapMat Ym(next.data(), d.out_ch, static_cast<int64_t>(d.oh) * d.ow);
                Ym.noalias() = Wm * cols;
                for (int oc = 0; oc < d.out_ch; ++oc) Ym.row(oc).array() += b.data[oc];
                break;
            }
            case LayerSpec::Kind::MaxPool2d: {
                const int C = shape[0], H = shape[1], W = shape[2];
                const int oh = H / 2, ow = W / 2;
                next.resize(static_cast<int64_t>(C) * oh * ow);
                std::vector<int>* arg = cache ? &cache->pool_argmax[li] : nullptr;
                if (arg) arg->assign(next.size(), 0);
                for (int c = 0; c < C; ++c) {
                    for (int oy = 0; oy < oh; ++oy) {
                        for (int ox = 0; ox < ow; ++ox) {
                            int best = (c * H + 2 * oy) * W + 2 * ox;
                            double bv = cur[best];
                            for (int dy = 0; dy < 2; ++dy) {
                                for (int dx = 0; dx < 2; ++dx) {
                                    const int idx = (c * H + 2 * oy + dy) * W + 2 * ox + dx;
                                    if (cur[idx] > bv) {
                                        bv = cur[idx];
                                        best = idx;
                                    }
                                }
                            }
                            const int64_t o = (static_cast<int64_t>(c) * oh + oy) * ow + ox;
                            next[o] = bv;
                            if (arg) (*arg)[o] = best;
                        }
                    }
                }
                break;
            }
            case LayerSpec::Kind::Relu:
                next = cur.cwiseMax(0.0);
                break;
            case LayerSpec::Kind::Dropout: {
                if (train_mode) {
                    Eigen::VectorXd mask(cur.size());
                    const double scale = 1.0 / (1.0 - l.p);
                    for (int64_t i = 0; i < cur.size(); ++i) {
                        mask[i] = rng_.uniform() < l.p ? 0.0 : scale;
                    }
                    next = cur.cwiseProduct(mask);
                    if (cache) cache->dropout_mask[li] = std::move(mask);
                } else {
                    next = cur;
                }
                break;
            }
        }
        cur = std::move(next);
        shape = act_shapes_[li];
        if (cache) cache->act.push_back(cur);
    }
    out = std::move(cur);
}

void Network::backward_sample(const Cache& cache, const Eigen::VectorXd& dloss,
                              std::vector<Tensor>& grads) const {
    Eigen::VectorXd delta = dloss;
    for (int li = static_cast<int>(layers_.size()) - 1; li >= 0; --li) {
        const LayerSpec& l = layers_[li];
        const Eigen::VectorXd& x = cache.act[li];
        const std::vector<int>& in_shape = li == 0 ? input_shape_ : act_shapes_[li - 1];
        Eigen::VectorXd dx;
        switch (l.kind) {
            case LayerSpec::Kind::Dense: {
                const Tensor& W = params_[param_base_[li]];
                ConstMapMat Wm(W.data.data(), l.out, l.in);
                MapMat dWm(grads[param_base_[li]].data.data(), l.out, l.in);
                MapVec dbv(grads[param_base_[li] + 1].data.data(), l.out);
                dWm.noalias() += delta * x.transpose();
                dbv += delta;
                dx.noalias() = Wm.transpose() * delta;
                break;
            }
            case LayerSpec::Kind::Conv2d: {
                ConvDims d = conv_dims(l, in_shape);
                RowMat cols;
                im2col(x.data(), d, cols);
                const int64_t K = static_cast<int64_t>(d.in_ch) * d.k * d.k;
                const int64_t P = static_cast<int64_t>(d.oh) * d.ow;
                ConstMapMat dYm(delta.data(), d.out_ch, P);
                MapMat dWm(grads[param_base_[li]].data.data(), d.out_ch, K);
                MapVec dbv(grads[param_base_[li] + 1].data.data(), d.out_ch);
                dWm.noalias() += dYm * cols.transpose();
                dbv += dYm.rowwise().sum();
                const Tensor& W = params_[param_base_[li]];
                ConstMapMat Wm(W.data.data(), d.out_ch, K);
                RowMat dcols(K, P);
                dcols.noalias() = Wm.transpose() * dYm;
                dx = Eigen::VectorXd::Zero(x.size());
                col2im_add(dcols, d, dx.data());
                break;
            }
            case LayerSpec::Kind::MaxPool2d: {
                dx = Eigen::VectorXd::Zero(x.size());
                const std::vector<int>& arg = cache.pool_argmax[li];
                for (size_t o = 0; o < arg.size(); ++o) dx[arg[o]] += delta[static_cast<int64_t>(o)];
                break;
            }
            case LayerSpec::Kind::Relu:
                dx = (x.array() > 0.0).select(delta, 0.0);
                break;
            case LayerSpec::Kind::Dropout:
                if (cache.dropout_mask[li].size() > 0) {
                    dx = delta.cwiseProduct(cache.dropout_mask[li]);
                } else {
                    dx = delta;
                }
                break;
        }
        delta = std::move(dx);
    }
}

Eigen::VectorXd Network::forward(const Eigen::VectorXd& x, bool train_mode) const {
    Eigen::VectorXd out;
    forward_sample(x, train_mode, nullptr, out);
    return out;
}

Eigen::MatrixXd Network::forward_batch(const Eigen::MatrixXd& X, bool train_mode) const {
    Eigen::MatrixXd out(X.rows(), output_dim());
    for (int i = 0; i < X.rows(); ++i) {
        Eigen::VectorXd y;
        Eigen::VectorXd x = X.row(i);
        forward_sample(x, train_mode, nullptr, y);
        out.row(i) = y;
    }
    return out;
}

double Network::loss(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, bool train_mode) const {
    if (X.rows() != Y.rows() || X.rows() == 0) throw std::invalid_argument("batch shape mismatch");
    Eigen::MatrixXd pred = forward_batch(X, train_mode);
    return (pred - Y).rowwise().squaredNorm().mean();
}

double Network::backward(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, bool train_mode,
                         std::vector<Tensor>& grads) const {
    if (X.rows() != Y.rows() || X.rows() == 0) throw std::invalid_argument("batch shape mismatch");
    if (Y.cols() != output_dim()) throw std::invalid_argument("target dim mismatch");
    grads.clear();
    grads.reserve(params_.size());
    for (const Tensor& p : params_) grads.emplace_back(p.shape);

    const double n = static_cast<double>(X.rows());
    double total = 0.0;
    for (int i = 0; i < X.rows(); ++i) {
        Cache cache;
        Eigen::VectorXd out;
        Eigen::VectorXd x = X.row(i);
        forward_sample(x, train_mode, &cache, out);
        Eigen::VectorXd diff = out - Y.row(i).transpose();
        total += diff.squaredNorm();
        Eigen::VectorXd dloss = (2.0 / n) * diff;
        backward_sample(cache, dloss, grads);
    }
    return total / n;
}

void adam_step(Network& net, const std::vector<Tensor>& grads, AdamState& state) {
    auto& params = net.params();
    if (grads.size() != params.size()) throw std::invalid_argument("gradient count mismatch");
    if (state.m.empty()) {
        for (const Tensor& p : params) {
            state.m.emplace_back(p.shape);
            state.v.emplace_back(p.shape);
        }
    }
    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (size_t pi = 0; pi < params.size(); ++pi) {
        auto& p = params[pi].data;
        auto& m = state.m[pi].data;
        auto& v = state.v[pi].data;
        const auto& g = grads[pi].data;
        for (size_t i = 0; i < p.size(); ++i) {
            m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
            v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            p[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
        }
    }
}

namespace {

json layer_to_json(const LayerSpec& l) {
    json j;
    j["kind"] = l.kind_name();
    switch (l.kind) {
        case LayerSpec::Kind::Dense:
            j["in"] = l.in;
            j["out"] = l.out;
            break;
        case LayerSpec::Kind::Conv2d:
            j["in_ch"] = l.in_ch;
            j["out_ch"] = l.out_ch;
            j["kernel"] = l.kernel;
            j["stride"] = l.stride;
            break;
        case LayerSpec::Kind::MaxPool2d:
            j["k"] = l.pool;
            break;
        case LayerSpec::Kind::Dropout:
            j["p"] = l.p;
            break;
        case LayerSpec::Kind::Relu:
            break;
    }
    return j;
}

LayerSpec layer_from_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "dense") return LayerSpec::dense(j.at("in"), j.at("out"));
    if (kind == "conv2d") {
        return LayerSpec::conv2d(j.at("in_ch"), j.at("out_ch"), j.at("kernel"), j.at("stride"));
    }
    if (kind == "maxpool2d") return LayerSpec::maxpool2d(j.at("k"));
    if (kind == "relu") return LayerSpec::relu();
    if (kind == "dropout") return LayerSpec::dropout(j.at("p"));
    throw std::runtime_error("unknown layer kind " + kind);
}

constexpr char kNetMagic[8] = {'R', 'S', 'T', 'V', 'N', 'N', 'E', 'T'};
constexpr uint32_t kNetVersion = 1;

using rstv::detail::read_u32;
using rstv::detail::write_u32;

}  // namespace

void Network::save(std::ostream& out) const {
    json header;
    header["input_shape"] = input_shape_;
    header["seed"] = seed_;
    json jl = json::array();
    for (const LayerSpec& l : layers_) jl.push_back(layer_to_json(l));
    header["layers"] = std::move(jl);
    const std::string hs = header.dump();

    out.write(kNetMagic, 8);
    write_u32(out, kNetVersion);
    write_u32(out, static_cast<uint32_t>(hs.size()));
    out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
    std::vector<float> buf;
    for (const Tensor& p : params_) {
        buf.assign(p.data.begin(), p.data.end());
        out.write(reinterpret_cast<const char*>(buf.data()),
                  static_cast<std::streamsize>(buf.size() * sizeof(float)));
    }
    if (!out) throw std::runtime_error("failed writing network stream");
}

void Network::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    save(out);
}

Network Network::load(std::istream& in) {
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kNetMagic, 8) != 0) {
        throw std::runtime_error("not a network model stream");
    }
    const uint32_t version = read_u32(in);
    if (version != kNetVersion) throw std::runtime_error("unsupported network model version");
    const uint32_t hlen = read_u32(in);
    std::string hs(hlen, '\0');
    in.read(hs.data(), hlen);
    if (!in) throw std::runtime_error("truncated network header");
    const json header = json::parse(hs);

    std::vector<LayerSpec> layers;
    for (const auto& jl : header.at("layers")) layers.push_back(layer_from_json(jl));
    Network net(header.at("input_shape").get<std::vector<int>>(), std::move(layers),
                header.at("seed").get<uint64_t>());
    std::vector<float> buf;
    for (Tensor& p : net.params_) {
        buf.resize(p.data.size());
        in.read(reinterpret_cast<char*>(buf.data()),
                static_cast<std::streamsize>(buf.size() * sizeof(float)));
        if (!in) throw std::runtime_error("truncated network parameters");
        std::copy(buf.begin(), buf.end(), p.data.begin());
    }
    return net;
}

Network Network::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    return load(in);
}

TrainResult train(Network& net, const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, int epochs,
                  int batch, AdamState& state) {
    if (X.rows() == 0) throw std::invalid_argument("empty training set");
    if (batch <= 0) throw std::invalid_argument("batch size must be positive");
    TrainResult result;
    const int n = static_cast<int>(X.rows());
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::vector<Tensor> grads;
    for (int epoch = 0; epoch < epochs; ++epoch) {
        net.shuffle(order);
        double epoch_total = 0.0;
        for (int start = 0; start < n; start += batch) {
            const int bs = std::min(batch, n - start);
            Eigen::MatrixXd xb(bs, X.cols()), yb(bs, Y.cols());
            for (int i = 0; i < bs; ++i) {
                xb.row(i) = X.row(order[start + i]);
                yb.row(i) = Y.row(order[start + i]);
            }
            const double batch_loss = net.backward(xb, yb, true, grads);
            adam_step(net, grads, state);
            epoch_total += batch_loss * bs;
        }
        result.epoch_loss.push_back(epoch_total / n);
    }
    return result;
}

}  // namespace rstv::nnet
