#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "rstv/rng.hpp"

namespace rstv::nnet {

struct Tensor {
    std::vector<int> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> s);

    int64_t size() const { return static_cast<int64_t>(data.size()); }
    double& operator[](int64_t i) { return data[i]; }
    double operator[](int64_t i) const { return data[i]; }
    void zero() { std::fill(data.begin(), data.end(), 0.0); }
};

struct LayerSpec {
    enum class Kind { Dense, Conv2d, MaxPool2d, Relu, Dropout };
    Kind kind = Kind::Relu;
    int in = 0, out = 0;                            // dense
    int in_ch = 0, out_ch = 0, kernel = 0, stride = 1;  // conv2d, valid padding
    int pool = 2;                                   // maxpool kernel = stride
    double p = 0.5;                                 // dropout keep-inverted rate

    static LayerSpec dense(int in, int out);
    static LayerSpec conv2d(int in_ch, int out_ch, int kernel, int stride = 1);
    static LayerSpec maxpool2d(int k = 2);
    static LayerSpec relu();
    static LayerSpec dropout(double p);

    std::string kind_name() const;
};

// Feed-forward net over flat activations with shape tracking. Parameters are
// held in doubles; model files store f32. Inference never touches the rng, so
// eval-mode forward is a pure function.
class Network {
public:
    Network() = default;
    Network(std::vector<int> input_shape, std::vector<LayerSpec> layers, uint64_t seed);

    Eigen::VectorXd forward(const Eigen::VectorXd& x, bool train_mode = false) const;
    Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& X, bool train_mode = false) const;

    // Mean over the batch of the squared output error.
    double loss(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, bool train_mode = false) const;

    // Loss plus gradients for every parameter tensor (same order as params()).
    // grads is resized and zeroed here.
    double backward(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, bool train_mode,
                    std::vector<Tensor>& grads) const;

    std::vector<Tensor>& params() { return params_; }
    const std::vector<Tensor>& params() const { return params_; }
    const std::vector<LayerSpec>& layers() const { return layers_; }
    const std::vector<int>& input_shape() const { return input_shape_; }
    int input_dim() const;
    int output_dim() const;
    uint64_t seed() const { return seed_; }

    // Restarts the stream behind dropout masks and shuffling. Lets tests pin
    // masks for finite-difference comparisons.
    void reseed(uint64_t seed) const;

    // Fisher-Yates from the net rng; keeps training order reproducible.
    template <typename T>
    void shuffle(std::vector<T>& v) const {
        rng_.shuffle(v);
    }

    void save(const std::string& path) const;
    void save(std::ostream& out) const;
    static Network load(const std::string& path);
    static Network load(std::istream& in);

private:
    struct Cache;
    void forward_sample(const Eigen::VectorXd& x, bool train_mode, Cache* cache,
                        Eigen::VectorXd& out) const;
    void backward_sample(const Cache& cache, const Eigen::VectorXd& dloss,
                         std::vector<Tensor>& grads) const;

    std::vector<int> input_shape_;
    std::vector<LayerSpec> layers_;
    std::vector<std::vector<int>> act_shapes_;  // per layer output shape
    std::vector<Tensor> params_;                // W then b per parameterized layer
    std::vector<int> param_base_;               // index into params_, -1 if none
    uint64_t seed_ = 0;
    mutable Rng rng_{0};
};

struct AdamState {
    int64_t step = 0;
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::vector<Tensor> m, v;
};

void adam_step(Network& net, const std::vector<Tensor>& grads, AdamState& state);

struct TrainResult {
    std::vector<double> epoch_loss;
};

// Minibatch SGD with ADAM; shuffling comes from the net rng so runs are
// reproducible per seed.
TrainResult train(Network& net, const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, int epochs,
                  int batch, AdamState& state);

}  // namespace rstv::nnet
