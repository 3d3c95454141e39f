#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

namespace rstv {

class ExpChi2Embedding;
class RBFOutputEmbedding;
struct EmbeddingPair;
void save_embeddings(const std::string& path, const ExpChi2Embedding& input,
                     const RBFOutputEmbedding& output);
EmbeddingPair load_embeddings(const std::string& path);

// Sum_i (x_i-y_i)^2/(x_i+y_i); zero-mass entries contribute 0.
double chi2_distance(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

// exp(-gamma * chi2(x,y))
double exp_chi2_kernel(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double gamma);

// Closed-form spectral features of the homogeneous chi-square kernel
// k(x,y) = 2xy/(x+y), sampled at frequencies jL for j = -order..order.
// Squared feature-space distance approximates the chi-square distance.
struct HomogeneousChi2Map {
    int order = 2;
    double period = 0.6;

    int replicas() const { return 2 * order + 1; }
    Eigen::VectorXd map(const Eigen::VectorXd& x) const;
};

// Random Fourier features of exp(-gamma_z * chi2): homogeneous map followed by
// Gaussian random projections. Inputs are L1-normalized before mapping. The
// projection matrix is regenerated from the seed in fixed chunks, so the
// object stays small at any target dimension.
class ExpChi2Embedding {
public:
    ExpChi2Embedding(int input_dim, int dim, double gamma, uint64_t seed, int order = 2,
                     double period = 0.6);

    Eigen::VectorXd embed(const Eigen::VectorXd& x) const;
    Eigen::MatrixXd embed_rows(const Eigen::MatrixXd& X) const;

    int input_dim() const { return input_dim_; }
    int dim() const { return dim_; }
    double gamma() const { return gamma_; }
    uint64_t seed() const { return seed_; }
    int order() const { return order_; }
    double period() const { return period_; }
    int psi_dim() const { return input_dim_ * (2 * order_ + 1); }

private:
    friend void save_embeddings(const std::string&, const ExpChi2Embedding&,
                                const RBFOutputEmbedding&);
    friend struct EmbeddingPair;
    friend EmbeddingPair load_embeddings(const std::string&);

    int input_dim_;
    int dim_;
    double gamma_;
    uint64_t seed_;
    int order_;
    double period_;
    HomogeneousChi2Map hom_;
    Eigen::VectorXd phases_;  // f32-truncated at construction

    void chunk_omega(int chunk, Eigen::MatrixXf& out) const;
};

// sqrt(2/m) cos(Omega y + b) with Omega rows ~ Normal(0, 2*gamma*I), so inner
// products approximate exp(-gamma |y-y'|^2). Differentiable in y.
class RBFOutputEmbedding {
public:
    RBFOutputEmbedding(int input_dim, int dim, double gamma, uint64_t seed);

    Eigen::VectorXd embed(const Eigen::VectorXd& y) const;
    Eigen::MatrixXd embed_rows(const Eigen::MatrixXd& Y) const;

    // (d embed / d y)^T r, the only contraction the pre-image descent needs.
    Eigen::VectorXd grad_dot(const Eigen::VectorXd& y, const Eigen::VectorXd& r) const;

    int input_dim() const { return input_dim_; }
    int dim() const { return dim_; }
    double gamma() const { return gamma_; }
    uint64_t seed() const { return seed_; }
    const Eigen::MatrixXd& omega() const { return omega_; }
    const Eigen::VectorXd& phases() const { return phases_; }

private:
    friend void save_embeddings(const std::string&, const ExpChi2Embedding&,
                                const RBFOutputEmbedding&);
    friend struct EmbeddingPair;
    friend EmbeddingPair load_embeddings(const std::string&);

    int input_dim_;
    int dim_;
    double gamma_;
    uint64_t seed_;
    Eigen::MatrixXd omega_;   // dim x input_dim, f32-truncated
    Eigen::VectorXd phases_;  // f32-truncated
};

// Median-heuristic bandwidths over randomly drawn row pairs.
double median_chi2(const Eigen::MatrixXd& rows, int pairs, uint64_t seed);
double median_sq_dist(const Eigen::MatrixXd& rows, int pairs, uint64_t seed);

// One file carrying both maps so training and prediction share them exactly.
void save_embeddings(const std::string& path, const ExpChi2Embedding& input,
                     const RBFOutputEmbedding& output);
struct EmbeddingPair {
    ExpChi2Embedding input;
    RBFOutputEmbedding output;
};
EmbeddingPair load_embeddings(const std::string& path);

}  // namespace rstv
