#include "rstv/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <vector>

#include "binio.hpp"
#include "rstv/rng.hpp"

using nlohmann::json;

namespace rstv {

namespace {

constexpr int kChunkRows = 512;

void check_histogram(const Eigen::VectorXd& x) {
    for (int i = 0; i < x.size(); ++i) {
        if (x[i] < 0.0 || !std::isfinite(x[i])) {
            throw std::invalid_argument("histogram entries must be nonnegative and finite");
        }
    }
}

double as_f32(double v) { return static_cast<double>(static_cast<float>(v)); }

}  // namespace

double chi2_distance(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    if (x.size() != y.size()) throw std::invalid_argument("histogram length mismatch");
    check_histogram(x);
    check_histogram(y);
    double acc = 0.0;
    for (int i = 0; i < x.size(); ++i) {
        const double s = x[i] + y[i];
        if (s > 0.0) {
            const double d = x[i] - y[i];
            acc += d * d / s;
        }
    }
    return acc;
}

double exp_chi2_kernel(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double gamma) {
    if (gamma <= 0.0) throw std::invalid_argument("gamma must be positive");
    return std::exp(-gamma * chi2_distance(x, y));
}

Eigen::VectorXd HomogeneousChi2Map::map(const Eigen::VectorXd& x) const {
    check_histogram(x);
    const int reps = replicas();
    Eigen::VectorXd out = Eigen::VectorXd::Zero(x.size() * reps);
    for (int i = 0; i < x.size(); ++i) {
        const double v = x[i];
        if (v <= 0.0) continue;  // limit of sqrt(v)*... is 0
        const double lv = std::log(v);
        out[i * reps] = std::sqrt(v * period);  // sech(0) = 1
        for (int j = 1; j <= order; ++j) {
            const double lambda = j * period;
            const double kappa = 1.0 / std::cosh(M_PI * lambda);
            const double amp = std::sqrt(2.0 * v * period * kappa);
            out[i * reps + 2 * j - 1] = amp * std::cos(lambda * lv);
            out[i * reps + 2 * j] = amp * std::sin(lambda * lv);
        }
    }
    return out;
}

ExpChi2Embedding::ExpChi2Embedding(int input_dim, int dim, double gamma, uint64_t seed, int order,
                                   double period)
    : input_dim_(input_dim), dim_(dim), gamma_(gamma), seed_(seed), order_(order),
      period_(period), hom_{order, period} {
    if (input_dim <= 0 || dim <= 0) throw std::invalid_argument("embedding dims must be positive");
    if (gamma <= 0.0) throw std::invalid_argument("gamma must be positive");
    if (order <= 0 || period <= 0.0) throw std::invalid_argument("bad homogeneous map parameters");
    Rng rng(Rng::mix(seed_, 7));
    phases_.resize(dim_);
    for (int i = 0; i < dim_; ++i) phases_[i] = as_f32(rng.uniform(0.0, 2.0 * M_PI));
}

void ExpChi2Embedding::chunk_omega(int chunk, Eigen::MatrixXf& out) const {
    const int row0 = chunk * kChunkRows;
    const int rows = std::min(kChunkRows, dim_ - row0);
    const int cols = psi_dim();
    out.resize(rows, cols);
    Rng rng(Rng::mix(seed_, 1000 + static_cast<uint64_t>(chunk)));
    const double scale = std::sqrt(2.0 * gamma_);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            out(r, c) = static_cast<float>(scale * rng.normal());
        }
    }
}

Eigen::MatrixXd ExpChi2Embedding::embed_rows(const Eigen::MatrixXd& X) const {
    if (X.cols() != input_dim_) throw std::invalid_argument("input dim mismatch");
    const int n = static_cast<int>(X.rows());
    Eigen::MatrixXf psi(psi_dim(), n);
    for (int i = 0; i < n; ++i) {
        Eigen::VectorXd x = X.row(i);
        const double total = x.sum();
        if (total > 0.0) x /= total;
        psi.col(i) = hom_.map(x).cast<float>();
    }

    const double amp = std::sqrt(2.0 / dim_);
    Eigen::MatrixXd out(n, dim_);
    const int chunks = (dim_ + kChunkRows - 1) / kChunkRows;
    Eigen::MatrixXf omega, proj;
    for (int c = 0; c < chunks; ++c) {
        chunk_omega(c, omega);
        proj.noalias() = omega * psi;  // rows x n
        const int row0 = c * kChunkRows;
        for (int r = 0; r < proj.rows(); ++r) {
            for (int i = 0; i < n; ++i) {
                out(i, row0 + r) = amp * std::cos(static_cast<double>(proj(r, i)) + phases_[row0 + r]);
            }
        }
    }
    return out;
}

Eigen::VectorXd ExpChi2Embedding::embed(const Eigen::VectorXd& x) const {
    Eigen::MatrixXd X(1, x.size());
    X.row(0) = x;
    return embed_rows(X).row(0);
}

RBFOutputEmbedding::RBFOutputEmbedding(int input_dim, int dim, double gamma, uint64_t seed)
    : input_dim_(input_dim), dim_(dim), gamma_(gamma), seed_(seed) {
    if (input_dim <= 0 || dim <= 0) throw std::invalid_argument("embedding dims must be positive");
    if (gamma <= 0.0) throw std::invalid_argument("gamma must be positive");
    Rng rng(Rng::mix(seed_, 13));
    omega_.resize(dim_, input_dim_);
    const double scale = std::sqrt(2.0 * gamma_);
    for (int r = 0; r < dim_; ++r) {
        for (int c = 0; c < input_dim_; ++c) omega_(r, c) = as_f32(scale * rng.normal());
    }
    phases_.resize(dim_);
    for (int i = 0; i < dim_; ++i) phases_[i] = as_f32(rng.uniform(0.0, 2.0 * M_PI));
}

Eigen::VectorXd RBFOutputEmbedding::embed(const Eigen::VectorXd& y) const {
    if (y.size() != input_dim_) throw std::invalid_argument("input dim mismatch");
    Eigen::VectorXd arg = omega_ * y + phases_;
    return std::sqrt(2.0 / dim_) * arg.array().cos();
}

Eigen::MatrixXd RBFOutputEmbedding::embed_rows(const Eigen::MatrixXd& Y) const {
    if (Y.cols() != input_dim_) throw std::invalid_argument("input dim mismatch");
    Eigen::MatrixXd arg = Y * omega_.transpose();
    arg.rowwise() += phases_.transpose();
    return std::sqrt(2.0 / dim_) * arg.array().cos();
}

Eigen::VectorXd RBFOutputEmbedding::grad_dot(const Eigen::VectorXd& y,
                                             const Eigen::VectorXd& r) const {
    if (y.size() != input_dim_ || r.size() != dim_) throw std::invalid_argument("dim mismatch");
    Eigen::VectorXd arg = omega_ * y + phases_;
    Eigen::VectorXd weights = -std::sqrt(2.0 / dim_) * arg.array().sin() * r.array();
    return omega_.transpose() * weights;
}

namespace {

std::vector<std::pair<int, int>> sample_pairs(int n, int pairs, uint64_t seed) {
    if (n < 2) throw std::invalid_argument("need at least two rows");
    Rng rng(seed);
    std::vector<std::pair<int, int>> out;
    out.reserve(pairs);
    for (int k = 0; k < pairs; ++k) {
        const int i = static_cast<int>(rng.integer(n));
        int j = static_cast<int>(rng.integer(n - 1));
        if (j >= i) ++j;
        out.emplace_back(i, j);
    }
    return out;
}

double median(std::vector<double>& v) {
    std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
    return v[v.size() / 2];
}

}  // namespace

double median_chi2(const Eigen::MatrixXd& rows, int pairs, uint64_t seed) {
    std::vector<double> d;
    d.reserve(pairs);
    for (auto [i, j] : sample_pairs(static_cast<int>(rows.rows()), pairs, seed)) {
        Eigen::VectorXd a = rows.row(i), b = rows.row(j);
        const double sa = a.sum(), sb = b.sum();
        if (sa > 0) a /= sa;
        if (sb > 0) b /= sb;
        d.push_back(chi2_distance(a, b));
    }
    return median(d);
}

double median_sq_dist(const Eigen::MatrixXd& rows, int pairs, uint64_t seed) {
    std::vector<double> d;
    d.reserve(pairs);
    for (auto [i, j] : sample_pairs(static_cast<int>(rows.rows()), pairs, seed)) {
        d.push_back((rows.row(i) - rows.row(j)).squaredNorm());
    }
    return median(d);
}

namespace {

constexpr char kEmbMagic[8] = {'R', 'S', 'T', 'V', 'E', 'M', 'B', 'D'};
constexpr uint32_t kEmbVersion = 1;

using detail::read_f32;
using detail::read_u32;
using detail::write_f32;
using detail::write_u32;

}  // namespace

void save_embeddings(const std::string& path, const ExpChi2Embedding& input,
                     const RBFOutputEmbedding& output) {
    json header;
    header["input"] = {{"input_dim", input.input_dim()}, {"dim", input.dim()},
                       {"gamma", input.gamma()},         {"seed", input.seed()},
                       {"order", input.order()},         {"period", input.period()}};
    header["output"] = {{"input_dim", output.input_dim()},
                        {"dim", output.dim()},
                        {"gamma", output.gamma()},
                        {"seed", output.seed()}};
    const std::string hs = header.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out.write(kEmbMagic, 8);
    write_u32(out, kEmbVersion);
    write_u32(out, static_cast<uint32_t>(hs.size()));
    out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
    // Blobs: the input map's projection matrix is seed-derived on the fly, so
    // only its phases are stored; the output map stores both.
    write_f32(out, input.phases_.data(), input.phases_.size());
    write_f32(out, output.omega_.data(), output.omega_.size());
    write_f32(out, output.phases_.data(), output.phases_.size());
    if (!out) throw std::runtime_error("failed writing " + path);
}

EmbeddingPair load_embeddings(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kEmbMagic, 8) != 0) {
        throw std::runtime_error("not an embedding file: " + path);
    }
    if (read_u32(in) != kEmbVersion) throw std::runtime_error("unsupported embedding version");
    const uint32_t hlen = read_u32(in);
    std::string hs(hlen, '\0');
    in.read(hs.data(), hlen);
    if (!in) throw std::runtime_error("truncated header in " + path);
    const json h = json::parse(hs);
    const auto& ji = h.at("input");
    const auto& jo = h.at("output");
    ExpChi2Embedding input(ji.at("input_dim"), ji.at("dim"), ji.at("gamma"), ji.at("seed"),
                           ji.at("order"), ji.at("period"));
    RBFOutputEmbedding output(jo.at("input_dim"), jo.at("dim"), jo.at("gamma"), jo.at("seed"));
    read_f32(in, input.phases_.data(), input.phases_.size());
    read_f32(in, output.omega_.data(), output.omega_.size());
    read_f32(in, output.phases_.data(), output.phases_.size());
    return EmbeddingPair{std::move(input), std::move(output)};
}

}  // namespace rstv
