#include "rstv/regress.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <stdexcept>

#include "binio.hpp"
#include "rstv/rng.hpp"

using nlohmann::json;

namespace rstv {

namespace {

using detail::read_f32;
using detail::read_u32;
using detail::write_f32;
using detail::write_u32;

constexpr char kPoseMagic[8] = {'R', 'S', 'T', 'V', 'P', 'O', 'S', 'E'};
constexpr uint32_t kPoseVersion = 1;

Pose3D to_pose(const Eigen::VectorXd& y) {
    return root_relativize(Pose3D::unflatten(y).coords, 0);
}

double bandwidth_or(double requested, double median, double fallback) {
    if (requested > 0.0) return requested;
    if (std::isfinite(median) && median > 0.0) return 1.0 / median;
    return fallback;
}

}  // namespace

Eigen::MatrixXd ridge_fit(const Eigen::MatrixXd& Phi, const Eigen::MatrixXd& Y, double lambda) {
    if (Phi.rows() == 0) throw std::invalid_argument("empty training set");
    if (Phi.rows() != Y.rows()) throw std::invalid_argument("row count mismatch");
    if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
    if (!Phi.allFinite() || !Y.allFinite()) throw std::invalid_argument("non-finite inputs");

    const Eigen::Index n = Phi.rows(), m = Phi.cols();
    if (n >= m) {
        Eigen::MatrixXd A = Phi.transpose() * Phi;
        A.diagonal().array() += lambda;
        return A.llt().solve(Phi.transpose() * Y);
    }
    // Dual form, identical by the push-through identity; keeps the factored
    // matrix n x n when features outnumber samples.
    Eigen::MatrixXd G = Phi * Phi.transpose();
    G.diagonal().array() += lambda;
    return Phi.transpose() * G.llt().solve(Y);
}

KRRModel krr_fit(const Eigen::MatrixXd& Phi, const Eigen::MatrixXd& Y, double lambda) {
    return KRRModel{ridge_fit(Phi, Y, lambda), lambda};
}

Pose3D krr_predict(const KRRModel& model, const Eigen::VectorXd& phi) {
    if (phi.size() != model.W.rows()) throw std::invalid_argument("embedding dim mismatch");
    return to_pose(model.W.transpose() * phi);
}

KDEModel kde_fit(const Eigen::MatrixXd& PhiZ, const Eigen::MatrixXd& PhiY, double lambda) {
    return KDEModel{ridge_fit(PhiZ, PhiY, lambda), lambda};
}

PreImageResult kde_pre_image(const Eigen::VectorXd& target, const RBFOutputEmbedding& out_embed,
                             const Pose3D& init, const PreImageConfig& cfg) {
    if (cfg.steps < 0) throw std::invalid_argument("steps must be nonnegative");
    if (!(cfg.init_step > 0.0)) throw std::invalid_argument("init_step must be positive");
    if (target.size() != out_embed.dim()) throw std::invalid_argument("target dim mismatch");

    Eigen::VectorXd y = init.flatten();
    y.head(3).setZero();

    auto objective = [&](const Eigen::VectorXd& v) {
        return (target - out_embed.embed(v)).squaredNorm();
    };

    const Eigen::VectorXd init_y = y;
    double g0 = objective(y);
    if (!std::isfinite(g0)) {
        return PreImageResult{to_pose(init_y), g0, true};
    }

    Eigen::VectorXd best_y = y;
    double best_g = g0;
    bool warned = false;
    double step = cfg.init_step;
    constexpr double kArmijo = 1e-4;

    for (int it = 0; it < cfg.steps; ++it) {
        Eigen::VectorXd phi = out_embed.embed(y);
        Eigen::VectorXd grad = 2.0 * out_embed.grad_dot(y, phi - target);
        grad.head(3).setZero();  // root stays pinned
        const double gnorm2 = grad.squaredNorm();
        if (gnorm2 == 0.0) break;

        bool accepted = false;
        for (int half = 0; half < 40; ++half) {
            Eigen::VectorXd trial = y - step * grad;
            const double gt = objective(trial);
            if (!std::isfinite(gt)) {
                warned = true;
                step *= 0.5;
                continue;
            }
            if (gt <= g0 - kArmijo * step * gnorm2) {
                y = std::move(trial);
                g0 = gt;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;
        if (g0 < best_g) {
            best_g = g0;
            best_y = y;
        }
        step *= 1.5;
    }

    return PreImageResult{to_pose(best_y), best_g, warned};
}

PreImageResult kde_predict(const KDEModel& model, const Eigen::VectorXd& phi_z,
                           const RBFOutputEmbedding& out_embed, const Pose3D& krr_init,
                           const PreImageConfig& cfg) {
    if (phi_z.size() != model.W.rows()) throw std::invalid_argument("embedding dim mismatch");
    return kde_pre_image(model.W.transpose() * phi_z, out_embed, krr_init, cfg);
}

DNModel dn_fit(const Eigen::MatrixXd& Z, const Eigen::MatrixXd& Y, const DnHyper& hyper,
               uint64_t seed) {
    if (Z.rows() == 0) throw std::invalid_argument("empty training set");
    if (Z.rows() != Y.rows()) throw std::invalid_argument("row count mismatch");
    if (Y.cols() % 3 != 0) throw std::invalid_argument("pose dim must be a multiple of 3");

    // Millimeter targets span hundreds of units; standardizing keeps the MSE
    // surface compatible with the default learning rate.
    Eigen::RowVectorXd mean = Y.colwise().mean();
    Eigen::RowVectorXd std_row =
        (Y.rowwise() - mean).array().square().colwise().mean().sqrt().max(1e-8).matrix();
    Eigen::MatrixXd Ystd = ((Y.rowwise() - mean).array().rowwise() / std_row.array()).matrix();

    using nnet::LayerSpec;
    const int d = static_cast<int>(Z.cols());
    const int out = static_cast<int>(Y.cols());
    nnet::Network net({d},
                      {LayerSpec::dense(d, hyper.hidden), LayerSpec::relu(),
                       LayerSpec::dropout(hyper.dropout), LayerSpec::dense(hyper.hidden, hyper.hidden),
                       LayerSpec::relu(), LayerSpec::dropout(hyper.dropout),
                       LayerSpec::dense(hyper.hidden, out)},
                      seed);
    nnet::AdamState state;
    state.lr = hyper.lr;
    nnet::TrainResult tr = nnet::train(net, Z, Ystd, hyper.epochs, hyper.batch, state);
    return DNModel{std::move(net), mean.transpose(), std_row.transpose(),
                   std::move(tr.epoch_loss)};
}

Pose3D dn_predict(const DNModel& model, const Eigen::VectorXd& z) {
    if (z.size() != model.net.input_dim()) throw std::invalid_argument("descriptor dim mismatch");
    Eigen::VectorXd out = model.net.forward(z);
    Eigen::VectorXd y = out.cwiseProduct(model.target_std) + model.target_mean;
    return to_pose(y);
}

PoseModel fit_pose_model(const Eigen::MatrixXd& Z, const Eigen::MatrixXd& Y,
                         const FitConfig& cfg) {
    if (cfg.kind != "krr" && cfg.kind != "kde" && cfg.kind != "dn") {
        throw std::invalid_argument("kind must be krr, kde or dn");
    }
    if (Z.rows() == 0) throw std::invalid_argument("empty training set");
    if (Z.rows() != Y.rows()) throw std::invalid_argument("row count mismatch");
    if (Y.cols() % 3 != 0) throw std::invalid_argument("pose dim must be a multiple of 3");

    PoseModel m;
    m.kind_ = cfg.kind;
    m.lambda_ = cfg.lambda;
    m.pre_image_ = cfg.pre_image;

    if (cfg.kind == "dn") {
        m.dn_ = dn_fit(Z, Y, cfg.dn, Rng::mix(cfg.seed, 31));
        return m;
    }

    const int n_pairs = 1000;
    double gz = cfg.gamma_z;
    if (!(gz > 0.0)) {
        gz = Z.rows() >= 2 ? bandwidth_or(0.0, median_chi2(Z, n_pairs, Rng::mix(cfg.seed, 21)), 1.0)
                           : 1.0;
    }
    m.input_embed_.emplace(static_cast<int>(Z.cols()), cfg.embed_dim, gz, Rng::mix(cfg.seed, 11),
                           cfg.hom_order, cfg.hom_period);
    Eigen::MatrixXd PhiZ = m.input_embed_->embed_rows(Z);
    m.W_krr_ = ridge_fit(PhiZ, Y, cfg.lambda);

    if (cfg.kind == "kde") {
        double gy = cfg.gamma_y;
        if (!(gy > 0.0)) {
            gy = Y.rows() >= 2
                     ? bandwidth_or(0.0, median_sq_dist(Y, n_pairs, Rng::mix(cfg.seed, 22)), 1.0)
                     : 1.0;
        }
        m.output_embed_.emplace(static_cast<int>(Y.cols()), cfg.out_embed_dim, gy,
                                Rng::mix(cfg.seed, 12));
        Eigen::MatrixXd PhiY = m.output_embed_->embed_rows(Y);
        m.W_kde_ = ridge_fit(PhiZ, PhiY, cfg.lambda);
    }
    return m;
}

Pose3D PoseModel::predict(const Eigen::VectorXd& z) const {
    if (kind_ == "dn") return dn_predict(*dn_, z);
    Eigen::VectorXd phi = input_embed_->embed(z);
    Pose3D krr = to_pose(W_krr_.transpose() * phi);
    if (kind_ == "krr") return krr;
    return kde_pre_image(W_kde_.transpose() * phi, *output_embed_, krr, pre_image_).pose;
}

std::vector<Pose3D> PoseModel::predict_rows(const Eigen::MatrixXd& Z) const {
    std::vector<Pose3D> out;
    out.reserve(Z.rows());
    if (kind_ == "dn") {
        Eigen::MatrixXd raw = dn_->net.forward_batch(Z);
        for (Eigen::Index i = 0; i < raw.rows(); ++i) {
            Eigen::VectorXd y =
                raw.row(i).transpose().cwiseProduct(dn_->target_std) + dn_->target_mean;
            out.push_back(to_pose(y));
        }
        return out;
    }
    Eigen::MatrixXd Phi = input_embed_->embed_rows(Z);
    Eigen::MatrixXd Ykrr = Phi * W_krr_;
    if (kind_ == "krr") {
        for (Eigen::Index i = 0; i < Ykrr.rows(); ++i) {
            out.push_back(to_pose(Ykrr.row(i).transpose()));
        }
        return out;
    }
    Eigen::MatrixXd T = Phi * W_kde_;
    for (Eigen::Index i = 0; i < Ykrr.rows(); ++i) {
        out.push_back(kde_pre_image(T.row(i).transpose(), *output_embed_,
                                    to_pose(Ykrr.row(i).transpose()), pre_image_)
                          .pose);
    }
    return out;
}

int PoseModel::input_dim() const {
    if (kind_ == "dn") return dn_->net.input_dim();
    return input_embed_->input_dim();
}

int PoseModel::pose_dim() const {
    if (kind_ == "dn") return dn_->net.output_dim();
    return static_cast<int>(W_krr_.cols());
}

void PoseModel::save(const std::string& path) const {
    json header;
    header["kind"] = kind_;
    header["lambda"] = lambda_;
    header["pre_image"] = {{"steps", pre_image_.steps}, {"init_step", pre_image_.init_step}};
    if (input_embed_) {
        header["input_embed"] = {{"input_dim", input_embed_->input_dim()},
                                 {"dim", input_embed_->dim()},
                                 {"gamma", input_embed_->gamma()},
                                 {"seed", input_embed_->seed()},
                                 {"order", input_embed_->order()},
                                 {"period", input_embed_->period()}};
    }
    if (output_embed_) {
        header["output_embed"] = {{"input_dim", output_embed_->input_dim()},
                                  {"dim", output_embed_->dim()},
                                  {"gamma", output_embed_->gamma()},
                                  {"seed", output_embed_->seed()}};
    }
    if (W_krr_.size() > 0) header["w_krr"] = {{"rows", W_krr_.rows()}, {"cols", W_krr_.cols()}};
    if (W_kde_.size() > 0) header["w_kde"] = {{"rows", W_kde_.rows()}, {"cols", W_kde_.cols()}};
    if (dn_) {
        header["dn"] = {{"pose_dim", dn_->target_mean.size()},
                        {"loss_trace", dn_->loss_trace}};
    }
    const std::string hs = header.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out.write(kPoseMagic, 8);
    write_u32(out, kPoseVersion);
    write_u32(out, static_cast<uint32_t>(hs.size()));
    out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
    if (W_krr_.size() > 0) write_f32(out, W_krr_.data(), W_krr_.size());
    if (W_kde_.size() > 0) write_f32(out, W_kde_.data(), W_kde_.size());
    if (dn_) {
        write_f32(out, dn_->target_mean.data(), dn_->target_mean.size());
        write_f32(out, dn_->target_std.data(), dn_->target_std.size());
        dn_->net.save(out);
    }
    if (!out) throw std::runtime_error("failed writing " + path);
}

PoseModel PoseModel::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kPoseMagic, 8) != 0) {
        throw std::runtime_error("not a pose model file: " + path);
    }
    if (read_u32(in) != kPoseVersion) throw std::runtime_error("unsupported pose model version");
    const uint32_t hlen = read_u32(in);
    std::string hs(hlen, '\0');
    in.read(hs.data(), hlen);
    if (!in) throw std::runtime_error("truncated header in " + path);
    const json h = json::parse(hs);

    PoseModel m;
    m.kind_ = h.at("kind");
    m.lambda_ = h.at("lambda");
    m.pre_image_.steps = h.at("pre_image").at("steps");
    m.pre_image_.init_step = h.at("pre_image").at("init_step");
    if (h.contains("input_embed")) {
        const auto& j = h.at("input_embed");
        m.input_embed_.emplace(j.at("input_dim").get<int>(), j.at("dim").get<int>(),
                               j.at("gamma").get<double>(), j.at("seed").get<uint64_t>(),
                               j.at("order").get<int>(), j.at("period").get<double>());
    }
    if (h.contains("output_embed")) {
        const auto& j = h.at("output_embed");
        m.output_embed_.emplace(j.at("input_dim").get<int>(), j.at("dim").get<int>(),
                                j.at("gamma").get<double>(), j.at("seed").get<uint64_t>());
    }
    if (h.contains("w_krr")) {
        m.W_krr_.resize(h.at("w_krr").at("rows").get<Eigen::Index>(),
                        h.at("w_krr").at("cols").get<Eigen::Index>());
        read_f32(in, m.W_krr_.data(), m.W_krr_.size());
    }
    if (h.contains("w_kde")) {
        m.W_kde_.resize(h.at("w_kde").at("rows").get<Eigen::Index>(),
                        h.at("w_kde").at("cols").get<Eigen::Index>());
        read_f32(in, m.W_kde_.data(), m.W_kde_.size());
    }
    if (h.contains("dn")) {
        const Eigen::Index pd = h.at("dn").at("pose_dim").get<Eigen::Index>();
        Eigen::VectorXd mean(pd), std(pd);
        read_f32(in, mean.data(), pd);
        read_f32(in, std.data(), pd);
        nnet::Network net = nnet::Network::load(in);
        std::vector<double> trace = h.at("dn").at("loss_trace").get<std::vector<double>>();
        m.dn_ = DNModel{std::move(net), std::move(mean), std::move(std), std::move(trace)};
    }
    return m;
}

}  // namespace rstv
