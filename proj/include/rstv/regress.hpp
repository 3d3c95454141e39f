#pragma once

#include <Eigen/Dense>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rstv/kernels.hpp"
#include "rstv/nnet.hpp"
#include "rstv/types.hpp"

namespace rstv {

// Closed-form solution of min_W sum_i |y_i - W^T phi_i|^2 + lambda |W|_F^2
// with samples in rows. Returns W (cols(Phi) x cols(Y)). Solved in whichever
// of the primal/dual normal equations is smaller.
Eigen::MatrixXd ridge_fit(const Eigen::MatrixXd& Phi, const Eigen::MatrixXd& Y, double lambda);

struct KRRModel {
    Eigen::MatrixXd W;  // embed dim x 3D
    double lambda = 1.0;
};

KRRModel krr_fit(const Eigen::MatrixXd& Phi, const Eigen::MatrixXd& Y, double lambda = 1.0);

// W^T phi reshaped to joints x 3, then re-rooted at joint 0.
Pose3D krr_predict(const KRRModel& model, const Eigen::VectorXd& phi);

struct KDEModel {
    Eigen::MatrixXd W;  // input embed dim x output embed dim
    double lambda = 1.0;
};

KDEModel kde_fit(const Eigen::MatrixXd& PhiZ, const Eigen::MatrixXd& PhiY, double lambda = 1.0);

struct PreImageConfig {
    int steps = 200;
    double init_step = 1e5;  // Armijo backtracking shrinks from here
};

struct PreImageResult {
    Pose3D pose;
    double objective = 0.0;
    bool warned = false;  // non-finite objective encountered, init returned
};

// argmin_Y |target - phi_Y(flatten(Y))|^2 from init by projected gradient
// descent; root coordinates stay pinned at zero. Returns the best iterate, so
// the objective never exceeds the one at init.
PreImageResult kde_pre_image(const Eigen::VectorXd& target, const RBFOutputEmbedding& out_embed,
                             const Pose3D& init, const PreImageConfig& cfg = {});

PreImageResult kde_predict(const KDEModel& model, const Eigen::VectorXd& phi_z,
                           const RBFOutputEmbedding& out_embed, const Pose3D& krr_init,
                           const PreImageConfig& cfg = {});

struct DnHyper {
    int epochs = 50;
    int batch = 64;
    double lr = 1e-3;
    double dropout = 0.5;
    int hidden = 3000;
};

// dense(hidden)-relu-dropout-dense(hidden)-relu-dropout-dense(3D). Targets are
// standardized per dimension at fit time; predictions are mapped back.
struct DNModel {
    nnet::Network net;
    Eigen::VectorXd target_mean;
    Eigen::VectorXd target_std;
    std::vector<double> loss_trace;
};

DNModel dn_fit(const Eigen::MatrixXd& Z, const Eigen::MatrixXd& Y, const DnHyper& hyper,
               uint64_t seed);

Pose3D dn_predict(const DNModel& model, const Eigen::VectorXd& z);

struct FitConfig {
    std::string kind = "krr";  // krr | kde | dn
    double lambda = 1.0;
    int embed_dim = 2000;
    int out_embed_dim = 800;
    int hom_order = 2;
    double hom_period = 0.6;
    double gamma_z = 0.0;  // 0 = median heuristic over training pairs
    double gamma_y = 0.0;
    PreImageConfig pre_image;
    DnHyper dn;
    uint64_t seed = 1;
};

// One trained predictor: descriptors in, root-relative poses out. Carries its
// embeddings so train and predict share identical maps.
class PoseModel {
public:
    Pose3D predict(const Eigen::VectorXd& z) const;
    std::vector<Pose3D> predict_rows(const Eigen::MatrixXd& Z) const;

    const std::string& kind() const { return kind_; }
    int input_dim() const;
    int pose_dim() const;

    void save(const std::string& path) const;
    static PoseModel load(const std::string& path);

    friend PoseModel fit_pose_model(const Eigen::MatrixXd& Z, const Eigen::MatrixXd& Y,
                                    const FitConfig& cfg);

private:
    std::string kind_;
    double lambda_ = 1.0;
    std::optional<ExpChi2Embedding> input_embed_;
    std::optional<RBFOutputEmbedding> output_embed_;
    Eigen::MatrixXd W_krr_;  // krr always; kde keeps it for descent init
    Eigen::MatrixXd W_kde_;
    PreImageConfig pre_image_;
    std::optional<DNModel> dn_;
};

// Z: N x descriptor dim, Y: N x 3D flattened root-relative poses (mm).
PoseModel fit_pose_model(const Eigen::MatrixXd& Z, const Eigen::MatrixXd& Y,
                         const FitConfig& cfg);

}  // namespace rstv
