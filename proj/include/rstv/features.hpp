#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace rstv {

// One descriptor per row, with the block centers they came from and the
// configuration echo for provenance.
struct FeatureFile {
    Eigen::MatrixXd rows;
    std::vector<int> centers;
    int window = 0;
    std::string config_json;  // resolved pipeline config, empty means none
    uint64_t config_hash = 0;
};

// Binary matrix (f32, row-major) followed by a JSON footer.
void save_features(const std::string& path, const FeatureFile& f);
FeatureFile load_features(const std::string& path);

}  // namespace rstv
