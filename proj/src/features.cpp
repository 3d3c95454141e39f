#include "rstv/features.hpp"

#include <cstring>
#include <fstream>
#include <json.hpp>
#include <stdexcept>
#include <vector>

#include "binio.hpp"
#include "rstv/pipeline.hpp"

using nlohmann::json;

namespace rstv {

namespace {

constexpr char kFeatMagic[8] = {'R', 'S', 'T', 'V', 'F', 'E', 'A', 'T'};
constexpr uint32_t kFeatVersion = 1;

}  // namespace

void save_features(const std::string& path, const FeatureFile& f) {
    if (!f.centers.empty() && static_cast<Eigen::Index>(f.centers.size()) != f.rows.rows()) {
        throw std::invalid_argument("one center per row required");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out.write(kFeatMagic, 8);
    detail::write_u32(out, kFeatVersion);
    detail::write_u32(out, static_cast<uint32_t>(f.rows.rows()));
    detail::write_u32(out, static_cast<uint32_t>(f.rows.cols()));

    std::vector<float> buf(f.rows.cols());
    for (Eigen::Index r = 0; r < f.rows.rows(); ++r) {
        for (Eigen::Index c = 0; c < f.rows.cols(); ++c) {
            buf[c] = static_cast<float>(f.rows(r, c));
        }
        out.write(reinterpret_cast<const char*>(buf.data()),
                  static_cast<std::streamsize>(buf.size() * sizeof(float)));
    }

    json footer{{"centers", f.centers},
                {"window", f.window},
                {"config", f.config_json.empty() ? json::object() : json::parse(f.config_json)},
                {"config_hash", hash_hex(f.config_hash)}};
    const std::string fs = footer.dump();
    out.write(fs.data(), static_cast<std::streamsize>(fs.size()));
    if (!out) throw std::runtime_error("failed writing " + path);
}

FeatureFile load_features(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kFeatMagic, 8) != 0) {
        throw std::runtime_error("not a feature file: " + path);
    }
    if (detail::read_u32(in) != kFeatVersion) {
        throw std::runtime_error("unsupported feature file version");
    }
    const uint32_t rows = detail::read_u32(in);
    const uint32_t cols = detail::read_u32(in);

    FeatureFile f;
    f.rows.resize(rows, cols);
    std::vector<float> buf(cols);
    for (uint32_t r = 0; r < rows; ++r) {
        in.read(reinterpret_cast<char*>(buf.data()),
                static_cast<std::streamsize>(buf.size() * sizeof(float)));
        if (!in) throw std::runtime_error("truncated feature rows in " + path);
        for (uint32_t c = 0; c < cols; ++c) f.rows(r, c) = buf[c];
    }

    std::string footer_text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (!footer_text.empty()) {
        const json footer = json::parse(footer_text);
        if (footer.contains("centers")) f.centers = footer.at("centers").get<std::vector<int>>();
        if (footer.contains("window")) f.window = footer.at("window");
        if (footer.contains("config") && !footer.at("config").empty()) {
            f.config_json = footer.at("config").dump(2) + "\n";
        }
        if (footer.contains("config_hash")) {
            f.config_hash = std::stoull(footer.at("config_hash").get<std::string>(), nullptr, 16);
        }
    }
    return f;
}

}  // namespace rstv
