#include "rstv/pipeline.hpp"

#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <stdexcept>

using nlohmann::json;

namespace rstv {

namespace {

// Every field written so the dump is self-contained; parse tolerates subsets.
json hog_to_json(const Hog3DConfig& c) {
    return json{{"spatial_levels", c.spatial_levels},
                {"temporal_cell", c.temporal_cell},
                {"orientation_bins", c.orientation_bins},
                {"epsilon", c.epsilon}};
}

void hog_from_json(const json& j, Hog3DConfig& c) {
    if (j.contains("spatial_levels")) c.spatial_levels = j.at("spatial_levels").get<std::vector<int>>();
    if (j.contains("temporal_cell")) c.temporal_cell = j.at("temporal_cell");
    if (j.contains("orientation_bins")) c.orientation_bins = j.at("orientation_bins");
    if (j.contains("epsilon")) c.epsilon = j.at("epsilon");
}

json comp_to_json(const CompensationConfig& c) {
    return json{{"max_iter", c.max_iter},
                {"coarse_iters", c.coarse_iters},
                {"coarse_range", c.coarse_range},
                {"fine_range", c.fine_range},
                {"patch_size", c.patch_size}};
}

void comp_from_json(const json& j, CompensationConfig& c) {
    if (j.contains("max_iter")) c.max_iter = j.at("max_iter");
    if (j.contains("coarse_iters")) c.coarse_iters = j.at("coarse_iters");
    if (j.contains("coarse_range")) c.coarse_range = j.at("coarse_range");
    if (j.contains("fine_range")) c.fine_range = j.at("fine_range");
    if (j.contains("patch_size")) c.patch_size = j.at("patch_size");
}

json fit_to_json(const FitConfig& c) {
    return json{{"kind", c.kind},
                {"lambda", c.lambda},
                {"embed_dim", c.embed_dim},
                {"out_embed_dim", c.out_embed_dim},
                {"hom_order", c.hom_order},
                {"hom_period", c.hom_period},
                {"gamma_z", c.gamma_z},
                {"gamma_y", c.gamma_y},
                {"pre_image", {{"steps", c.pre_image.steps}, {"init_step", c.pre_image.init_step}}},
                {"dn",
                 {{"epochs", c.dn.epochs},
                  {"batch", c.dn.batch},
                  {"lr", c.dn.lr},
                  {"dropout", c.dn.dropout},
                  {"hidden", c.dn.hidden}}},
                {"seed", c.seed}};
}

void fit_from_json(const json& j, FitConfig& c) {
    if (j.contains("kind")) c.kind = j.at("kind");
    if (j.contains("lambda")) c.lambda = j.at("lambda");
    if (j.contains("embed_dim")) c.embed_dim = j.at("embed_dim");
    if (j.contains("out_embed_dim")) c.out_embed_dim = j.at("out_embed_dim");
    if (j.contains("hom_order")) c.hom_order = j.at("hom_order");
    if (j.contains("hom_period")) c.hom_period = j.at("hom_period");
    if (j.contains("gamma_z")) c.gamma_z = j.at("gamma_z");
    if (j.contains("gamma_y")) c.gamma_y = j.at("gamma_y");
    if (j.contains("pre_image")) {
        const json& p = j.at("pre_image");
        if (p.contains("steps")) c.pre_image.steps = p.at("steps");
        if (p.contains("init_step")) c.pre_image.init_step = p.at("init_step");
    }
    if (j.contains("dn")) {
        const json& d = j.at("dn");
        if (d.contains("epochs")) c.dn.epochs = d.at("epochs");
        if (d.contains("batch")) c.dn.batch = d.at("batch");
        if (d.contains("lr")) c.dn.lr = d.at("lr");
        if (d.contains("dropout")) c.dn.dropout = d.at("dropout");
        if (d.contains("hidden")) c.dn.hidden = d.at("hidden");
    }
    if (j.contains("seed")) c.seed = j.at("seed");
}

}  // namespace

void PipelineConfig::validate() const {
    if (window <= 0 || window % 2 != 0) throw std::invalid_argument("window must be even positive");
    if (patch_size <= 0) throw std::invalid_argument("patch size must be positive");
    if (jitter < 0.0) throw std::invalid_argument("jitter must be nonnegative");
    if (threads <= 0) throw std::invalid_argument("threads must be positive");
    hog.validate(window, patch_size, patch_size);
    comp.validate();
    if (comp.patch_size != patch_size) {
        throw std::invalid_argument("compensation patch size must match pipeline patch size");
    }
}

PipelineConfig PipelineConfig::paper_dims() const {
    PipelineConfig out = *this;
    out.fit.embed_dim = 15000;
    out.fit.out_embed_dim = 4000;
    out.fit.dn.hidden = 3000;
    return out;
}

PipelineConfig parse_pipeline_config(const std::string& json_text) {
    const json j = json::parse(json_text);
    PipelineConfig c;
    if (j.contains("window")) c.window = j.at("window");
    if (j.contains("patch_size")) c.patch_size = j.at("patch_size");
    if (j.contains("jitter")) c.jitter = j.at("jitter");
    if (j.contains("threads")) c.threads = j.at("threads");
    if (j.contains("seed")) c.seed = j.at("seed");
    if (j.contains("hog")) hog_from_json(j.at("hog"), c.hog);
    if (j.contains("comp")) comp_from_json(j.at("comp"), c.comp);
    if (j.contains("fit")) fit_from_json(j.at("fit"), c.fit);
    // The compensation crop always matches the descriptor patch; a partial
    // document overriding patch_size alone keeps them in sync.
    if (!(j.contains("comp") && j.at("comp").contains("patch_size"))) {
        c.comp.patch_size = c.patch_size;
    }
    if (!(j.contains("fit") && j.at("fit").contains("seed"))) c.fit.seed = c.seed;
    return c;
}

std::string dump_pipeline_config(const PipelineConfig& cfg) {
    json j{{"window", cfg.window},     {"patch_size", cfg.patch_size},
           {"jitter", cfg.jitter},     {"threads", cfg.threads},
           {"seed", cfg.seed},         {"hog", hog_to_json(cfg.hog)},
           {"comp", comp_to_json(cfg.comp)}, {"fit", fit_to_json(cfg.fit)}};
    return j.dump(2) + "\n";
}

PipelineConfig load_pipeline_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_pipeline_config(text);
}

void save_pipeline_config(const std::string& path, const PipelineConfig& cfg) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << dump_pipeline_config(cfg);
}

uint64_t config_hash(const PipelineConfig& cfg) {
    const std::string s = dump_pipeline_config(cfg);
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hash_hex(uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

}  // namespace rstv
