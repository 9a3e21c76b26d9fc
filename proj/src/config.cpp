#include "dco/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace dco {

void PipelineConfig::validate() const {
    if (d_min >= d_max) throw ConfigError("config: d_min must be below d_max");
    if (t_low < 0.0 || t_low >= t_high || t_high > 1.0)
        throw ConfigError("config: need 0 <= t_low < t_high <= 1");
    if (t_depth < 0.0 || t_depth > 1.0) throw ConfigError("config: t_depth outside [0,1]");
    if (lambda_ad <= 0.0 || lambda_census <= 0.0 || lambda_d <= 0.0 || lambda_s <= 0.0 ||
        lambda_s2 <= 0.0)
        throw ConfigError("config: every lambda must be positive");
    if (gamma_l <= 0.0 || epsilon <= 0.0) throw ConfigError("config: gamma_l and epsilon must be positive");
    if (census_window_w % 2 == 0 || census_window_h % 2 == 0)
        throw ConfigError("config: census window dimensions must be odd");
    if (census_window_w < 1 || census_window_h < 1 || census_window_w * census_window_h - 1 > 64)
        throw ConfigError("config: census window must fit 64 bits");
    if (cross_arm_l1 < 1 || cross_arm_l2 < 1 || cross_arm_l2 > cross_arm_l1)
        throw ConfigError("config: need 1 <= cross_arm_l2 <= cross_arm_l1");
    if (cross_color_tau <= 0.0 || cross_color_tau2 <= 0.0)
        throw ConfigError("config: color thresholds must be positive");
    if (box_radius < 1) throw ConfigError("config: box_radius must be >= 1");
    if (gauss_sigma <= 0.0) throw ConfigError("config: gauss_sigma must be positive");
    if (confidence_offset_k <= 0.0) throw ConfigError("config: confidence_offset_k must be positive");
    if (hist_iterations < 0) throw ConfigError("config: hist_iterations must be >= 0");
    if (focal_px <= 0.0 || baseline_m <= 0.0)
        throw ConfigError("config: focal_px and baseline_m must be positive");
    if (solver_tol <= 0.0 || solver_max_iter < 1)
        throw ConfigError("config: solver_tol must be positive, solver_max_iter >= 1");
    if (d_min < 0) throw ConfigError("config: d_min must be >= 0");
}

namespace {

struct Field {
    std::function<void(PipelineConfig&, const std::string&)> set;
    std::function<std::string(const PipelineConfig&)> get;
};

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
    std::istringstream in(text);
    T value{};
    in >> value;
    if (in.fail()) throw InputError("config: cannot parse value '" + text + "' for key " + key);
    std::string rest;
    in >> rest;
    if (!rest.empty()) throw InputError("config: trailing garbage after value for key " + key);
    return value;
}

std::string format_number(double v) {
    std::ostringstream out;
    out.precision(17);
    out << v;
    return out.str();
}

const std::map<std::string, Field>& field_table() {
    static const std::map<std::string, Field> table = [] {
        std::map<std::string, Field> t;
        auto real = [&t](const std::string& key, double PipelineConfig::*member) {
            t[key] = {[key, member](PipelineConfig& c, const std::string& s) {
                          c.*member = parse_number<double>(key, s);
                      },
                      [member](const PipelineConfig& c) { return format_number(c.*member); }};
        };
        auto integer = [&t](const std::string& key, int PipelineConfig::*member) {
            t[key] = {[key, member](PipelineConfig& c, const std::string& s) {
                          c.*member = parse_number<int>(key, s);
                      },
                      [member](const PipelineConfig& c) { return std::to_string(c.*member); }};
        };
        real("lambda_ad", &PipelineConfig::lambda_ad);
        real("lambda_census", &PipelineConfig::lambda_census);
        real("gamma_l", &PipelineConfig::gamma_l);
        real("epsilon", &PipelineConfig::epsilon);
        real("t_high", &PipelineConfig::t_high);
        real("t_low", &PipelineConfig::t_low);
        real("t_depth", &PipelineConfig::t_depth);
        real("lambda_d", &PipelineConfig::lambda_d);
        real("lambda_s", &PipelineConfig::lambda_s);
        real("lambda_s2", &PipelineConfig::lambda_s2);
        integer("d_min", &PipelineConfig::d_min);
        integer("d_max", &PipelineConfig::d_max);
        real("focal_px", &PipelineConfig::focal_px);
        real("baseline_m", &PipelineConfig::baseline_m);
        integer("census_window_w", &PipelineConfig::census_window_w);
        integer("census_window_h", &PipelineConfig::census_window_h);
        real("cross_color_tau", &PipelineConfig::cross_color_tau);
        real("cross_color_tau2", &PipelineConfig::cross_color_tau2);
        integer("cross_arm_l1", &PipelineConfig::cross_arm_l1);
        integer("cross_arm_l2", &PipelineConfig::cross_arm_l2);
        integer("box_radius", &PipelineConfig::box_radius);
        real("gauss_sigma", &PipelineConfig::gauss_sigma);
        real("confidence_offset_k", &PipelineConfig::confidence_offset_k);
        integer("hist_iterations", &PipelineConfig::hist_iterations);
        real("solver_tol", &PipelineConfig::solver_tol);
        integer("solver_max_iter", &PipelineConfig::solver_max_iter);
        return t;
    }();
    return table;
}

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

} // namespace

PipelineConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("config: cannot open " + path);
    PipelineConfig cfg;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw InputError("config: line " + std::to_string(line_no) + " of " + path +
                             " is not key=value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        auto it = field_table().find(key);
        if (it == field_table().end())
            throw InputError("config: unknown key '" + key + "' at line " + std::to_string(line_no));
        it->second.set(cfg, value);
    }
    cfg.validate();
    return cfg;
}

void save_config(const PipelineConfig& cfg, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InputError("config: cannot write " + path);
    for (const auto& [key, field] : field_table()) {
        out << key << "=" << field.get(cfg) << "\n";
    }
}

} // namespace dco
