#include "srn/config_file.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace srn {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

double parse_double(const std::string& v, const std::string& key, const std::string& origin) {
    std::size_t pos = 0;
    double out = 0;
    try {
        out = std::stod(v, &pos);
    } catch (const std::exception&) {
        throw io_error("config: bad value for " + key + " in " + origin);
    }
    if (pos != v.size()) throw io_error("config: bad value for " + key + " in " + origin);
    return out;
}

std::int64_t parse_int(const std::string& v, const std::string& key, const std::string& origin) {
    const double d = parse_double(v, key, origin);
    const auto i = static_cast<std::int64_t>(d);
    if (static_cast<double>(i) != d) throw io_error("config: bad value for " + key + " in " + origin);
    return i;
}

std::pair<SRNConfig, TrainConfig> parse_lines(const std::string& text, char delim,
                                              const std::string& origin) {
    SRNConfig model;
    TrainConfig train;
    bool explicit_resblocks = false;
    int resblocks_value = 0;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find(delim);
        if (eq == std::string::npos)
            throw io_error("config: expected 'key " + std::string(1, delim) + " value' in " + origin +
                           ": " + line);
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key == "variant") {
            model.variant = parse_variant(value);
            model.num_resblocks = variant_resblocks(value);
        } else if (key == "n_scales") {
            model.n_scales = static_cast<int>(parse_int(value, key, origin));
        } else if (key == "num_resblocks") {
            explicit_resblocks = true;
            resblocks_value = static_cast<int>(parse_int(value, key, origin));
        } else if (key == "kernel_size") {
            model.kernel_size = static_cast<int>(parse_int(value, key, origin));
        } else if (key == "base_channels") {
            model.base_channels = static_cast<int>(parse_int(value, key, origin));
        } else if (key == "batch") {
            train.batch = static_cast<int>(parse_int(value, key, origin));
        } else if (key == "patch") {
            train.patch = static_cast<int>(parse_int(value, key, origin));
        } else if (key == "epochs") {
            train.epochs = static_cast<int>(parse_int(value, key, origin));
        } else if (key == "lr0") {
            train.lr0 = parse_double(value, key, origin);
        } else if (key == "lr_end") {
            train.lr_end = parse_double(value, key, origin);
        } else if (key == "power") {
            train.power = parse_double(value, key, origin);
        } else if (key == "clip_norm") {
            train.clip_norm = parse_double(value, key, origin);
        } else if (key == "seed") {
            train.seed = static_cast<std::uint64_t>(parse_int(value, key, origin));
        } else {
            throw io_error("config: unknown key '" + key + "' in " + origin);
        }
    }
    if (explicit_resblocks) model.num_resblocks = resblocks_value;
    model.validate();
    train.validate();
    return {model, train};
}

std::string format_all(const SRNConfig& model, const TrainConfig& train, const char* sep) {
    char buf[64];
    std::ostringstream out;
    out << "variant" << sep << variant_name(model.variant, model.num_resblocks) << "\n";
    out << "n_scales" << sep << model.n_scales << "\n";
    out << "num_resblocks" << sep << model.num_resblocks << "\n";
    out << "kernel_size" << sep << model.kernel_size << "\n";
    out << "base_channels" << sep << model.base_channels << "\n";
    out << "batch" << sep << train.batch << "\n";
    out << "patch" << sep << train.patch << "\n";
    out << "epochs" << sep << train.epochs << "\n";
    auto dbl = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };
    out << "lr0" << sep << dbl(train.lr0) << "\n";
    out << "lr_end" << sep << dbl(train.lr_end) << "\n";
    out << "power" << sep << dbl(train.power) << "\n";
    out << "clip_norm" << sep << dbl(train.clip_norm) << "\n";
    out << "seed" << sep << train.seed << "\n";
    return out.str();
}

std::string slurp(const std::string& path, const char* what) {
    std::ifstream in(path);
    if (!in) throw io_error(std::string(what) + ": cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

std::pair<SRNConfig, TrainConfig> parse_run_config(const std::string& text,
                                                   const std::string& origin) {
    return parse_lines(text, '=', origin);
}

std::pair<SRNConfig, TrainConfig> read_run_config(const std::string& path) {
    return parse_lines(slurp(path, "config"), '=', path);
}

void write_config_sidecar(const SRNConfig& model, const TrainConfig& train,
                          const std::string& path) {
    std::ofstream out(path);
    if (!out) throw io_error("sidecar: cannot open " + path + " for writing");
    out << format_all(model, train, ": ");
    if (!out) throw io_error("sidecar: write failed for " + path);
}

std::pair<SRNConfig, TrainConfig> read_config_sidecar(const std::string& path) {
    return parse_lines(slurp(path, "sidecar"), ':', path);
}

} // namespace srn
