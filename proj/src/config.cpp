#include "stmimo/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace stmimo {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

double parse_double(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    try {
        std::size_t used = 0;
        const double v = std::stod(t, &used);
        if (used != t.size()) throw std::invalid_argument(t);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: '" + key + "' expects a number, got '" + text + "'");
    }
}

std::uint64_t parse_unsigned(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc{} || ptr != t.data() + t.size()) {
        throw ConfigError("config: '" + key + "' expects a non-negative integer, got '" + text + "'");
    }
    return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
    std::string t = trim(text);
    std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
    if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
    if (t == "false" || t == "0" || t == "no" || t == "off") return false;
    throw ConfigError("config: '" + key + "' expects true/false, got '" + text + "'");
}

std::vector<double> degrees_list(const std::string& key, const std::string& text) {
    std::vector<double> out;
    for (const auto& item : split_list(text)) out.push_back(deg2rad(parse_double(key, item)));
    return out;
}

std::pair<double, double> bounds(const std::string& key, const std::string& text, bool degrees) {
    const auto items = split_list(text);
    if (items.size() != 2) throw ConfigError("config: '" + key + "' expects two values 'low, high'");
    double lo = parse_double(key, items[0]);
    double hi = parse_double(key, items[1]);
    if (degrees) {
        lo = deg2rad(lo);
        hi = deg2rad(hi);
    }
    if (!(lo <= hi)) throw ConfigError("config: '" + key + "' needs low <= high");
    return {lo, hi};
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt_deg_list(const std::vector<double>& rad) {
    std::string out;
    for (std::size_t i = 0; i < rad.size(); ++i) out += (i ? ", " : "") + fmt(rad2deg(rad[i]));
    return out;
}

using Setter = std::function<void(ExperimentConfig&, const std::string& key, const std::string& value)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = [] {
        std::map<std::string, Setter> t;
        auto size_field = [](std::size_t RadarConfig::*field) {
            return [field](ExperimentConfig& c, const std::string& k, const std::string& v) {
                c.radar.*field = static_cast<std::size_t>(parse_unsigned(k, v));
            };
        };
        auto real_field = [](double RadarConfig::*field) {
            return [field](ExperimentConfig& c, const std::string& k, const std::string& v) {
                c.radar.*field = parse_double(k, v);
            };
        };
        t["tx_elements"] = size_field(&RadarConfig::tx_elements);
        t["rx_elements"] = size_field(&RadarConfig::rx_elements);
        t["pulses"] = size_field(&RadarConfig::pulses);
        t["snapshots"] = size_field(&RadarConfig::snapshots);
        t["prf"] = real_field(&RadarConfig::prf);
        t["pulse_duration"] = real_field(&RadarConfig::pulse_duration);
        t["bandwidth"] = real_field(&RadarConfig::bandwidth);
        t["targets"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
            c.scene.count = static_cast<std::size_t>(parse_unsigned(k, v));
        };
        t["dod"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
            c.scene.dod = degrees_list(k, v);
        };
        t["doa"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
            c.scene.doa = degrees_list(k, v);
        };
        t["doppler"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
            c.scene.doppler = parse_number_list(v);
            (void)k;
        };
        t["range_cells"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
            c.scene.range_cells.clear();
            for (const auto& item : split_list(v)) c.scene.range_cells.push_back(parse_unsigned(k, item));
        };
        t["dod_bounds"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
            c.scene.dod_bounds = bounds(k, v, true);
        };
        t["doa_bounds"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
            c.scene.doa_bounds = bounds(k, v, true);
        };
        t["doppler_bounds"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
            c.scene.doppler_bounds = bounds(k, v, false);
        };
        t["snr_db"] = [](ExperimentConfig& c, const std::string&, const std::string& v) {
            c.snr_db = parse_number_list(v);
        };
        t["trials"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
            c.trials = static_cast<std::size_t>(parse_unsigned(k, v));
        };
        t["methods"] = [](ExperimentConfig& c, const std::string&, const std::string& v) {
            c.methods = parse_method_list(v);
        };
        t["seed"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
            c.seed = parse_unsigned(k, v);
        };
        t["noiseless"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
            c.noiseless = parse_bool(k, v);
        };
        t["small_tensor"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
            const std::string s = trim(v);
            if (s == "synthesized") c.small_source = SmallTensorSource::synthesized;
            else if (s == "decimated") c.small_source = SmallTensorSource::decimated;
            else throw ConfigError("config: '" + k + "' must be synthesized or decimated");
        };
        t["als_max_iters"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
            c.als.max_iters = static_cast<std::size_t>(parse_unsigned(k, v));
        };
        t["als_rel_tol"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
            c.als.rel_tol = parse_double(k, v);
        };
        t["als_restarts"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
            c.als.restarts = static_cast<std::size_t>(parse_unsigned(k, v));
        };
        t["als_init"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
            const std::string s = trim(v);
            if (s == "random") c.als.init = AlsInit::random;
            else if (s == "svd") c.als.init = AlsInit::svd;
            else throw ConfigError("config: '" + k + "' must be random or svd");
        };
        t["threads"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
            c.threads = static_cast<std::size_t>(parse_unsigned(k, v));
        };
        t["output"] = [](ExperimentConfig& c, const std::string&, const std::string& v) { c.output = trim(v); };
        return t;
    }();
    return table;
}

}  // namespace

std::vector<double> parse_number_list(const std::string& text) {
    std::vector<double> out;
    for (const auto& item : split_list(text)) out.push_back(parse_double("list", item));
    return out;
}

Method parse_method(const std::string& name) {
    const std::string n = trim(name);
    if (n == "proposed") return Method::proposed;
    if (n == "parafac_small") return Method::parafac_small;
    if (n == "esprit") return Method::esprit;
    throw ConfigError("unknown method '" + n + "' (expected proposed, parafac_small or esprit)");
}

std::vector<Method> parse_method_list(const std::string& text) {
    std::vector<Method> out;
    for (const auto& item : split_list(text)) {
        const Method m = parse_method(item);
        if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
    }
    return out;
}

ExperimentConfig parse_config(const std::string& text) {
    std::vector<std::pair<std::string, std::string>> entries;
    std::map<std::string, int> seen;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
        if (key != "preset" && key != "experiment" && !setters().count(key)) {
            throw ConfigError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        }
        if (seen[key]++) throw ConfigError("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
        entries.emplace_back(key, value);
    }

    ExperimentKind kind = ExperimentKind::rmse;
    std::string preset = "paper";
    for (const auto& [k, v] : entries) {
        if (k == "experiment") {
            if (v == "rmse") kind = ExperimentKind::rmse;
            else if (v == "resolution") kind = ExperimentKind::resolution;
            else throw ConfigError("config: 'experiment' must be rmse or resolution");
        } else if (k == "preset") {
            if (v != "paper" && v != "desk") throw ConfigError("config: 'preset' must be paper or desk");
            preset = v;
        }
    }
    ExperimentConfig cfg = preset == "desk" ? ExperimentConfig::desk(kind) : ExperimentConfig::paper(kind);
    for (const auto& [k, v] : entries) {
        if (k == "experiment" || k == "preset") continue;
        setters().at(k)(cfg, k, v);
    }
    // a scene with fewer fixed entries than targets is a typo rather than a request to draw
    auto check_len = [&](const char* name, std::size_t n) {
        if (n != 0 && n != cfg.scene.count) {
            throw ConfigError(std::string("config: '") + name + "' has " + std::to_string(n) + " entries, targets = " +
                              std::to_string(cfg.scene.count));
        }
    };
    check_len("dod", cfg.scene.dod.size());
    check_len("doa", cfg.scene.doa.size());
    check_len("doppler", cfg.scene.doppler.size());
    check_len("range_cells", cfg.scene.range_cells.size());
    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot read config file '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    try {
        return parse_config(ss.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

std::string format_config(const ExperimentConfig& c) {
    std::ostringstream o;
    o << "experiment = " << to_string(c.kind) << "\n";
    o << "tx_elements = " << c.radar.tx_elements << "\n";
    o << "rx_elements = " << c.radar.rx_elements << "\n";
    o << "pulses = " << c.radar.pulses << "\n";
    o << "snapshots = " << c.radar.snapshots << "\n";
    o << "prf = " << fmt(c.radar.prf) << "\n";
    o << "pulse_duration = " << fmt(c.radar.pulse_duration) << "\n";
    o << "bandwidth = " << fmt(c.radar.bandwidth) << "\n";
    o << "targets = " << c.scene.count << "\n";
    if (!c.scene.dod.empty()) o << "dod = " << fmt_deg_list(c.scene.dod) << "\n";
    if (!c.scene.doa.empty()) o << "doa = " << fmt_deg_list(c.scene.doa) << "\n";
    if (!c.scene.doppler.empty()) {
        o << "doppler = ";
        for (std::size_t i = 0; i < c.scene.doppler.size(); ++i) o << (i ? ", " : "") << fmt(c.scene.doppler[i]);
        o << "\n";
    }
    if (!c.scene.range_cells.empty()) {
        o << "range_cells = ";
        for (std::size_t i = 0; i < c.scene.range_cells.size(); ++i) o << (i ? ", " : "") << c.scene.range_cells[i];
        o << "\n";
    }
    o << "dod_bounds = " << fmt(rad2deg(c.scene.dod_bounds.first)) << ", " << fmt(rad2deg(c.scene.dod_bounds.second))
      << "\n";
    o << "doa_bounds = " << fmt(rad2deg(c.scene.doa_bounds.first)) << ", " << fmt(rad2deg(c.scene.doa_bounds.second))
      << "\n";
    o << "doppler_bounds = " << fmt(c.scene.doppler_bounds.first) << ", " << fmt(c.scene.doppler_bounds.second) << "\n";
    o << "snr_db = ";
    for (std::size_t i = 0; i < c.snr_db.size(); ++i) o << (i ? ", " : "") << fmt(c.snr_db[i]);
    o << "\n";
    o << "trials = " << c.trials << "\n";
    o << "methods = ";
    for (std::size_t i = 0; i < c.methods.size(); ++i) o << (i ? ", " : "") << to_string(c.methods[i]);
    o << "\n";
    o << "seed = " << c.seed << "\n";
    o << "noiseless = " << (c.noiseless ? "true" : "false") << "\n";
    o << "small_tensor = " << to_string(c.small_source) << "\n";
    o << "als_max_iters = " << c.als.max_iters << "\n";
    o << "als_rel_tol = " << fmt(c.als.rel_tol) << "\n";
    o << "als_restarts = " << c.als.restarts << "\n";
    o << "als_init = " << (c.als.init == AlsInit::svd ? "svd" : "random") << "\n";
    return o.str();
}

}  // namespace stmimo
