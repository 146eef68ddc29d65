#include "ssia/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ssia {

KeyValueConfig KeyValueConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_text(ss.str());
}

KeyValueConfig KeyValueConfig::from_text(const std::string& text) {
    KeyValueConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        const size_t b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        const size_t e = line.find_last_not_of(" \t\r");
        line = line.substr(b, e - b + 1);
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config line " + std::to_string(lineno) + ": expected key=value");
        auto trim = [](std::string s) {
            const size_t b2 = s.find_first_not_of(" \t");
            if (b2 == std::string::npos) return std::string();
            const size_t e2 = s.find_last_not_of(" \t");
            return s.substr(b2, e2 - b2 + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw std::runtime_error("config line " + std::to_string(lineno) + ": empty key");
        cfg.kv_[key] = value;
    }
    return cfg;
}

std::string KeyValueConfig::get(const std::string& key, const std::string& fallback) const {
    const auto it = kv_.find(key);
    return it == kv_.end() ? fallback : it->second;
}

double KeyValueConfig::get_num(const std::string& key, double fallback) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    try {
        size_t pos = 0;
        const double v = std::stod(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument(it->second);
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error("config key '" + key + "': not a number: " + it->second);
    }
}

std::string KeyValueConfig::to_text() const {
    std::ostringstream out;
    for (const auto& [k, v] : kv_) out << k << "=" << v << "\n";
    return out.str();
}

Split parse_split(const std::string& name) {
    if (name == "NovelLayouts") return Split::NovelLayouts;
    if (name == "NovelShapes") return Split::NovelShapes;
    throw std::runtime_error("unknown split: " + name + " (NovelLayouts|NovelShapes)");
}

const char* split_name(Split s) {
    return s == Split::NovelLayouts ? "NovelLayouts" : "NovelShapes";
}

TrainConfig parse_train_config(const KeyValueConfig& kv) {
    TrainConfig c;
    c.split = parse_split(kv.get("split", "NovelLayouts"));
    const std::string style = kv.get("scene_style", "standard");
    if (style == "standard")
        c.scene_style = SceneStyle::standard;
    else if (style == "trivial_box")
        c.scene_style = SceneStyle::trivial_box;
    else
        throw std::runtime_error("unknown scene_style: " + style);

    c.input_res = static_cast<int>(kv.get_num("input_res", c.input_res));
    if (c.input_res % 3 != 0) throw std::runtime_error("input_res must be divisible by 3");
    c.view_m = static_cast<float>(kv.get_num("view_m", c.view_m));
    c.arm_length = static_cast<float>(kv.get_num("arm_length", c.arm_length));
    c.noise = kv.get_num("noise", 1) != 0;
    c.light_jitter = static_cast<float>(kv.get_num("light_jitter", c.light_jitter));
    c.pixel_noise = static_cast<float>(kv.get_num("pixel_noise", c.pixel_noise));

    c.initial_fill = static_cast<int>(kv.get_num("initial_fill", c.initial_fill));
    c.locations_per_cycle = static_cast<int>(kv.get_num("locations_per_cycle", c.locations_per_cycle));
    c.phase1_locations = static_cast<int>(kv.get_num("phase1_locations", c.phase1_locations));
    c.phase2_locations = static_cast<int>(kv.get_num("phase2_locations", c.phase2_locations));
    c.batch_size = static_cast<int>(kv.get_num("batch_size", c.batch_size));
    c.k1_start = static_cast<int>(kv.get_num("k1_start", c.k1_start));
    c.k1_end = static_cast<int>(kv.get_num("k1_end", c.k1_end));
    c.k2_start = static_cast<int>(kv.get_num("k2_start", c.k2_start));
    c.k2_end = static_cast<int>(kv.get_num("k2_end", c.k2_end));
    c.n_greedy1 = static_cast<int>(kv.get_num("n_greedy1", c.n_greedy1));
    c.n_random1 = static_cast<int>(kv.get_num("n_random1", c.n_random1));
    c.n_greedy2 = static_cast<int>(kv.get_num("n_greedy2", c.n_greedy2));
    c.n_random2 = static_cast<int>(kv.get_num("n_random2", c.n_random2));

    c.lr = static_cast<float>(kv.get_num("lr", c.lr));
    c.weight_decay = static_cast<float>(kv.get_num("weight_decay", c.weight_decay));
    c.theta = static_cast<float>(kv.get_num("theta", c.theta));

    c.use_superpixels = kv.get_num("superpixels", 1) != 0;
    c.prioritized = kv.get_num("prioritized", 1) != 0;
    const std::string oracle = kv.get("oracle", "none");
    if (oracle == "none")
        c.oracle = OracleMode::none;
    else if (oracle == "interactions")
        c.oracle = OracleMode::interactions;
    else if (oracle == "masks")
        c.oracle = OracleMode::masks;
    else if (oracle == "both")
        c.oracle = OracleMode::both;
    else
        throw std::runtime_error("unknown oracle mode: " + oracle);

    c.felz_k = static_cast<float>(kv.get_num("felz_k", c.felz_k));
    c.felz_sigma = static_cast<float>(kv.get_num("felz_sigma", c.felz_sigma));
    c.felz_min_size = static_cast<int>(kv.get_num("felz_min_size", c.felz_min_size));

    c.bank_capacity = static_cast<size_t>(kv.get_num("bank_capacity", static_cast<double>(c.bank_capacity)));
    c.seed = static_cast<uint64_t>(kv.get_num("seed", static_cast<double>(c.seed)));
    c.jobs = static_cast<int>(kv.get_num("jobs", c.jobs));
    c.checkpoint_every_cycles =
        static_cast<int>(kv.get_num("checkpoint_every_cycles", c.checkpoint_every_cycles));
    return c;
}

std::string train_config_to_text(const TrainConfig& c) {
    std::ostringstream out;
    out << "split=" << split_name(c.split) << "\n";
    out << "scene_style=" << (c.scene_style == SceneStyle::standard ? "standard" : "trivial_box") << "\n";
    out << "input_res=" << c.input_res << "\n";
    out << "view_m=" << c.view_m << "\n";
    out << "arm_length=" << c.arm_length << "\n";
    out << "noise=" << (c.noise ? 1 : 0) << "\n";
    out << "light_jitter=" << c.light_jitter << "\n";
    out << "pixel_noise=" << c.pixel_noise << "\n";
    out << "initial_fill=" << c.initial_fill << "\n";
    out << "locations_per_cycle=" << c.locations_per_cycle << "\n";
    out << "phase1_locations=" << c.phase1_locations << "\n";
    out << "phase2_locations=" << c.phase2_locations << "\n";
    out << "batch_size=" << c.batch_size << "\n";
    out << "k1_start=" << c.k1_start << "\n";
    out << "k1_end=" << c.k1_end << "\n";
    out << "k2_start=" << c.k2_start << "\n";
    out << "k2_end=" << c.k2_end << "\n";
    out << "n_greedy1=" << c.n_greedy1 << "\n";
    out << "n_random1=" << c.n_random1 << "\n";
    out << "n_greedy2=" << c.n_greedy2 << "\n";
    out << "n_random2=" << c.n_random2 << "\n";
    out << "lr=" << c.lr << "\n";
    out << "weight_decay=" << c.weight_decay << "\n";
    out << "theta=" << c.theta << "\n";
    out << "superpixels=" << (c.use_superpixels ? 1 : 0) << "\n";
    out << "prioritized=" << (c.prioritized ? 1 : 0) << "\n";
    const char* oracle = "none";
    if (c.oracle == OracleMode::interactions) oracle = "interactions";
    if (c.oracle == OracleMode::masks) oracle = "masks";
    if (c.oracle == OracleMode::both) oracle = "both";
    out << "oracle=" << oracle << "\n";
    out << "felz_k=" << c.felz_k << "\n";
    out << "felz_sigma=" << c.felz_sigma << "\n";
    out << "felz_min_size=" << c.felz_min_size << "\n";
    out << "bank_capacity=" << c.bank_capacity << "\n";
    out << "seed=" << c.seed << "\n";
    out << "jobs=" << c.jobs << "\n";
    out << "checkpoint_every_cycles=" << c.checkpoint_every_cycles << "\n";
    return out.str();
}

}  // namespace ssia
