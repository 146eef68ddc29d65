#pragma once

#include <map>
#include <string>

#include "ssia/trainer.hpp"

namespace ssia {

constexpr const char* kVersionString = "ssia 0.1.0";
constexpr const char* kSeedEnvVar = "SSIA_MASTER_SEED";

// Plain-text key=value configuration ('#' starts a comment). Precedence when
// assembling a run: command-line override > environment seed > file > default.
class KeyValueConfig {
  public:
    static KeyValueConfig from_file(const std::string& path);
    static KeyValueConfig from_text(const std::string& text);

    void set(const std::string& key, const std::string& value) { kv_[key] = value; }
    bool has(const std::string& key) const { return kv_.count(key) != 0; }
    std::string get(const std::string& key, const std::string& fallback) const;
    double get_num(const std::string& key, double fallback) const;
    std::string to_text() const;  // sorted echo

  private:
    std::map<std::string, std::string> kv_;
};

TrainConfig parse_train_config(const KeyValueConfig& kv);
std::string train_config_to_text(const TrainConfig& cfg);  // effective-config echo

Split parse_split(const std::string& name);
const char* split_name(Split s);

}  // namespace ssia
