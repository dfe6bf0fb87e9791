#ifndef OMICSNET_TEST_RUNS_HPP
#define OMICSNET_TEST_RUNS_HPP

#include "omicsnet/run.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

namespace testing {

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

inline nlohmann::json example_json() { return nlohmann::json::parse(slurp(OMICSNET_DATA "/example_run.json")); }

// The shipped example run, writing into `out`.
inline omicsnet::RunConfig example_config(const std::filesystem::path& out) {
    auto cfg = omicsnet::parse_run_config(example_json(), OMICSNET_DATA);
    cfg.output_dir = out;
    return cfg;
}

// Every file under `dir` keyed by relative path. Manifests carry wall-clock
// stamps, so they can be left out.
inline std::map<std::string, std::string> tree(const std::filesystem::path& dir, bool with_manifests) {
    std::map<std::string, std::string> out;
    for (const auto& e : std::filesystem::recursive_directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        const auto name = e.path().filename().string();
        if (!with_manifests && (name == "manifest.json" || name == "run_manifest.json")) continue;
        out[std::filesystem::relative(e.path(), dir).string()] = slurp(e.path());
    }
    return out;
}

} // namespace testing

#endif
