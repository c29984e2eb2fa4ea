#include "tdotag/fixtures.hpp"

#include <cstdlib>

namespace tdotag {

std::filesystem::path data_root() {
    if (const char* env = std::getenv("RADIOGAMI_FIXTURES"); env && *env) return env;
    return TDOTAG_DATA_DIR;
}

std::filesystem::path fixture_path(std::string_view name) { return data_root() / "fixtures" / name; }
std::filesystem::path paper_data_path(std::string_view name) { return data_root() / "paper_data" / name; }
std::filesystem::path scenario_path(std::string_view name) { return data_root() / "scenarios" / name; }

} // namespace tdotag
