#pragma once

#include <filesystem>
#include <string_view>

namespace tdotag {

/// Root of the data tree (fixtures/, paper_data/, scenarios/).
/// RADIOGAMI_FIXTURES overrides the compiled-in default.
std::filesystem::path data_root();

std::filesystem::path fixture_path(std::string_view name);
std::filesystem::path paper_data_path(std::string_view name);
std::filesystem::path scenario_path(std::string_view name);

} // namespace tdotag
