#pragma once

#include <filesystem>

namespace pathplan {

// Directory holding templates/ and schemas/. Resolution order: the
// PATHPLAN_ASSETS environment variable, then the source tree this binary was
// built from.
std::filesystem::path default_asset_dir();

}  // namespace pathplan
