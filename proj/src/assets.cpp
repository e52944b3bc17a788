#include "pathplan/assets.hpp"

#include <cstdlib>

#ifndef PATHPLAN_SOURCE_DIR
#define PATHPLAN_SOURCE_DIR "."
#endif

namespace pathplan {

std::filesystem::path default_asset_dir() {
  if (const char* env = std::getenv("PATHPLAN_ASSETS"); env && *env) {
    return env;
  }
  return PATHPLAN_SOURCE_DIR;
}

}  // namespace pathplan
