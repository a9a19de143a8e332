#include "aberray/log.hpp"

#include <spdlog/spdlog.h>

#include <cstdlib>
#include <string>

namespace aberray {

void init_logging_from_env() {
  const char* env = std::getenv("ABERRAY_LOG");
  if (env == nullptr || *env == '\0') {
    spdlog::set_level(spdlog::level::warn);
    return;
  }
  spdlog::set_level(spdlog::level::from_str(env));
}

}  // namespace aberray
