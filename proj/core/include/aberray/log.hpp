#pragma once

namespace aberray {

/// Sets the spdlog level from the ABERRAY_LOG environment variable
/// (trace, debug, info, warn, error, off). Defaults to warn.
void init_logging_from_env();

}  // namespace aberray
