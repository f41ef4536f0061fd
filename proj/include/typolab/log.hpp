#pragma once

namespace typolab {

// Sets the spdlog level from TYPOLAB_LOG (trace, debug, info, warn, error,
// critical, off). Unset or unknown values keep `info`.
void init_logging();

}  // namespace typolab
