#pragma once

namespace sfb {

// Written into every report so downstream artifacts can be traced to the code
// that produced them. Deliberately a fixed string: reports produced by the
// same source must be byte-identical across rebuilds.
inline constexpr const char* kVersionTag = "sfb-0.1.0";

}  // namespace sfb
