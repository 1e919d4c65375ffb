#pragma once

#include "lattice.hpp"
#include "models.hpp"
#include "spectral.hpp"
#include "locality.hpp"
#include "indices.hpp"
#include "sule.hpp"

namespace mgidx {

#ifdef MGIDX_VERSION
inline constexpr const char* kVersion = MGIDX_VERSION;
#else
inline constexpr const char* kVersion = "0.1.0";
#endif

}  // namespace mgidx
