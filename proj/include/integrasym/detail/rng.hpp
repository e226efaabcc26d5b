#pragma once

#include <random>

namespace integrasym::detail
{

// Uniform double in [0,1) from the top 53 bits; fixed transform so
// sequences are identical across platforms.
inline double next_unit(std::mt19937_64 &eng)
{
    return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

} // namespace integrasym::detail
