#pragma once

#include "qrng/adc.hpp"
#include "qrng/bits.hpp"
#include "qrng/constants.hpp"
#include "qrng/entropy.hpp"
#include "qrng/errors.hpp"
#include "qrng/health.hpp"
#include "qrng/io.hpp"
#include "qrng/noise.hpp"
#include "qrng/random.hpp"
#include "qrng/simulator.hpp"
#include "qrng/toeplitz.hpp"

namespace qrng {
inline constexpr const char* version = "0.1.0";
}
