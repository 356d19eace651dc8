#pragma once

#include "metamorph/samples.hpp"

namespace metamorph {
namespace testing = samples;
}
