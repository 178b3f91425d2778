#pragma once

#include "ropebound/audit.hpp"
#include "ropebound/bounds.hpp"
#include "ropebound/common.hpp"
#include "ropebound/oscillator.hpp"
#include "ropebound/precision.hpp"
#include "ropebound/simulate.hpp"
