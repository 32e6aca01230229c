#pragma once

#include "lot/numeric.hpp"
#include "lot/spacetime.hpp"
#include "lot/timefunc.hpp"
#include "lot/curves.hpp"
#include "lot/flow.hpp"
#include "lot/measures.hpp"
#include "lot/coupling.hpp"
#include "lot/synthesis.hpp"
