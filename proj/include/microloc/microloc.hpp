#pragma once

#include "microloc/bichar.hpp"
#include "microloc/core.hpp"
#include "microloc/energy.hpp"
#include "microloc/grid.hpp"
#include "microloc/io.hpp"
#include "microloc/partition.hpp"
#include "microloc/quantize.hpp"
#include "microloc/symbol.hpp"
#include "microloc/symbol_checks.hpp"
#include "microloc/wavefront.hpp"
