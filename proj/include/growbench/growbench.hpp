// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "growbench/arch.hpp"
#include "growbench/config.hpp"
#include "growbench/data.hpp"
#include "growbench/harness.hpp"
#include "growbench/matrix.hpp"
#include "growbench/metrics.hpp"
#include "growbench/morph.hpp"
#include "growbench/network.hpp"
#include "growbench/optim.hpp"
#include "growbench/plot.hpp"
#include "growbench/rng.hpp"
#include "growbench/timing.hpp"
