// Copyright (c) 2026 the dtprune authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "dtprune/btp.hpp"
#include "dtprune/config.hpp"
#include "dtprune/ctp.hpp"
#include "dtprune/error.hpp"
#include "dtprune/image.hpp"
#include "dtprune/image_io.hpp"
#include "dtprune/mask.hpp"
#include "dtprune/metrics.hpp"
#include "dtprune/pipeline.hpp"
#include "dtprune/qtp.hpp"
#include "dtprune/synthgen.hpp"
#include "dtprune/trace_io.hpp"
