// Copyright 2026 The SimA Lab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Convenience header pulling in the whole library, harness included.

#pragma once

#include "simalab/attacks.hpp"
#include "simalab/bottleneck.hpp"
#include "simalab/denoiser.hpp"
#include "simalab/empirical_score.hpp"
#include "simalab/error.hpp"
#include "simalab/evaluate.hpp"
#include "simalab/harness/config.hpp"
#include "simalab/harness/run.hpp"
#include "simalab/harness/sweep.hpp"
#include "simalab/local_mean.hpp"
#include "simalab/metrics.hpp"
#include "simalab/mixture_score.hpp"
#include "simalab/parallel.hpp"
#include "simalab/pointset.hpp"
#include "simalab/rng.hpp"
#include "simalab/schedule.hpp"
#include "simalab/score_model.hpp"
#include "simalab/synthdata.hpp"
#include "simalab/version.hpp"
