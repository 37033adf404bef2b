/* Copyright 2026 The smrf Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/


#ifndef SMRF_SMRF_HPP_
#define SMRF_SMRF_HPP_

#include "smrf/baselines.hpp"
#include "smrf/candidates.hpp"
#include "smrf/checkpoint.hpp"
#include "smrf/common.hpp"
#include "smrf/config.hpp"
#include "smrf/dataset.hpp"
#include "smrf/enumerate.hpp"
#include "smrf/gradient.hpp"
#include "smrf/harness.hpp"
#include "smrf/inference.hpp"
#include "smrf/learning.hpp"
#include "smrf/model.hpp"
#include "smrf/normalization.hpp"
#include "smrf/pair_map.hpp"

#endif  // SMRF_SMRF_HPP_
