// Copyright 2026 The mskvar Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "mskvar/disorder_mc.hpp"
#include "mskvar/error.hpp"
#include "mskvar/interpolation.hpp"
#include "mskvar/model.hpp"
#include "mskvar/oracles.hpp"
#include "mskvar/parallel.hpp"
#include "mskvar/quadrature.hpp"
#include "mskvar/rng.hpp"
#include "mskvar/spin.hpp"
#include "mskvar/stats.hpp"
