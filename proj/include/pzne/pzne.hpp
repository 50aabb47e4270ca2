// Copyright 2026 The pzne Authors
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


#pragma once

#include "pzne/bounds.hpp"
#include "pzne/circuit.hpp"
#include "pzne/config.hpp"
#include "pzne/density.hpp"
#include "pzne/error.hpp"
#include "pzne/fit.hpp"
#include "pzne/harness.hpp"
#include "pzne/measurement.hpp"
#include "pzne/mitigation.hpp"
#include "pzne/noise.hpp"
#include "pzne/pauli.hpp"
#include "pzne/purification.hpp"
#include "pzne/report.hpp"
#include "pzne/rng.hpp"
