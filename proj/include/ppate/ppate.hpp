//
// Copyright 2026 The ppate Authors.
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
//

#ifndef PPATE_PPATE_HPP_
#define PPATE_PPATE_HPP_

#include "ppate/aggregators.hpp"
#include "ppate/error.hpp"
#include "ppate/experiment_io.hpp"
#include "ppate/planner.hpp"
#include "ppate/random.hpp"
#include "ppate/rdp_accountant.hpp"
#include "ppate/teacher_simulator.hpp"
#include "ppate/voting_engine.hpp"

#endif  // PPATE_PPATE_HPP_
