// Copyright 2026 The hpscramble Authors
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

#include "hpscramble/core.hpp"
#include "hpscramble/rng.hpp"
#include "hpscramble/circuit.hpp"
#include "hpscramble/pauli.hpp"
#include "hpscramble/state.hpp"
#include "hpscramble/unitary.hpp"
#include "hpscramble/channel.hpp"
#include "hpscramble/circuits.hpp"
#include "hpscramble/gauge.hpp"
#include "hpscramble/protocol.hpp"
#include "hpscramble/experiment.hpp"
