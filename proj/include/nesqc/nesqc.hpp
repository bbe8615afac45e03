// Copyright 2026 The nesqc Authors
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

#include "nesqc/ansatz.hpp"
#include "nesqc/batching.hpp"
#include "nesqc/circuit.hpp"
#include "nesqc/errors.hpp"
#include "nesqc/gradients.hpp"
#include "nesqc/hamiltonian.hpp"
#include "nesqc/linalg.hpp"
#include "nesqc/nes.hpp"
#include "nesqc/parallel.hpp"
#include "nesqc/rng.hpp"
#include "nesqc/simulator.hpp"
#include "nesqc/trace.hpp"
