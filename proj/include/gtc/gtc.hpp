// gtc/gtc.hpp

// Copyright 2026  The GTC Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.
// Umbrella header for the library proper. The brute-force oracles live in
// gtc/oracle.hpp and are included separately.
#pragma once

#include "gtc/alphabet.hpp"
#include "gtc/confusion_network.hpp"
#include "gtc/error.hpp"
#include "gtc/experiment.hpp"
#include "gtc/graph.hpp"
#include "gtc/gtc_loss.hpp"
#include "gtc/matrix.hpp"
#include "gtc/parallel.hpp"
#include "gtc/pipeline.hpp"
#include "gtc/semiring.hpp"
#include "gtc/toy_asr.hpp"
#include "gtc/wfst.hpp"
#include "gtc/wfst_ops.hpp"
