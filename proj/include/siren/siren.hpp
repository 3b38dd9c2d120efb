// Copyright 2026 The sirenrec Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "siren/checkpoint.hpp"
#include "siren/cli.hpp"
#include "siren/common.hpp"
#include "siren/config.hpp"
#include "siren/data.hpp"
#include "siren/diagnostics.hpp"
#include "siren/graph.hpp"
#include "siren/metrics.hpp"
#include "siren/model.hpp"
#include "siren/synthetic.hpp"
#include "siren/train.hpp"
