// SPDX-License-Identifier: Apache-2.0
//
// tdcp-sim: time-domain channel property simulation toolkit
// Copyright (C) 2026 The tdcp-sim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef TDCP_TDCP_HPP
#define TDCP_TDCP_HPP

#include "common.hpp"
#include "fading_channel.hpp"
#include "trs_grid.hpp"
#include "tdcp_core.hpp"
#include "report_codec.hpp"
#include "policy.hpp"
#include "link_eval.hpp"
#include "scenario.hpp"
#include "harness.hpp"

#endif
