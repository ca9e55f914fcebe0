// SPDX-License-Identifier: Apache-2.0
//
// pcaloc - direct localization of multiple sources by partly calibrated arrays
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

#ifndef PCALOC_PCALOC_HPP
#define PCALOC_PCALOC_HPP

#include "pcaloc/assignment.hpp"
#include "pcaloc/config.hpp"
#include "pcaloc/errors.hpp"
#include "pcaloc/estimators.hpp"
#include "pcaloc/geometry.hpp"
#include "pcaloc/harness.hpp"
#include "pcaloc/scenario.hpp"
#include "pcaloc/search.hpp"
#include "pcaloc/snapshot_io.hpp"
#include "pcaloc/subspace.hpp"
#include "pcaloc/types.hpp"

#endif // PCALOC_PCALOC_HPP
