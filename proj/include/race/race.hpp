//
// Copyright 2026 The RACE Sketch Authors
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

#ifndef RACE_RACE_HPP_
#define RACE_RACE_HPP_

#include "race/error.hpp"
#include "race/estimation.hpp"
#include "race/format.hpp"
#include "race/io.hpp"
#include "race/lsh.hpp"
#include "race/ml.hpp"
#include "race/optimize.hpp"
#include "race/privacy.hpp"
#include "race/sketch.hpp"

#endif  // RACE_RACE_HPP_
