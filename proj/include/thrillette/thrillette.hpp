// Copyright 2026 The Thrillette Authors
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

#include <thrillette/engine/config.hpp>
#include <thrillette/engine/context.hpp>
#include <thrillette/engine/dia.hpp>
#include <thrillette/engine/runner.hpp>
#include <thrillette/ops/actions.hpp>
#include <thrillette/ops/generate.hpp>
#include <thrillette/ops/group.hpp>
#include <thrillette/ops/io.hpp>
#include <thrillette/ops/prefix_sum.hpp>
#include <thrillette/ops/reduce.hpp>
#include <thrillette/ops/sort.hpp>
#include <thrillette/ops/union_concat.hpp>
#include <thrillette/ops/window.hpp>
#include <thrillette/ops/zip.hpp>
