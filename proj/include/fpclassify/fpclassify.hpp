/*
 * Copyright (C) 2026 The fpclassify Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef FPCLASSIFY_FPCLASSIFY_HPP_
#define FPCLASSIFY_FPCLASSIFY_HPP_

#include "fpclassify/attribute.hpp"
#include "fpclassify/classifier.hpp"
#include "fpclassify/codec.hpp"
#include "fpclassify/evidence.hpp"
#include "fpclassify/ingestion.hpp"
#include "fpclassify/similarity.hpp"
#include "fpclassify/store.hpp"
#include "fpclassify/report.hpp"
#include "fpclassify/review.hpp"

#endif  // FPCLASSIFY_FPCLASSIFY_HPP_
