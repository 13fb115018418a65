// Copyright 2026 The oovtag Authors.
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

#ifndef OOVTAG_OOVTAG_HPP_
#define OOVTAG_OOVTAG_HPP_

#include "oovtag/augment.hpp"
#include "oovtag/contrastive.hpp"
#include "oovtag/corpus.hpp"
#include "oovtag/crf.hpp"
#include "oovtag/encoder.hpp"
#include "oovtag/errors.hpp"
#include "oovtag/eval.hpp"
#include "oovtag/gradcheck.hpp"
#include "oovtag/infill.hpp"
#include "oovtag/io.hpp"
#include "oovtag/masking.hpp"
#include "oovtag/model.hpp"
#include "oovtag/remote_infill.hpp"
#include "oovtag/optim.hpp"
#include "oovtag/rng.hpp"
#include "oovtag/synthetic.hpp"
#include "oovtag/tensor.hpp"
#include "oovtag/trainer.hpp"
#include "oovtag/utf8.hpp"

#endif  // OOVTAG_OOVTAG_HPP_
