// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "podrank/corpus.hpp"
#include "podrank/embedding.hpp"
#include "podrank/error.hpp"
#include "podrank/eval.hpp"
#include "podrank/fusion.hpp"
#include "podrank/index.hpp"
#include "podrank/index_io.hpp"
#include "podrank/pipeline.hpp"
#include "podrank/prf.hpp"
#include "podrank/ranked_list.hpp"
#include "podrank/rerank/head_io.hpp"
#include "podrank/rerank/regression.hpp"
#include "podrank/rerank/rerank.hpp"
#include "podrank/rerank/similarity.hpp"
#include "podrank/rerank/synthetic.hpp"
#include "podrank/rerank/train.hpp"
#include "podrank/text.hpp"
