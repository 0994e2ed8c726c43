#pragma once

#include "gcnpsn/contrastive_trainer.hpp"
#include "gcnpsn/corpus_io.hpp"
#include "gcnpsn/embedding_net.hpp"
#include "gcnpsn/error.hpp"
#include "gcnpsn/parallel_kernels.hpp"
#include "gcnpsn/rng.hpp"
#include "gcnpsn/scoring_eval.hpp"
#include "gcnpsn/skeleton_graph.hpp"
