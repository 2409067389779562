#pragma once

#include "dcbm.hpp"
#include "error.hpp"
#include "eval.hpp"
#include "generators.hpp"
#include "graph.hpp"
#include "local_search.hpp"
#include "louvain.hpp"
#include "partition.hpp"
#include "rng.hpp"
#include "sbm.hpp"
#include "special.hpp"
