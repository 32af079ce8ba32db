#pragma once

#include "dualkg/error.hpp"
#include "dualkg/kg_core.hpp"
#include "dualkg/query.hpp"
#include "dualkg/relation.hpp"
#include "dualkg/rel_store.hpp"
#include "dualkg/graph_store.hpp"
#include "dualkg/tuner.hpp"
#include "dualkg/router.hpp"
#include "dualkg/dual_store.hpp"
#include "dualkg/state_io.hpp"
#include "dualkg/harness.hpp"
#include "dualkg/synth.hpp"
