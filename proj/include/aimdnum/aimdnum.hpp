#pragma once

#include "aimdnum/agentsim.hpp"
#include "aimdnum/averaged.hpp"
#include "aimdnum/chains.hpp"
#include "aimdnum/core.hpp"
#include "aimdnum/experiment.hpp"
#include "aimdnum/kkt.hpp"
#include "aimdnum/matrices.hpp"
#include "aimdnum/random.hpp"
#include "aimdnum/trace.hpp"
