#pragma once

#include "graphfilt/arma.hpp"
#include "graphfilt/cg.hpp"
#include "graphfilt/core.hpp"
#include "graphfilt/design.hpp"
#include "graphfilt/experiments.hpp"
#include "graphfilt/fir.hpp"
#include "graphfilt/graph.hpp"
#include "graphfilt/graph_io.hpp"
#include "graphfilt/io.hpp"
#include "graphfilt/linalg.hpp"
#include "graphfilt/random.hpp"
#include "graphfilt/spectral.hpp"
