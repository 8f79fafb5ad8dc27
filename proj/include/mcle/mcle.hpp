// Everything at once.
#pragma once

#include "mcle/binarize.hpp"
#include "mcle/chart.hpp"
#include "mcle/common.hpp"
#include "mcle/config.hpp"
#include "mcle/eval.hpp"
#include "mcle/experiment.hpp"
#include "mcle/hmm.hpp"
#include "mcle/interpolation.hpp"
#include "mcle/pcfg.hpp"
#include "mcle/pcfg_mcle.hpp"
#include "mcle/shiftreduce.hpp"
#include "mcle/tree.hpp"
