#pragma once

#include "lrpeeg/csp.hpp"
#include "lrpeeg/dsp.hpp"
#include "lrpeeg/erf.hpp"
#include "lrpeeg/error.hpp"
#include "lrpeeg/evaluate.hpp"
#include "lrpeeg/lrp.hpp"
#include "lrpeeg/mlp.hpp"
#include "lrpeeg/montage.hpp"
#include "lrpeeg/pipeline.hpp"
#include "lrpeeg/rng.hpp"
#include "lrpeeg/slda.hpp"
#include "lrpeeg/synth.hpp"
#include "lrpeeg/types.hpp"
#include "lrpeeg/viz.hpp"
