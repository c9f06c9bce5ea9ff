#pragma once

// Everything in one include.
#include "foreco/error.hpp"
#include "foreco/core.hpp"
#include "foreco/random.hpp"
#include "foreco/trace_csv.hpp"
#include "foreco/trajectory.hpp"
#include "foreco/var_model.hpp"
#include "foreco/ols.hpp"
#include "foreco/adam.hpp"
#include "foreco/model_selection.hpp"
#include "foreco/model_json.hpp"
#include "foreco/channel.hpp"
#include "foreco/channel_sim.hpp"
#include "foreco/channel_io.hpp"
#include "foreco/recovery.hpp"
#include "foreco/evaluation.hpp"
#include "foreco/sweep.hpp"
