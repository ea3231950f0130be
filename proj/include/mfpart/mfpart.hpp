#pragma once

#include "mfpart/analysis.hpp"
#include "mfpart/batch.hpp"
#include "mfpart/ensemble.hpp"
#include "mfpart/errors.hpp"
#include "mfpart/export.hpp"
#include "mfpart/grid.hpp"
#include "mfpart/ingest.hpp"
#include "mfpart/json_io.hpp"
#include "mfpart/partition.hpp"
#include "mfpart/pmodel.hpp"
#include "mfpart/scaling.hpp"
#include "mfpart/stats.hpp"
#include "mfpart/synth.hpp"
#include "mfpart/volatility_io.hpp"
