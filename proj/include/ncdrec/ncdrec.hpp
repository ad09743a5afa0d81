#pragma once

#include "errors.hpp"
#include "sparse.hpp"
#include "dataset.hpp"
#include "decomposition.hpp"
#include "ncd_matrices.hpp"
#include "ranking.hpp"
#include "engine.hpp"
#include "coldstart.hpp"
#include "baselines.hpp"
#include "metrics.hpp"
#include "recommenders.hpp"
#include "protocols.hpp"
#include "config.hpp"
#include "report.hpp"
