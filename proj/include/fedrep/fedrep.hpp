#pragma once

#include "fedrep/aggregators.hpp"
#include "fedrep/attacks.hpp"
#include "fedrep/config.hpp"
#include "fedrep/datagen.hpp"
#include "fedrep/dataset.hpp"
#include "fedrep/error.hpp"
#include "fedrep/linalg.hpp"
#include "fedrep/model.hpp"
#include "fedrep/report.hpp"
#include "fedrep/reputation.hpp"
#include "fedrep/rng.hpp"
#include "fedrep/robust_stats.hpp"
#include "fedrep/simulator.hpp"
#include "fedrep/theory.hpp"
