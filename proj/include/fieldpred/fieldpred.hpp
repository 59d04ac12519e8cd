#pragma once

#include "fieldpred/config.hpp"
#include "fieldpred/covmodels.hpp"
#include "fieldpred/discrete.hpp"
#include "fieldpred/dists.hpp"
#include "fieldpred/errors.hpp"
#include "fieldpred/hier.hpp"
#include "fieldpred/io.hpp"
#include "fieldpred/likelihood.hpp"
#include "fieldpred/nonparametric.hpp"
#include "fieldpred/predict.hpp"
#include "fieldpred/priors.hpp"
#include "fieldpred/sampler.hpp"
#include "fieldpred/simstudy.hpp"
