#pragma once

#include "kkpert/options.hpp"
#include "kkpert/error.hpp"
#include "kkpert/linalg.hpp"
#include "kkpert/interval.hpp"
#include "kkpert/space.hpp"
#include "kkpert/linear_map.hpp"
#include "kkpert/algebra.hpp"
#include "kkpert/distance.hpp"
#include "kkpert/norms.hpp"
#include "kkpert/htensor.hpp"
#include "kkpert/johnson.hpp"
#include "kkpert/similarity.hpp"
#include "kkpert/perturbation.hpp"
#include "kkpert/pipeline.hpp"
