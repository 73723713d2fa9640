#pragma once

#include "calculus.hpp"
#include "cohort.hpp"
#include "errors.hpp"
#include "metrics.hpp"
#include "model.hpp"
#include "nets.hpp"
#include "rng.hpp"
#include "serialize.hpp"
#include "tensor.hpp"
#include "training.hpp"
