#pragma once

#include "dyson_ldp/dbm.hpp"
#include "dyson_ldp/error.hpp"
#include "dyson_ldp/fixedtime.hpp"
#include "dyson_ldp/grid.hpp"
#include "dyson_ldp/io.hpp"
#include "dyson_ldp/measures.hpp"
#include "dyson_ldp/parallel.hpp"
#include "dyson_ldp/random.hpp"
#include "dyson_ldp/rate.hpp"
#include "dyson_ldp/sampler.hpp"
#include "dyson_ldp/variational.hpp"
