#pragma once

#include "latticelab/codomain.hpp"
#include "latticelab/concavity.hpp"
#include "latticelab/induced.hpp"
#include "latticelab/measure.hpp"
#include "latticelab/operator.hpp"
#include "latticelab/optimize.hpp"
#include "latticelab/ring.hpp"
#include "latticelab/space.hpp"
#include "latticelab/theorems.hpp"
#include "latticelab/vector_measure.hpp"
