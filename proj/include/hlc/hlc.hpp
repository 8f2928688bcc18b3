#pragma once

#include "hlc/errors.hpp"
#include "hlc/evaluation.hpp"
#include "hlc/geometry.hpp"
#include "hlc/io.hpp"
#include "hlc/pipeline.hpp"
#include "hlc/projection.hpp"
#include "hlc/rng.hpp"
#include "hlc/sampling.hpp"
#include "hlc/segment.hpp"
#include "hlc/shape.hpp"
#include "hlc/simplex.hpp"
#include "hlc/special.hpp"
