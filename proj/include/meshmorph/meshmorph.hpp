#pragma once

#include "meshmorph/config.hpp"
#include "meshmorph/error.hpp"
#include "meshmorph/geometry.hpp"
#include "meshmorph/harness.hpp"
#include "meshmorph/hyperelastic.hpp"
#include "meshmorph/io.hpp"
#include "meshmorph/linear_elastic.hpp"
#include "meshmorph/mesh.hpp"
#include "meshmorph/problems.hpp"
#include "meshmorph/q4.hpp"
#include "meshmorph/quality.hpp"
#include "meshmorph/sensitivity.hpp"
#include "meshmorph/sparse.hpp"
#include "meshmorph/spring.hpp"
#include "meshmorph/stiffening.hpp"
#include "meshmorph/yeoh.hpp"
