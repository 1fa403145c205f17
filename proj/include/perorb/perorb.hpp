#ifndef PERORB_PERORB_HPP
#define PERORB_PERORB_HPP

#include "perorb/error.hpp"
#include "perorb/geometry.hpp"
#include "perorb/lagrangian.hpp"
#include "perorb/action.hpp"
#include "perorb/seeds.hpp"
#include "perorb/critical_values.hpp"
#include "perorb/minimax.hpp"
#include "perorb/orbits.hpp"
#include "perorb/verify.hpp"
#include "perorb/models.hpp"
#include "perorb/io.hpp"
#include "perorb/cli.hpp"

#endif  // PERORB_PERORB_HPP
