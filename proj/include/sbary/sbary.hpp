#ifndef SBARY_SBARY_HPP_
#define SBARY_SBARY_HPP_

#include "sbary/barrier_weights.hpp"
#include "sbary/calculus.hpp"
#include "sbary/core.hpp"
#include "sbary/matrix_factorization.hpp"
#include "sbary/polytope.hpp"
#include "sbary/stencil.hpp"
#include "sbary/verification.hpp"

#endif  // SBARY_SBARY_HPP_
