#ifndef PFDIM_PFDIM_HPP
#define PFDIM_PFDIM_HPP

// Umbrella header for the whole library.

#include "pfdim/abelian.hpp"
#include "pfdim/bigint.hpp"
#include "pfdim/block_structure.hpp"
#include "pfdim/dimension.hpp"
#include "pfdim/engine.hpp"
#include "pfdim/error.hpp"
#include "pfdim/families.hpp"
#include "pfdim/finite_field.hpp"
#include "pfdim/formula.hpp"
#include "pfdim/groups.hpp"
#include "pfdim/measure.hpp"
#include "pfdim/parser.hpp"
#include "pfdim/random.hpp"
#include "pfdim/signature.hpp"
#include "pfdim/structure.hpp"
#include "pfdim/structure_io.hpp"
#include "pfdim/vs_oracle.hpp"

#endif  // PFDIM_PFDIM_HPP
