#ifndef MEXPAND_MEXPAND_HPP
#define MEXPAND_MEXPAND_HPP

#include "mexpand/analysis.hpp"
#include "mexpand/bspline.hpp"
#include "mexpand/core.hpp"
#include "mexpand/diffops.hpp"
#include "mexpand/dilation.hpp"
#include "mexpand/expand.hpp"
#include "mexpand/finite_difference.hpp"
#include "mexpand/kernels.hpp"
#include "mexpand/quadrature.hpp"
#include "mexpand/signals.hpp"

#endif  // MEXPAND_MEXPAND_HPP
