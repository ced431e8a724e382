#pragma once

// Umbrella header.

#include "vim/errors.hpp"
#include "vim/random.hpp"
#include "vim/parallel.hpp"
#include "vim/stats.hpp"
#include "vim/quadrature.hpp"
#include "vim/coeffs.hpp"
#include "vim/scale_table.hpp"
#include "vim/bvp.hpp"
#include "vim/scale_analysis.hpp"
#include "vim/diffusion.hpp"
#include "vim/excursion.hpp"
#include "vim/island_tree.hpp"
#include "vim/renewal.hpp"
#include "vim/config.hpp"
#include "vim/verify.hpp"
