#pragma once

// Everything except the command-line front end.

#include "arbor/calculus.hpp"
#include "arbor/capacity.hpp"
#include "arbor/counterexample.hpp"
#include "arbor/dirichlet.hpp"
#include "arbor/dyadic.hpp"
#include "arbor/errors.hpp"
#include "arbor/io.hpp"
#include "arbor/parallel.hpp"
#include "arbor/sobolev_carleson.hpp"
#include "arbor/stochastic.hpp"
#include "arbor/tree.hpp"
#include "arbor/tree_spec.hpp"
#include "arbor/version.hpp"
#include "arbor/wiener.hpp"
