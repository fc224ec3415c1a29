#pragma once

#include "mdins/errors.hpp"
#include "mdins/quadrature.hpp"
#include "mdins/distributions.hpp"
#include "mdins/measures.hpp"
#include "mdins/indemnity.hpp"
#include "mdins/premiums.hpp"
#include "mdins/contracts.hpp"
#include "mdins/solvers.hpp"
#include "mdins/oracle.hpp"
