#pragma once

#include "frankel/core.hpp"
#include "frankel/linalg.hpp"
#include "frankel/geometry.hpp"
#include "frankel/fields.hpp"
#include "frankel/quadrature.hpp"
#include "frankel/domain.hpp"
#include "frankel/cells.hpp"
#include "frankel/solver.hpp"
#include "frankel/energy.hpp"
#include "frankel/reilly.hpp"
#include "frankel/barrier.hpp"
#include "frankel/oracle.hpp"
#include "frankel/acceptance.hpp"
