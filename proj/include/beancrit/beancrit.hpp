#pragma once
// Everything in one include.

#include "beancrit/core.hpp"
#include "beancrit/domain.hpp"
#include "beancrit/convex_body.hpp"
#include "beancrit/grid.hpp"
#include "beancrit/minkowski.hpp"
#include "beancrit/critical_state.hpp"
#include "beancrit/weak_form.hpp"
#include "beancrit/drive.hpp"
#include "beancrit/contour.hpp"
#include "beancrit/evolution.hpp"
#include "beancrit/power_law.hpp"
#include "beancrit/io.hpp"
#include "beancrit/config.hpp"
#include "beancrit/scenario.hpp"
