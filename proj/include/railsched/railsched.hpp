#pragma once

#include "railsched/audit.hpp"
#include "railsched/bnb.hpp"
#include "railsched/events.hpp"
#include "railsched/generate.hpp"
#include "railsched/graph.hpp"
#include "railsched/io.hpp"
#include "railsched/lagrangian.hpp"
#include "railsched/lp_export.hpp"
#include "railsched/rules.hpp"
#include "railsched/svg.hpp"
#include "railsched/types.hpp"
