#pragma once

#include "fleetsize/coupled_exact.hpp"
#include "fleetsize/coupled_mc.hpp"
#include "fleetsize/decoupled.hpp"
#include "fleetsize/errors.hpp"
#include "fleetsize/ingest.hpp"
#include "fleetsize/io.hpp"
#include "fleetsize/model.hpp"
#include "fleetsize/rebalance.hpp"
#include "fleetsize/replay.hpp"
#include "fleetsize/sizing.hpp"
#include "fleetsize/synthetic.hpp"
