#pragma once

#include "core.hpp"
#include "specfun.hpp"
#include "harmonics.hpp"
#include "airyq.hpp"
#include "ballistic.hpp"
#include "freespace.hpp"
#include "semiclassical.hpp"
#include "atomlaser.hpp"
#include "io.hpp"
#include "cli.hpp"
