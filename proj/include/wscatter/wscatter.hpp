#pragma once

#include "wscatter/billiard.hpp"
#include "wscatter/cli.hpp"
#include "wscatter/error.hpp"
#include "wscatter/geometry.hpp"
#include "wscatter/measure.hpp"
#include "wscatter/obstacle.hpp"
#include "wscatter/parallel.hpp"
#include "wscatter/recovery.hpp"
#include "wscatter/rng.hpp"
#include "wscatter/unit_balls.hpp"
#include "wscatter/weyl.hpp"
