#pragma once

#include "analysis.hpp"
#include "error.hpp"
#include "montecarlo.hpp"
#include "optics.hpp"
#include "random.hpp"
#include "scan.hpp"
#include "serialization.hpp"
#include "tag_io.hpp"
#include "tags.hpp"
#include "units.hpp"
#include "version.hpp"
