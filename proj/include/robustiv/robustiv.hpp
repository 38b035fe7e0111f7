#pragma once

#include "robustiv/error.hpp"
#include "robustiv/types.hpp"
#include "robustiv/sample.hpp"
#include "robustiv/empirics.hpp"
#include "robustiv/normal.hpp"
#include "robustiv/parallel.hpp"
#include "robustiv/options.hpp"
#include "robustiv/validity.hpp"
#include "robustiv/bounds_a1.hpp"
#include "robustiv/bounds_a2.hpp"
#include "robustiv/bounds_a3.hpp"
#include "robustiv/robust.hpp"
#include "robustiv/inference.hpp"
#include "robustiv/simulator.hpp"
