#pragma once

#include "hsreg/error.hpp"
#include "hsreg/linalg.hpp"
#include "hsreg/hilbert_scale.hpp"
#include "hsreg/problems.hpp"
#include "hsreg/filters.hpp"
#include "hsreg/iteration.hpp"
#include "hsreg/param_rules.hpp"
