#pragma once

#include "selfcont/vec.hpp"
#include "selfcont/expr.hpp"
#include "selfcont/field.hpp"
#include "selfcont/path.hpp"
#include "selfcont/probe.hpp"
#include "selfcont/germstep.hpp"
#include "selfcont/varmin.hpp"
#include "selfcont/sobolev.hpp"
#include "selfcont/zoo.hpp"
