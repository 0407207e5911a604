#pragma once

#include "parhodge/error.hpp"
#include "parhodge/numlin.hpp"
#include "parhodge/compat.hpp"
#include "parhodge/surface.hpp"
#include "parhodge/localsys.hpp"
#include "parhodge/twisted.hpp"
#include "parhodge/hodge.hpp"
#include "parhodge/parastar.hpp"
#include "parhodge/moduli.hpp"
#include "parhodge/io.hpp"
