#pragma once

#include "chx/basis.hpp"
#include "chx/channel.hpp"
#include "chx/error.hpp"
#include "chx/fcs.hpp"
#include "chx/io.hpp"
#include "chx/linalg.hpp"
#include "chx/memory.hpp"
#include "chx/random.hpp"
#include "chx/root.hpp"
