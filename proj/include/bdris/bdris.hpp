// Umbrella header.
#pragma once

#include "bdris/circuits.hpp"
#include "bdris/environment.hpp"
#include "bdris/estimation.hpp"
#include "bdris/io.hpp"
#include "bdris/network.hpp"
#include "bdris/optimization.hpp"
#include "bdris/physfad.hpp"
#include "bdris/types.hpp"
