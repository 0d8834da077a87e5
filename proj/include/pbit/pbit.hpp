#ifndef PBIT_PBIT_HPP
#define PBIT_PBIT_HPP

#include "pbit/random.hpp"
#include "pbit/device.hpp"
#include "pbit/circuit.hpp"
#include "pbit/unitcell.hpp"
#include "pbit/analysis.hpp"
#include "pbit/network.hpp"
#include "pbit/config.hpp"
#include "pbit/io.hpp"

#endif  // PBIT_PBIT_HPP
