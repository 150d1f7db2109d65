#pragma once

#include "chain_coefficients.hpp"
#include "chain_mapping.hpp"
#include "config.hpp"
#include "linalg.hpp"
#include "models.hpp"
#include "mpo.hpp"
#include "mps.hpp"
#include "observables.hpp"
#include "operators.hpp"
#include "results.hpp"
#include "runner.hpp"
#include "spectral_density.hpp"
#include "tdvp.hpp"
#include "tensor.hpp"
