#pragma once

#include "nsmaxstab/inference/fit.hpp"
#include "nsmaxstab/inference/likelihood.hpp"
#include "nsmaxstab/inference/parameters.hpp"
