#pragma once

#include "prefmix/error.hpp"
#include "prefmix/fit.hpp"
#include "prefmix/generator.hpp"
#include "prefmix/likelihood.hpp"
#include "prefmix/metrics.hpp"
#include "prefmix/network.hpp"
#include "prefmix/posterior.hpp"
#include "prefmix/report.hpp"
#include "prefmix/specfun.hpp"
