#pragma once

#include "gliomkit/survival/ann.hpp"
#include "gliomkit/survival/baselines.hpp"
#include "gliomkit/survival/cohort.hpp"
#include "gliomkit/survival/cv.hpp"
#include "gliomkit/survival/metrics.hpp"
#include "gliomkit/survival/model.hpp"
