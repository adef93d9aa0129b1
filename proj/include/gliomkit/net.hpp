#pragma once

#include "gliomkit/net/gradcheck.hpp"
#include "gliomkit/net/hypercolumn.hpp"
#include "gliomkit/net/layers.hpp"
#include "gliomkit/net/loss.hpp"
#include "gliomkit/net/network.hpp"
#include "gliomkit/net/optimizer.hpp"
#include "gliomkit/net/sampler.hpp"
#include "gliomkit/net/spec.hpp"
