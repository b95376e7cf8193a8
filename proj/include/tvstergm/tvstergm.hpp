#ifndef TVSTERGM_TVSTERGM_HPP
#define TVSTERGM_TVSTERGM_HPP

#include "tvstergm/errors.hpp"
#include "tvstergm/network.hpp"
#include "tvstergm/netpanel.hpp"
#include "tvstergm/transition.hpp"
#include "tvstergm/netstats.hpp"
#include "tvstergm/splines.hpp"
#include "tvstergm/pirls.hpp"
#include "tvstergm/model.hpp"
#include "tvstergm/fpca.hpp"
#include "tvstergm/evalsim.hpp"
#include "tvstergm/synth.hpp"

#endif
