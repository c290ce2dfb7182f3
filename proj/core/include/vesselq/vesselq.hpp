#pragma once

#include "vesselq/cross_section.hpp"
#include "vesselq/error.hpp"
#include "vesselq/io.hpp"
#include "vesselq/morphology.hpp"
#include "vesselq/phantom.hpp"
#include "vesselq/report.hpp"
#include "vesselq/seg_metrics.hpp"
#include "vesselq/stenosis.hpp"
#include "vesselq/stenosis_eval.hpp"
#include "vesselq/vessel_tree.hpp"
#include "vesselq/volume.hpp"
