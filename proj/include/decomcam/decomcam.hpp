#pragma once

#include "decomcam/attributes.hpp"
#include "decomcam/baselines.hpp"
#include "decomcam/causal.hpp"
#include "decomcam/colormap.hpp"
#include "decomcam/decomposition.hpp"
#include "decomcam/dump.hpp"
#include "decomcam/error.hpp"
#include "decomcam/imgproc.hpp"
#include "decomcam/integration.hpp"
#include "decomcam/localization.hpp"
#include "decomcam/model.hpp"
#include "decomcam/png.hpp"
#include "decomcam/remote_scorer.hpp"
#include "decomcam/report.hpp"
#include "decomcam/synthetic.hpp"
#include "decomcam/tensor.hpp"
