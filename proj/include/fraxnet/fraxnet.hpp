#pragma once

#include "fraxnet/augment.hpp"
#include "fraxnet/autograd.hpp"
#include "fraxnet/batch.hpp"
#include "fraxnet/config.hpp"
#include "fraxnet/dataset.hpp"
#include "fraxnet/error.hpp"
#include "fraxnet/gradcam.hpp"
#include "fraxnet/image.hpp"
#include "fraxnet/metrics.hpp"
#include "fraxnet/model.hpp"
#include "fraxnet/model_io.hpp"
#include "fraxnet/ops.hpp"
#include "fraxnet/optim.hpp"
#include "fraxnet/rng.hpp"
#include "fraxnet/synthetic.hpp"
#include "fraxnet/tensor.hpp"
#include "fraxnet/training.hpp"
