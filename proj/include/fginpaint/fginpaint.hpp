#pragma once

#include "fginpaint/adam.hpp"
#include "fginpaint/checkpoint.hpp"
#include "fginpaint/config.hpp"
#include "fginpaint/dataset.hpp"
#include "fginpaint/embedding.hpp"
#include "fginpaint/errors.hpp"
#include "fginpaint/features.hpp"
#include "fginpaint/image.hpp"
#include "fginpaint/losses.hpp"
#include "fginpaint/mask_engine.hpp"
#include "fginpaint/metrics.hpp"
#include "fginpaint/net.hpp"
#include "fginpaint/nn.hpp"
#include "fginpaint/png_io.hpp"
#include "fginpaint/rng.hpp"
#include "fginpaint/tensor.hpp"
#include "fginpaint/train.hpp"
