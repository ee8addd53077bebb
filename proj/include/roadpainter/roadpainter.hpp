#pragma once

#include <roadpainter/attention.hpp>
#include <roadpainter/bev_render.hpp>
#include <roadpainter/core.hpp>
#include <roadpainter/decoder.hpp>
#include <roadpainter/geometry.hpp>
#include <roadpainter/instance_mask.hpp>
#include <roadpainter/losses.hpp>
#include <roadpainter/matching.hpp>
#include <roadpainter/metrics.hpp>
#include <roadpainter/pipeline.hpp>
#include <roadpainter/points_mask.hpp>
#include <roadpainter/raster.hpp>
#include <roadpainter/scene.hpp>
#include <roadpainter/sdmap.hpp>
#include <roadpainter/svg.hpp>
#include <roadpainter/targets.hpp>
#include <roadpainter/tensor.hpp>
#include <roadpainter/topology.hpp>
#include <roadpainter/training_loss.hpp>
#include <roadpainter/weights.hpp>
