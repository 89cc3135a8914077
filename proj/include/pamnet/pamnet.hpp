#ifndef PAMNET_PAMNET_HPP_
#define PAMNET_PAMNET_HPP_

#include "pamnet/autodiff.hpp"
#include "pamnet/basis.hpp"
#include "pamnet/common.hpp"
#include "pamnet/dataset.hpp"
#include "pamnet/elements.hpp"
#include "pamnet/geometry.hpp"
#include "pamnet/metrics.hpp"
#include "pamnet/model.hpp"
#include "pamnet/model_config.hpp"
#include "pamnet/multiplex_graph.hpp"
#include "pamnet/neighbor.hpp"
#include "pamnet/params.hpp"
#include "pamnet/profiler.hpp"
#include "pamnet/sdf.hpp"
#include "pamnet/structure.hpp"
#include "pamnet/symmetry.hpp"
#include "pamnet/synthetic.hpp"
#include "pamnet/train.hpp"
#include "pamnet/xyz.hpp"

#endif  // PAMNET_PAMNET_HPP_
