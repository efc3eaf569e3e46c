#pragma once

// Umbrella header.

#include "cellgraph/classifier.hpp"
#include "cellgraph/config.hpp"
#include "cellgraph/csv.hpp"
#include "cellgraph/embedding.hpp"
#include "cellgraph/errors.hpp"
#include "cellgraph/evaluation.hpp"
#include "cellgraph/floorplan_json.hpp"
#include "cellgraph/forest.hpp"
#include "cellgraph/geometry.hpp"
#include "cellgraph/graph.hpp"
#include "cellgraph/hnsw.hpp"
#include "cellgraph/kmeans.hpp"
#include "cellgraph/localization.hpp"
#include "cellgraph/pipeline.hpp"
#include "cellgraph/rng.hpp"
#include "cellgraph/scene.hpp"
#include "cellgraph/similarity.hpp"
#include "cellgraph/simulation.hpp"
#include "cellgraph/spatial_model.hpp"
#include "cellgraph/step_parser.hpp"
