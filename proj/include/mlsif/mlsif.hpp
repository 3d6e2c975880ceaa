#ifndef MLSIF_MLSIF_HPP
#define MLSIF_MLSIF_HPP

#include "mlsif/config.hpp"
#include "mlsif/errors.hpp"
#include "mlsif/framework.hpp"
#include "mlsif/harness.hpp"
#include "mlsif/imputers.hpp"
#include "mlsif/io.hpp"
#include "mlsif/losses.hpp"
#include "mlsif/metrics.hpp"
#include "mlsif/series.hpp"
#include "mlsif/simulate.hpp"
#include "mlsif/stats.hpp"

#endif
