#pragma once

#include "heartml/boosting.hpp"
#include "heartml/bundle.hpp"
#include "heartml/commands.hpp"
#include "heartml/dataset.hpp"
#include "heartml/error.hpp"
#include "heartml/evaluation.hpp"
#include "heartml/math.hpp"
#include "heartml/metrics.hpp"
#include "heartml/model.hpp"
#include "heartml/naive_bayes.hpp"
#include "heartml/preprocess.hpp"
#include "heartml/rng.hpp"
#include "heartml/rnn.hpp"
#include "heartml/schema.hpp"
#include "heartml/serialization.hpp"
