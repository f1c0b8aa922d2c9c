#pragma once

// Umbrella header: the whole movement-analysis engine.

#include "kineseq/classifier.hpp"
#include "kineseq/error.hpp"
#include "kineseq/geometry.hpp"
#include "kineseq/matcher.hpp"
#include "kineseq/pca.hpp"
#include "kineseq/pipeline.hpp"
#include "kineseq/scorer.hpp"
#include "kineseq/sequencer.hpp"
#include "kineseq/synth.hpp"
#include "kineseq/types.hpp"
