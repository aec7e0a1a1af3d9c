#ifndef TOXSPAN_TOXSPAN_HPP
#define TOXSPAN_TOXSPAN_HPP

#include "toxspan/attn.hpp"
#include "toxspan/baselines.hpp"
#include "toxspan/corpus.hpp"
#include "toxspan/crf.hpp"
#include "toxspan/crf_io.hpp"
#include "toxspan/crossval.hpp"
#include "toxspan/ensemble.hpp"
#include "toxspan/interchange.hpp"
#include "toxspan/lexicon.hpp"
#include "toxspan/normalize.hpp"
#include "toxspan/predictions.hpp"
#include "toxspan/span.hpp"
#include "toxspan/tree.hpp"

#endif // TOXSPAN_TOXSPAN_HPP
