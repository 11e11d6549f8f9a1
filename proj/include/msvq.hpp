#ifndef MSVQ_HPP
#define MSVQ_HPP

#include "msvq/bench.hpp"
#include "msvq/config.hpp"
#include "msvq/corpus.hpp"
#include "msvq/dtw.hpp"
#include "msvq/error.hpp"
#include "msvq/eval.hpp"
#include "msvq/experiment.hpp"
#include "msvq/fusion.hpp"
#include "msvq/matrix.hpp"
#include "msvq/rng.hpp"
#include "msvq/section_weights.hpp"
#include "msvq/signal.hpp"
#include "msvq/synthetic.hpp"
#include "msvq/vq.hpp"

#endif
