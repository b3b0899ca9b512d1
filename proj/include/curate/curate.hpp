#pragma once

// Umbrella header for the whole toolkit.

#include "curate/baseline.hpp"
#include "curate/bff.hpp"
#include "curate/bloom.hpp"
#include "curate/corpus.hpp"
#include "curate/decontam.hpp"
#include "curate/dedup.hpp"
#include "curate/extract.hpp"
#include "curate/hash.hpp"
#include "curate/heuristics.hpp"
#include "curate/jsonl.hpp"
#include "curate/metrics.hpp"
#include "curate/minhash.hpp"
#include "curate/mixing.hpp"
#include "curate/pipeline.hpp"
#include "curate/quality.hpp"
