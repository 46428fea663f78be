#pragma once

#include "prefkit/analysis.hpp"
#include "prefkit/bon.hpp"
#include "prefkit/bt.hpp"
#include "prefkit/errors.hpp"
#include "prefkit/eval.hpp"
#include "prefkit/forum.hpp"
#include "prefkit/hash.hpp"
#include "prefkit/io.hpp"
#include "prefkit/pairs.hpp"
#include "prefkit/pipeline.hpp"
#include "prefkit/rng.hpp"
#include "prefkit/style.hpp"
#include "prefkit/text.hpp"
#include "prefkit/toml.hpp"
#include "prefkit/version.hpp"
