#pragma once

#include "raqeval/abstention.hpp"
#include "raqeval/analysis.hpp"
#include "raqeval/correctness.hpp"
#include "raqeval/error.hpp"
#include "raqeval/faithfulness.hpp"
#include "raqeval/judge.hpp"
#include "raqeval/prompts.hpp"
#include "raqeval/record.hpp"
#include "raqeval/scoring.hpp"
#include "raqeval/service.hpp"
#include "raqeval/store.hpp"
#include "raqeval/textnorm.hpp"
#include "raqeval/workflow.hpp"
