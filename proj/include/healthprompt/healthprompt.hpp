#pragma once

#include "healthprompt/dataset.hpp"
#include "healthprompt/dk.hpp"
#include "healthprompt/error.hpp"
#include "healthprompt/experiment.hpp"
#include "healthprompt/format.hpp"
#include "healthprompt/llm/cache.hpp"
#include "healthprompt/llm/gateway.hpp"
#include "healthprompt/llm/mock.hpp"
#include "healthprompt/llm/sha256.hpp"
#include "healthprompt/llm/transport.hpp"
#include "healthprompt/llm/verdict.hpp"
#include "healthprompt/metrics.hpp"
#include "healthprompt/ml/model.hpp"
#include "healthprompt/ml/search.hpp"
#include "healthprompt/preprocess.hpp"
#include "healthprompt/prompt.hpp"
#include "healthprompt/random.hpp"
#include "healthprompt/report.hpp"
#include "healthprompt/schema.hpp"
