#pragma once

#include "taxoforge/cli.hpp"
#include "taxoforge/clustering.hpp"
#include "taxoforge/corpus.hpp"
#include "taxoforge/embedding.hpp"
#include "taxoforge/embedding_remote.hpp"
#include "taxoforge/emtt.hpp"
#include "taxoforge/error.hpp"
#include "taxoforge/gett.hpp"
#include "taxoforge/http.hpp"
#include "taxoforge/llm.hpp"
#include "taxoforge/llm_remote.hpp"
#include "taxoforge/metrics.hpp"
#include "taxoforge/prompts.hpp"
#include "taxoforge/rng.hpp"
#include "taxoforge/subject_column.hpp"
#include "taxoforge/taxonomy.hpp"
#include "taxoforge/text.hpp"
