#pragma once

// Everything except the HTTP front-end (dairector/service.hpp), which pulls
// in cpp-httplib.

#include "dairector/console.hpp"
#include "dairector/corpus.hpp"
#include "dairector/embedding.hpp"
#include "dairector/errors.hpp"
#include "dairector/eval.hpp"
#include "dairector/session.hpp"
#include "dairector/story.hpp"
#include "dairector/text.hpp"
