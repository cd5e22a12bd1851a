#pragma once

// c10 defines a fatal CHECK macro; doctest's must win in test files.
#include <torch/torch.h>

#undef CHECK
#undef CHECK_EQ
#undef CHECK_NE
#undef CHECK_LE
#undef CHECK_LT
#undef CHECK_GE
#undef CHECK_GT

#include "doctest.h"
