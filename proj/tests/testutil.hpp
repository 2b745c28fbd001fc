#pragma once

#include <cmath>

#include "doctest.h"
#include "frag/errors.hpp"

// Asserts that expr_ throws frag::Error with the given code.
#define CHECK_RAISES(code_, expr_)                                       \
  do {                                                                   \
    bool caught_ = false;                                                \
    try {                                                                \
      (void)(expr_);                                                     \
    } catch (const frag::Error& e_) {                                    \
      caught_ = true;                                                    \
      CHECK_MESSAGE(e_.code() == (code_), "got ", frag::errc_name(e_.code()), \
                    ": ", e_.what());                                    \
    }                                                                    \
    CHECK_MESSAGE(caught_, "expected " #code_ " from " #expr_);          \
  } while (0)

namespace testutil {

inline bool close(double a, double b, double tol) { return std::fabs(a - b) <= tol; }

}  // namespace testutil
