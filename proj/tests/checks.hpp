#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "edgenet/error.hpp"

#define CHECK(cond, msg)                                              \
  do {                                                                \
    if (!(cond)) {                                                    \
      fprintf(stderr, "FAIL [%s:%d]: %s\n", __FILE__, __LINE__, msg); \
      exit(1);                                                        \
    }                                                                 \
  } while (0)

#define CHECK_NEAR(expr, want, tol, msg)                                  \
  do {                                                                    \
    const double got_ = static_cast<double>(expr);                        \
    const double want_ = static_cast<double>(want);                       \
    if (!(std::fabs(got_ - want_) <= static_cast<double>(tol))) {         \
      fprintf(stderr, "FAIL [%s:%d]: %s (got %.12g, want %.12g +- %g)\n", \
              __FILE__, __LINE__, msg, got_, want_,                       \
              static_cast<double>(tol));                                  \
      exit(1);                                                            \
    }                                                                     \
  } while (0)

#define CHECK_THROWS_CODE(expr, expected)                                  \
  do {                                                                     \
    bool threw_ = false;                                                   \
    try {                                                                  \
      expr;                                                                \
    } catch (const edgenet::Error& err_) {                                 \
      threw_ = true;                                                       \
      if (err_.code() != (expected)) {                                     \
        fprintf(stderr, "FAIL [%s:%d]: threw %s, wanted %s (%s)\n",        \
                __FILE__, __LINE__, edgenet::error_code_name(err_.code()), \
                edgenet::error_code_name(expected), err_.what());          \
        exit(1);                                                           \
      }                                                                    \
    }                                                                      \
    if (!threw_) {                                                         \
      fprintf(stderr, "FAIL [%s:%d]: expected %s, nothing thrown\n",       \
              __FILE__, __LINE__, edgenet::error_code_name(expected));     \
      exit(1);                                                             \
    }                                                                      \
  } while (0)
