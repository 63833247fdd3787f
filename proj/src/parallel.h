// Copyright (c) The IslandBridge Authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#pragma once

#include <exception>
#include <vector>

namespace islandbridge::detail
{
  /// Runs f(i) for i in [0, n) on the OpenMP pool. Results keep index
  /// order; the lowest-index exception is rethrown after the loop.
  template <class T, class F>
  std::vector<T> parallel_map(size_t n, F&& f)
  {
    std::vector<T> out(n);
    std::vector<std::exception_ptr> errors(n);
    const long count = static_cast<long>(n);
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < count; ++i)
    {
      try
      {
        out[static_cast<size_t>(i)] = f(static_cast<size_t>(i));
      }
      catch (...)
      {
        errors[static_cast<size_t>(i)] = std::current_exception();
      }
    }
    for (const auto& e : errors)
      if (e)
        std::rethrow_exception(e);
    return out;
  }
}
