/* Copyright 2026 The rgpnet Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#ifndef RGP_COMMON_HPP_
#define RGP_COMMON_HPP_

#include <cstdint>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>

namespace rgp {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shape/dimension contract violations; the message names the offending
/// dimension.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Bad argument values, invalid configurations, empty inputs.
class ValueError : public Error {
 public:
  using Error::Error;
};

/// File format / filesystem failures.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Training aborted on a non-finite loss; carries the diagnostic checkpoint
/// path when one was written.
class TrainDiverged : public Error {
 public:
  using Error::Error;
};

namespace detail {
template <typename... Args>
std::string format_msg(Args&&... args) {
  std::ostringstream os;
  (os << ... << args);
  return os.str();
}
}  // namespace detail

#define RGP_CHECK(cond, ...)                                        \
  do {                                                              \
    if (!(cond)) throw ::rgp::ValueError(::rgp::detail::format_msg(__VA_ARGS__)); \
  } while (0)

#define RGP_CHECK_SHAPE(cond, ...)                                  \
  do {                                                              \
    if (!(cond)) throw ::rgp::ShapeError(::rgp::detail::format_msg(__VA_ARGS__)); \
  } while (0)

#define RGP_CHECK_IO(cond, ...)                                     \
  do {                                                              \
    if (!(cond)) throw ::rgp::IoError(::rgp::detail::format_msg(__VA_ARGS__)); \
  } while (0)

/// Kernel parallelism bound: RGP_THREADS if set, else hardware concurrency.
int thread_count();

/// Runs fn over disjoint [begin,end) chunks of [0,n). Each index is touched by
/// exactly one invocation, so results are bit-identical for any thread count.
void parallel_for(int64_t n, const std::function<void(int64_t, int64_t)>& fn);

}  // namespace rgp

#endif  // RGP_COMMON_HPP_
