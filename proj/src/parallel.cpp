#include "stochsplat/parallel.hpp"

#include <tbb/global_control.h>
#include <tbb/info.h>

#include <memory>
#include <mutex>

namespace stochsplat {

namespace {
std::mutex g_mutex;
std::unique_ptr<tbb::global_control> g_control;
int g_limit = 0;
}  // namespace

void set_thread_limit(int n) {
  std::lock_guard lock(g_mutex);
  g_control.reset();
  g_limit = 0;
  if (n > 0) {
    g_control = std::make_unique<tbb::global_control>(tbb::global_control::max_allowed_parallelism,
                                                      static_cast<std::size_t>(n));
    g_limit = n;
  }
}

int thread_limit() {
  std::lock_guard lock(g_mutex);
  return g_limit > 0 ? g_limit : tbb::info::default_concurrency();
}

}  // namespace stochsplat
