#include "parallax/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

namespace parallax {

namespace {
std::atomic<bool> g_deterministic{false};
}

std::string shape_string(Shape const &s)
{
  std::string out = "(";
  for (std::size_t i = 0; i < s.size(); i++) {
    if (i) { out += ","; }
    out += std::to_string(s[i]);
  }
  return out + ")";
}

void set_deterministic(bool on) { g_deterministic = on; }
bool deterministic() { return g_deterministic; }

int thread_count()
{
  if (g_deterministic) { return 1; }
  int n = static_cast<int>(std::thread::hardware_concurrency());
  if (n < 1) { n = 1; }
  if (char const *env = std::getenv("PARALLAX_THREADS")) {
    int const cap = std::atoi(env);
    if (cap >= 1 && cap < n) { n = cap; }
  }
  return n;
}

void parallel_for(Index n, std::function<void(Index)> const &fn)
{
  if (n <= 0) { return; }
  Index const workers = std::min<Index>(thread_count(), n);
  if (workers <= 1) {
    for (Index i = 0; i < n; i++) { fn(i); }
    return;
  }
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(workers));
  for (Index t = 0; t < workers; t++) {
    Index const lo = n * t / workers, hi = n * (t + 1) / workers;
    threads.emplace_back([&, lo, hi] {
      try {
        for (Index i = lo; i < hi; i++) { fn(i); }
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) { error = std::current_exception(); }
      }
    });
  }
  for (auto &th : threads) { th.join(); }
  if (error) { std::rethrow_exception(error); }
}

} // namespace parallax
